#include <doctest.h>

#include <random>
#include <string>

#include "oracles.hpp"
#include "pfsim/config.hpp"
#include "pfsim/errors.hpp"

using namespace pfsim;

namespace {

const char* kMinimal = R"(# minimal problem
domain.lx = 1
domain.ly = 1
domain.nx = 16
domain.ny = 8
time.dt = 1e-3
time.t_end = 0.1
potential_bulk.kind = logarithmic
potential_surf.kind = logarithmic
latent_bulk.a = 1
latent_surf.a = 1
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal configuration gets defaults") {
  const Config c = parse_config(kMinimal);
  CHECK(c.domain.nx == 16);
  CHECK(c.domain.ny == 8);
  CHECK(c.time.dt == 1e-3);
  CHECK(c.time.min_dt == 1e-3 / 1024.0);
  CHECK(c.time.snapshot_every == 0);
  CHECK(c.potential_bulk.kind == PotentialKind::logarithmic);
  CHECK(c.potential_bulk.delta == 0.0);
  CHECK(c.latent_bulk.a == 1.0);
  CHECK(c.latent_surf.b == 0.0);
  CHECK(c.source.kind == SourceKind::zero);
  CHECK(c.solver.newton_tol == 1e-10);
  CHECK(c.solver.newton_max_iter == 50);
  CHECK(c.solver.guard_eps == 1e-12);
  CHECK(c.init.theta.preset == InitPreset::constant);
  CHECK(c.init.theta.value == 1.0);
  CHECK(c.output.dir == "output");
  CHECK_FALSE(c.output.write_pgm);
}

TEST_CASE("parse errors name the line and key") {
  std::string text = kMinimal;
  const std::string bad_nx = std::string(kMinimal).replace(text.find("domain.nx = 16"), 14, "domain.nx = 3");
  const std::string e1 = error_of(bad_nx);
  CHECK(e1.find("line 4") != std::string::npos);
  CHECK(e1.find("domain.nx") != std::string::npos);

  const std::string e2 = error_of(text + "time.dt = 2e-3\n");
  CHECK(e2.find("duplicate key 'time.dt'") != std::string::npos);
  CHECK(e2.find("line 12") != std::string::npos);

  CHECK(error_of(text + "domain.nz = 4\n").find("unknown key 'domain.nz'") != std::string::npos);
  CHECK(error_of(text + "time.t_end\n").find("line 12") != std::string::npos);
  CHECK(error_of(text + "init.seed = -3\n").find("init.seed") != std::string::npos);
  CHECK(error_of(text + "output.write_pgm = maybe\n").find("output.write_pgm") != std::string::npos);
  CHECK(error_of(text + "source.kind = gaussian\n").find("source.kind") != std::string::npos);
  CHECK(error_of(text + "time.min_dt = 1\n").find("min_dt") != std::string::npos);
  CHECK_FALSE(error_of(std::string(kMinimal).substr(0, text.find("time.dt"))).empty());
  CHECK(error_of("domain.lx = 1 # trailing comment\n").find("missing required key") != std::string::npos);
  CHECK(error_of(std::string(kMinimal).replace(text.find("= 1e-3"), 6, "= abc")).find("time.dt") !=
        std::string::npos);
}

TEST_CASE("configuration round-trips through serialization") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.001, 10.0);
  std::uniform_int_distribution<int> n(4, 200);
  for (int k = 0; k < 200; ++k) {
    Config c;
    c.domain = {u(rng), u(rng), n(rng), n(rng)};
    c.time.dt = u(rng) * 1e-3;
    c.time.min_dt = c.time.dt / (1 + n(rng));
    c.time.t_end = u(rng);
    c.time.snapshot_every = n(rng);
    c.potential_bulk = {k % 2 ? PotentialKind::quartic : PotentialKind::logarithmic, u(rng)};
    c.potential_surf = {PotentialKind::logarithmic, u(rng) / 3.0};
    c.latent_bulk = {u(rng) - 5, -u(rng), 1.0 / 3.0};
    c.latent_surf = {0.1 + k, 1e-300, -2.5e17};
    c.source = {k % 3 ? SourceKind::sinusoid : SourceKind::zero, u(rng), n(rng), u(rng)};
    c.init.theta = {InitPreset::random, u(rng), u(rng), n(rng), u(rng)};
    c.init.chi = {InitPreset::tanh_stripe, -u(rng) / 20, u(rng) / 20, n(rng), u(rng)};
    c.init.seed = rng();
    c.init.seed >>= 1;
    c.solver = {u(rng) * 1e-12, n(rng), u(rng) * 1e-3 / 10.0, 1e-12 * u(rng)};
    c.output = {"out/run_" + std::to_string(k), k % 2 == 0};
    const Config back = parse_config(serialize_config(c));
    CHECK(back == c);
    if (!(back == c)) break;
  }
}

TEST_CASE("shipped configurations parse") {
  for (const char* name : {"stripe", "relax", "homogeneous", "inadmissible"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(PFSIM_SOURCE_DIR) + "/configs/" + name + ".cfg"));
  }
  CHECK_THROWS_AS(load_config("/nonexistent/pfsim.cfg"), ConfigError);
}

TEST_CASE("validation of potential pairs") {
  Config c = parse_config(kMinimal);
  const auto ok = validate_config(c);
  CHECK(ok.ok);
  REQUIRE(ok.compatibility);
  CHECK(ok.compatibility->c_s == 1.0);
  CHECK(ok.compatibility->C_s == 0.0);
  CHECK(ok.initial_data_ok);

  // Regular surface potential on a singular bulk: domain inclusion fails.
  c.potential_surf.kind = PotentialKind::quartic;
  const auto bad = validate_config(c);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.compatibility);
  CHECK_FALSE(bad.compatibility_error.empty());
  CHECK_FALSE(format_report(bad).find("FAILED") == std::string::npos);

  // Singular surface potential on a regular bulk: inclusion holds.
  c.potential_bulk.kind = PotentialKind::quartic;
  c.potential_surf.kind = PotentialKind::logarithmic;
  CHECK(validate_config(c).ok);
}

TEST_CASE("validation records the projected source mean") {
  Config c = parse_config(kMinimal);
  c.source = {SourceKind::sinusoid, 0.7, 0, 2.0};
  const auto r0 = validate_config(c);
  CHECK(r0.ok);
  CHECK(r0.source_projected_mean == doctest::Approx(0.7).epsilon(1e-14));

  c.source.kx = 2;
  const auto r2 = validate_config(c);
  CHECK(r2.ok);
  CHECK(r2.source_projected_mean <= 1e-15);

  // The projected profile has zero dm-mean.
  const Model md = make_model(c);
  c.source.kx = 0;
  const HeatSource h = make_source(c, md);
  double mean = 0.0;
  for (std::size_t p = 0; p < h.profile.size(); ++p) mean += md.mass.comb[p] * h.profile[p];
  CHECK(std::abs(mean) <= 1e-14);
}

TEST_CASE("validation rejects inadmissible and out-of-domain initial data") {
  const Config c = load_config(std::string(PFSIM_SOURCE_DIR) + "/configs/inadmissible.cfg");
  const auto r = validate_config(c);
  CHECK_FALSE(r.ok);
  CHECK(r.initial_data_ok);
  CHECK_FALSE(r.hypotheses.admissible);

  Config d = parse_config(kMinimal);
  d.init.chi = {InitPreset::constant, 1.0, 0.0, 1, 0.1};
  const auto r2 = validate_config(d);
  CHECK_FALSE(r2.ok);
  CHECK_FALSE(r2.initial_data_ok);
}

TEST_CASE("initial presets") {
  Config c = parse_config(kMinimal);
  c.init.theta = {InitPreset::sinusoid, 2.0, 0.5, 2, 0.1};
  c.init.chi = {InitPreset::tanh_stripe, 0.1, 0.5, 1, 0.2};
  const Model md = make_model(c);
  const State s = make_initial_state(c, md);
  const Grid& g = md.grid;
  const auto th = s.theta();
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t p = g.index(i, j);
      CHECK(th[p] == doctest::Approx(2.0 + 0.5 * std::cos(2.0 * M_PI * 2 * g.x(i))).epsilon(1e-14));
      CHECK(s.chi[p] == doctest::Approx(0.1 + 0.5 * std::tanh((g.y(j) - 0.5) / 0.2)).epsilon(1e-14));
    }

  c.init.chi = {InitPreset::random, 0.0, 0.4, 3, 0.1};
  c.init.seed = 77;
  const State a = make_initial_state(c, md), b = make_initial_state(c, md);
  CHECK(a.chi == b.chi);
  double amax = 0.0;
  for (double x : a.chi) amax = std::max(amax, std::abs(x));
  CHECK(amax == doctest::Approx(0.4).epsilon(1e-14));
  c.init.seed = 78;
  CHECK_FALSE(make_initial_state(c, md).chi == a.chi);
}
