#include "pfsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "pfsim/errors.hpp"

namespace pfsim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("expected a finite real number, got '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

void require(bool cond, const char* what) {
  if (!cond) throw ConfigError(what);
}

struct Key {
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <class Get>
Key real(Get get, std::function<bool(double)> ok, const char* bound) {
  return {[=](Config& c, const std::string& v) {
            const double x = parse_double(v);
            require(ok(x), bound);
            get(c) = x;
          },
          [=](const Config& c) { return fmt_double(get(const_cast<Config&>(c))); }};
}

template <class Get>
Key integer(Get get, long long lo, const char* bound) {
  return {[=](Config& c, const std::string& v) {
            const long long x = parse_int(v);
            require(x >= lo && x <= 1'000'000'000LL, bound);
            get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(x);
          },
          [=](const Config& c) { return std::to_string(get(const_cast<Config&>(c))); }};
}

bool any(double) { return true; }
bool positive(double x) { return x > 0.0; }
bool nonneg(double x) { return x >= 0.0; }

void add_field_keys(std::map<std::string, Key>& keys, const std::string& name,
                    FieldInit Config::Init::*field) {
  auto f = [field](Config& c) -> FieldInit& { return c.init.*field; };
  keys["init." + name] = {
      [f](Config& c, const std::string& v) { f(c).preset = init_preset_from_string(v); },
      [f](const Config& c) {
        return std::string(to_string(f(const_cast<Config&>(c)).preset));
      }};
  keys["init." + name + "_value"] =
      real([f](Config& c) -> double& { return f(c).value; }, any, "");
  keys["init." + name + "_amplitude"] =
      real([f](Config& c) -> double& { return f(c).amplitude; }, any, "");
  keys["init." + name + "_kx"] =
      integer([f](Config& c) -> int& { return f(c).kx; }, 0, "init kx must be >= 0");
  keys["init." + name + "_width"] = real([f](Config& c) -> double& { return f(c).width; },
                                         positive, "init width must be positive");
}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> k;
    k["domain.lx"] = real([](Config& c) -> double& { return c.domain.lx; }, positive,
                          "domain.lx must be positive");
    k["domain.ly"] = real([](Config& c) -> double& { return c.domain.ly; }, positive,
                          "domain.ly must be positive");
    k["domain.nx"] =
        integer([](Config& c) -> int& { return c.domain.nx; }, 4, "domain.nx must be >= 4");
    k["domain.ny"] =
        integer([](Config& c) -> int& { return c.domain.ny; }, 2, "domain.ny must be >= 2");
    k["time.dt"] =
        real([](Config& c) -> double& { return c.time.dt; }, positive, "time.dt must be positive");
    k["time.t_end"] = real([](Config& c) -> double& { return c.time.t_end; }, nonneg,
                           "time.t_end must be >= 0");
    k["time.snapshot_every"] = integer([](Config& c) -> int& { return c.time.snapshot_every; },
                                       0, "time.snapshot_every must be >= 0");
    k["time.min_dt"] = real([](Config& c) -> double& { return c.time.min_dt; }, positive,
                            "time.min_dt must be positive");

    for (const auto& [sec, pot] :
         {std::pair{"potential_bulk", &Config::potential_bulk},
          std::pair{"potential_surf", &Config::potential_surf}}) {
      const auto member = pot;
      k[std::string(sec) + ".kind"] = {
          [member](Config& c, const std::string& v) {
            (c.*member).kind = potential_kind_from_string(v);
          },
          [member](const Config& c) { return std::string(to_string((c.*member).kind)); }};
      k[std::string(sec) + ".delta"] =
          real([member](Config& c) -> double& { return (c.*member).delta; }, nonneg,
               "potential delta must be >= 0");
    }
    for (const auto& [sec, lat] : {std::pair{"latent_bulk", &Config::latent_bulk},
                                   std::pair{"latent_surf", &Config::latent_surf}}) {
      const auto member = lat;
      k[std::string(sec) + ".a"] = real([member](Config& c) -> double& { return (c.*member).a; }, any, "");
      k[std::string(sec) + ".b"] = real([member](Config& c) -> double& { return (c.*member).b; }, any, "");
      k[std::string(sec) + ".c"] = real([member](Config& c) -> double& { return (c.*member).c; }, any, "");
    }

    k["source.kind"] = {
        [](Config& c, const std::string& v) { c.source.kind = source_kind_from_string(v); },
        [](const Config& c) { return std::string(to_string(c.source.kind)); }};
    k["source.amplitude"] =
        real([](Config& c) -> double& { return c.source.amplitude; }, any, "");
    k["source.kx"] =
        integer([](Config& c) -> int& { return c.source.kx; }, 0, "source.kx must be >= 0");
    k["source.omega"] = real([](Config& c) -> double& { return c.source.omega; }, any, "");

    add_field_keys(k, "theta", &Config::Init::theta);
    add_field_keys(k, "chi", &Config::Init::chi);
    k["init.seed"] = {
        [](Config& c, const std::string& v) {
          const long long s = parse_int(v);
          require(s >= 0, "init.seed must be >= 0");
          c.init.seed = static_cast<std::uint64_t>(s);
        },
        [](const Config& c) { return std::to_string(c.init.seed); }};

    k["solver.newton_tol"] = real([](Config& c) -> double& { return c.solver.newton_tol; },
                                  positive, "solver.newton_tol must be positive");
    k["solver.newton_max_iter"] =
        integer([](Config& c) -> int& { return c.solver.newton_max_iter; }, 1,
                "solver.newton_max_iter must be >= 1");
    k["solver.cg_tol"] =
        real([](Config& c) -> double& { return c.solver.cg_tol; },
             [](double x) { return x > 0.0 && x < 1.0; }, "solver.cg_tol must lie in (0, 1)");
    k["solver.guard_eps"] =
        real([](Config& c) -> double& { return c.solver.guard_eps; },
             [](double x) { return x > 0.0 && x < 1.0; }, "solver.guard_eps must lie in (0, 1)");

    k["output.dir"] = {[](Config& c, const std::string& v) {
                         require(!v.empty(), "output.dir must not be empty");
                         c.output.dir = v;
                       },
                       [](const Config& c) { return c.output.dir; }};
    k["output.write_pgm"] = {
        [](Config& c, const std::string& v) { c.output.write_pgm = parse_bool(v); },
        [](const Config& c) { return std::string(c.output.write_pgm ? "true" : "false"); }};
    return k;
  }();
  return table;
}

const std::vector<std::string> kRequired = {
    "domain.lx", "domain.ly", "domain.nx", "domain.ny", "time.dt",
    "time.t_end", "potential_bulk.kind", "potential_surf.kind"};

// Portable uniform draw in [0, 1) from the fully specified mt19937_64 stream.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec sample_field(const FieldInit& init, const Grid& g, std::mt19937_64& rng) {
  Vec v(g.size(), init.value);
  const double two_pi = 2.0 * std::numbers::pi;
  switch (init.preset) {
    case InitPreset::constant:
      break;
    case InitPreset::sinusoid:
      for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
          v[g.index(i, j)] += init.amplitude * std::cos(two_pi * init.kx * g.x(i) / g.lx());
      break;
    case InitPreset::tanh_stripe:
      for (int j = 0; j <= g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
          v[g.index(i, j)] += init.amplitude * std::tanh((g.y(j) - 0.5 * g.ly()) / init.width);
      break;
    case InitPreset::random: {
      const int K = std::max(init.kx, 1);
      Vec noise(g.size(), 0.0);
      for (int kx = 0; kx <= K; ++kx) {
        for (int ky = 0; ky <= K; ++ky) {
          if (kx == 0 && ky == 0) continue;
          const double a = 2.0 * uniform01(rng) - 1.0;
          const double phase = two_pi * uniform01(rng);
          for (int j = 0; j <= g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i)
              noise[g.index(i, j)] += a * std::cos(two_pi * kx * g.x(i) / g.lx() + phase) *
                                      std::cos(std::numbers::pi * ky * g.y(j) / g.ly());
        }
      }
      double nmax = 0.0;
      for (double x : noise) nmax = std::max(nmax, std::abs(x));
      if (nmax > 0.0)
        for (std::size_t p = 0; p < v.size(); ++p) v[p] += init.amplitude * noise[p] / nmax;
      break;
    }
  }
  return v;
}

}  // namespace

std::string_view to_string(InitPreset p) {
  switch (p) {
    case InitPreset::constant:
      return "constant";
    case InitPreset::sinusoid:
      return "sinusoid";
    case InitPreset::tanh_stripe:
      return "tanh_stripe";
    case InitPreset::random:
      return "random";
  }
  return "unknown";
}

InitPreset init_preset_from_string(std::string_view name) {
  if (name == "constant") return InitPreset::constant;
  if (name == "sinusoid") return InitPreset::sinusoid;
  if (name == "tanh_stripe") return InitPreset::tanh_stripe;
  if (name == "random") return InitPreset::random;
  throw ConfigError("unknown init preset '" + std::string(name) + "'");
}

Config parse_config(std::string_view text) {
  Config c;
  const auto& keys = key_table();
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    try {
      it->second.set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "': " + e.what());
    }
  }
  for (const auto& k : kRequired) {
    if (!seen.count(k)) throw ConfigError("missing required key '" + k + "'");
  }
  if (!seen.count("time.min_dt")) c.time.min_dt = c.time.dt / 1024.0;
  if (c.time.min_dt > c.time.dt) throw ConfigError("key 'time.min_dt': must not exceed time.dt");
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const Config& c) {
  std::string out;
  for (const auto& [key, k] : key_table()) out += key + " = " + k.get(c) + "\n";
  return out;
}

Model make_model(const Config& c) {
  return Model(build_grid(c.domain.lx, c.domain.ly, c.domain.nx, c.domain.ny), c.potential_bulk,
               c.potential_surf, c.latent_bulk, c.latent_surf);
}

StepperConfig make_stepper_config(const Config& c) {
  StepperConfig s;
  s.tau = c.time.dt;
  s.min_tau = c.time.min_dt;
  s.newton_tol = c.solver.newton_tol;
  s.newton_max_iter = c.solver.newton_max_iter;
  s.cg_tol = c.solver.cg_tol;
  s.guard_eps = c.solver.guard_eps;
  return s;
}

HeatSource make_source(const Config& c, const Model& md) {
  return make_heat_source(c.source.kind, c.source.amplitude, c.source.kx, c.source.omega, md);
}

State make_initial_state(const Config& c, const Model& md) {
  std::mt19937_64 rng(c.init.seed);
  const Vec theta = sample_field(c.init.theta, md.grid, rng);
  const Vec chi = sample_field(c.init.chi, md.grid, rng);
  State s = make_state(0.0, theta, chi);
  check_state(s, md);
  return s;
}

ValidationReport validate_config(const Config& c) {
  ValidationReport r;
  const Model md = make_model(c);
  try {
    r.compatibility = check_compatibility(c.potential_bulk, c.potential_surf, kValidationSamples);
    if (!r.compatibility->ok) r.failures.push_back("potential compatibility constants not found");
  } catch (const DomainError& e) {
    r.compatibility_error = e.what();
    r.failures.push_back(std::string("potential compatibility: ") + e.what());
  }
  r.coercivity = check_coercivity(c.potential_bulk, c.potential_surf, c.latent_bulk,
                                  c.latent_surf, kValidationSamples);
  if (!r.coercivity.ok) r.failures.push_back("energy is not coercive on the sampled range");

  r.source_projected_mean = make_source(c, md).projected_mean;

  try {
    const State s0 = make_initial_state(c, md);
    r.initial_data_ok = true;
    r.mu0 = mass_mu(s0, md);
    r.hypotheses = evaluate_hypotheses(r.mu0, md);
    if (!r.hypotheses.admissible) {
      r.failures.push_back("initial mass does not exceed the admissibility bound");
    }
  } catch (const DomainError& e) {
    r.initial_data_error = e.what();
    r.failures.push_back(std::string("initial data: ") + e.what());
  }
  r.ok = r.failures.empty();
  return r;
}

std::string format_report(const ValidationReport& r) {
  std::ostringstream o;
  o.precision(10);
  o << "validation: " << (r.ok ? "ok" : "FAILED") << "\n";
  if (r.compatibility) {
    const auto& cp = *r.compatibility;
    o << "  compatibility: " << (cp.ok ? "ok" : "failed") << " c_s=" << cp.c_s
      << " C_s=" << cp.C_s << " samples=[" << cp.sample_lo << ", " << cp.sample_hi
      << "] margin=" << cp.sample_margin << "\n";
    if (cp.singular_pair) {
      o << "  separation pair: kappa_s=" << cp.kappa_s << " C_s=" << cp.C_s_sing << "\n";
    }
  } else {
    o << "  compatibility: failed (" << r.compatibility_error << ")\n";
  }
  auto side = [&](const char* name, const CoercivityFit& f) {
    o << "  coercivity " << name << ": " << (f.ok ? "ok" : "failed")
      << (f.bounded_domain ? " (bounded domain)" : "") << " c1=" << f.c1 << " c2=" << f.c2
      << "\n";
  };
  side("bulk", r.coercivity.bulk);
  side("surface", r.coercivity.surf);
  o << "  source projected mean: " << r.source_projected_mean << "\n";
  if (r.initial_data_ok) {
    const auto& h = r.hypotheses;
    o << "  initial mass mu0=" << r.mu0 << " admissibility bound=" << h.admissibility_bound
      << (h.admissible ? " (admissible)" : " (NOT admissible)") << "\n";
    o << "  attractor flags: large_mass=" << (h.large_mass ? "yes" : "no")
      << " (bound " << h.large_mass_bound << "), sign_condition="
      << (h.sign_condition ? "yes" : "no") << " (margin " << h.sign_margin << ")\n";
  } else {
    o << "  initial data: invalid (" << r.initial_data_error << ")\n";
  }
  for (const auto& f : r.failures) o << "  failure: " << f << "\n";
  return o.str();
}

}  // namespace pfsim
