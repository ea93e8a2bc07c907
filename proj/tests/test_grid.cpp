#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "pfsim/errors.hpp"
#include "pfsim/grid.hpp"

using namespace pfsim;
using std::numbers::pi;

namespace {

double sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Vec sample(const Grid& g, const std::function<double(double, double)>& fn) {
  Vec z(g.size());
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) z[g.index(i, j)] = fn(g.x(i), g.y(j));
  return z;
}

}  // namespace

TEST_CASE("grid construction") {
  const Grid g = build_grid(1.0, 1.0, 4, 4);
  CHECK(g.size() == 20);
  CHECK(g.rows() == 5);
  CHECK(g.hx() == 0.25);
  CHECK(g.hy() == 0.25);
  CHECK(g.index(3, 2) == 11);
  CHECK(g.boundary_row(0));
  CHECK(g.boundary_row(4));
  CHECK_FALSE(g.boundary_row(2));

  CHECK_THROWS_AS(build_grid(1.0, 1.0, 3, 8), ConfigError);
  CHECK_THROWS_AS(build_grid(1.0, 1.0, 8, 1), ConfigError);
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 8, 8), ConfigError);
  CHECK_THROWS_AS(build_grid(1.0, -1.0, 8, 8), ConfigError);
}

TEST_CASE("mass vectors reproduce the measures") {
  const Grid g = build_grid(2.0, 1.0, 8, 4);
  const auto m = assemble_masses(g);
  CHECK(sum(m.bulk) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sum(m.surf) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sum(m.comb) == doctest::Approx(6.0).epsilon(1e-15));

  const auto w = oracle::comb_weights(g);
  for (std::size_t p = 0; p < g.size(); ++p) {
    CHECK(m.comb[p] == doctest::Approx(w[p]).epsilon(1e-15));
    CHECK(m.comb[p] == doctest::Approx(m.bulk[p] + m.surf[p]).epsilon(1e-15));
    CHECK(m.bulk[p] > 0.0);
    CHECK(m.surf[p] >= 0.0);
  }

  for (auto [nx, ny] : {std::pair{4, 2}, {16, 8}, {64, 64}, {5, 7}}) {
    const Grid h = build_grid(1.3, 0.7, nx, ny);
    const auto mh = assemble_masses(h);
    CHECK(sum(mh.bulk) == doctest::Approx(h.bulk_measure()).epsilon(1e-12));
    CHECK(sum(mh.surf) == doctest::Approx(h.surface_measure()).epsilon(1e-12));
  }
}

TEST_CASE("stiffness annihilates constants and matches the dense form") {
  for (auto [nx, ny] : {std::pair{4, 2}, {8, 8}, {9, 5}}) {
    const Grid g = build_grid(1.0, 1.5, nx, ny);
    const StiffnessOp K(g);
    const Vec ones(g.size(), 1.0);
    for (double v : K.apply(ones)) CHECK(std::abs(v) <= 1e-12);

    const Eigen::MatrixXd D = oracle::dense_stiffness(g);
    const Vec z = oracle::random_vector(g.size(), 7);
    const Vec Kz = K.apply(z);
    const Eigen::VectorXd ref = D * Eigen::Map<const Eigen::VectorXd>(z.data(), z.size());
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(Kz[p] == doctest::Approx(ref(p)).epsilon(1e-12));
    for (std::size_t p = 0; p < g.size(); ++p)
      CHECK(K.diagonal()[p] == doctest::Approx(D(p, p)).epsilon(1e-14));
  }
}

TEST_CASE("stiffness is symmetric positive semidefinite") {
  const Grid g = build_grid(1.0, 1.0, 16, 8);
  const StiffnessOp K(g);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Vec z = oracle::random_vector(g.size(), seed);
    const Vec w = oracle::random_vector(g.size(), seed + 1000);
    const Vec Kz = K.apply(z), Kw = K.apply(w);
    const double a = std::inner_product(w.begin(), w.end(), Kz.begin(), 0.0);
    const double b = std::inner_product(z.begin(), z.end(), Kw.begin(), 0.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(K.bilinear(z, w) == doctest::Approx(a).epsilon(1e-12));
    CHECK(K.energy(z) >= 0.0);
    const double zKz = std::inner_product(z.begin(), z.end(), Kz.begin(), 0.0);
    CHECK(K.energy(z) == doctest::Approx(zKz).epsilon(1e-12));
  }
}

TEST_CASE("surface stiffness of a boundary cosine") {
  const Grid g = build_grid(1.0, 1.0, 8, 4);
  const StiffnessOp K(g);
  const Vec z = sample(g, [](double x, double) { return std::cos(2.0 * pi * x); });
  Vec ks(g.size());
  K.apply_surf(z, ks);
  // Direct edge sum over both boundary circles.
  double direct = 0.0;
  for (int j : {0, g.ny()})
    for (int i = 0; i < g.nx(); ++i) {
      const double d = z[g.index((i + 1) % g.nx(), j)] - z[g.index(i, j)];
      direct += d * d / g.hx();
    }
  const double zKs = std::inner_product(z.begin(), z.end(), ks.begin(), 0.0);
  CHECK(zKs == doctest::Approx(direct).epsilon(1e-13));
  // Closed form of the periodic second difference on 8 points.
  CHECK(zKs == doctest::Approx(2.0 * 8.0 * 4.0 * std::sin(pi / 8.0) * std::sin(pi / 8.0) * 0.5 * 8.0)
                   .epsilon(1e-13));
}

TEST_CASE("surface part vanishes on interior-supported fields") {
  const Grid g = build_grid(1.0, 1.0, 8, 6);
  const StiffnessOp K(g);
  Vec z = oracle::random_vector(g.size(), 3);
  for (int i = 0; i < g.nx(); ++i) z[g.index(i, 0)] = z[g.index(i, g.ny())] = 0.0;
  const Vec w = oracle::random_vector(g.size(), 4);
  Vec ks(g.size());
  K.apply_surf(w, ks);
  CHECK(std::abs(std::inner_product(z.begin(), z.end(), ks.begin(), 0.0)) <= 1e-14);
}

TEST_CASE("stiffness preserves zero mean of the image") {
  const Grid g = build_grid(1.0, 2.0, 12, 6);
  const StiffnessOp K(g);
  const Vec Kz = K.apply(oracle::random_vector(g.size(), 11));
  CHECK(std::abs(sum(Kz)) <= 1e-12);
}

TEST_CASE("SPD solves") {
  const Grid g = build_grid(1.0, 1.0, 16, 16);
  const auto m = assemble_masses(g);
  const StiffnessOp K(g);
  const double tau = 0.01;

  SUBCASE("identity") {
    const Vec rhs = oracle::random_vector(g.size(), 5);
    const Vec ones(g.size(), 1.0);
    const auto r = solve_spd([](std::span<const double> x, std::span<double> y) {
      std::copy(x.begin(), x.end(), y.begin());
    }, ones, rhs);
    for (std::size_t p = 0; p < g.size(); ++p) CHECK(r.x[p] == doctest::Approx(rhs[p]).epsilon(1e-12));
  }

  Vec diag(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) diag[p] = m.comb[p] / tau + K.diagonal()[p];
  auto A = [&](std::span<const double> x, std::span<double> y) {
    K.apply(x, y);
    for (std::size_t p = 0; p < x.size(); ++p) y[p] += m.comb[p] / tau * x[p];
  };

  SUBCASE("mass-shifted stiffness on constants") {
    const auto r = solve_spd(A, diag, m.comb);
    for (double v : r.x) CHECK(v == doctest::Approx(tau).epsilon(1e-9));
  }

  SUBCASE("random right-hand side against a dense Cholesky solve") {
    const Vec rhs = oracle::random_vector(g.size(), 9);
    const auto r = solve_spd(A, diag, rhs, 1e-13);
    Eigen::MatrixXd D = oracle::dense_stiffness(g);
    const auto w = oracle::comb_weights(g);
    for (std::size_t p = 0; p < g.size(); ++p) D(p, p) += w[p] / tau;
    const Eigen::VectorXd ref =
        D.llt().solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size()));
    double err = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) err = std::max(err, std::abs(r.x[p] - ref(p)));
    CHECK(err <= 1e-8 * ref.cwiseAbs().maxCoeff());
  }

  SUBCASE("iteration budget exhaustion") {
    const Vec rhs = oracle::random_vector(g.size(), 9);
    CHECK_THROWS_AS(solve_spd(A, diag, rhs, 1e-14, 1), SolverError);
  }
}

namespace {

// (K z) / m_comb at coarse node (i, j), evaluated on a grid refined by factor.
Vec scaled_operator(int n, const std::function<double(double, double)>& fn,
                    void (StiffnessOp::*part)(std::span<const double>, std::span<double>) const,
                    const Vec MassVectors::*weight) {
  const Grid g = build_grid(1.0, 1.0, n, n);
  const auto m = assemble_masses(g);
  const StiffnessOp K(g);
  const Vec z = sample(g, fn);
  Vec out(g.size());
  (K.*part)(z, out);
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double w = (m.*weight)[p];
    out[p] = w > 0.0 ? out[p] / w : 0.0;
  }
  return out;
}

// Maximum difference between grids n and 2n on the nodes of the coarse grid
// of size n0 whose row index passes the filter.
double coarse_diff(int n0, int n, const Vec& a, const Vec& b, const std::function<bool(int)>& rows) {
  const int ra = n / n0, rb = 2 * n / n0;
  double d = 0.0;
  for (int j = 0; j <= n0; ++j) {
    if (!rows(j)) continue;
    for (int i = 0; i < n0; ++i) {
      const double va = a[static_cast<std::size_t>(j * ra) * n + i * ra];
      const double vb = b[static_cast<std::size_t>(j * rb) * (2 * n) + i * rb];
      d = std::max(d, std::abs(va - vb));
    }
  }
  return d;
}

}  // namespace

TEST_CASE("operator refinement: interior rows converge at second order") {
  auto fn = [](double x, double y) { return std::cos(2.0 * pi * x) * std::cos(pi * y) + y * y * y; };
  const int n0 = 8;
  const Vec a = scaled_operator(8, fn, &StiffnessOp::apply, &MassVectors::comb);
  const Vec b = scaled_operator(16, fn, &StiffnessOp::apply, &MassVectors::comb);
  const Vec c = scaled_operator(32, fn, &StiffnessOp::apply, &MassVectors::comb);
  auto interior = [&](int j) { return j > 0 && j < n0; };
  const double ratio = coarse_diff(n0, 8, a, b, interior) / coarse_diff(n0, 16, b, c, interior);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("operator refinement: surface operator converges at second order") {
  auto fn = [](double x, double y) { return std::sin(2.0 * pi * x) * (1.0 + y) + std::cos(4.0 * pi * x); };
  const int n0 = 8;
  const Vec a = scaled_operator(8, fn, &StiffnessOp::apply_surf, &MassVectors::surf);
  const Vec b = scaled_operator(16, fn, &StiffnessOp::apply_surf, &MassVectors::surf);
  const Vec c = scaled_operator(32, fn, &StiffnessOp::apply_surf, &MassVectors::surf);
  auto boundary = [&](int j) { return j == 0 || j == n0; };
  const double ratio = coarse_diff(n0, 8, a, b, boundary) / coarse_diff(n0, 16, b, c, boundary);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("operator refinement: combined boundary rows are first-order consistent") {
  // On a boundary row (K z) / m_comb tends to d_nu z - z_xx, but the half-cell
  // bulk term adds (h/2)(-Lap z - d_nu z + z_xx), so the error halves with h.
  // Weak x-dependence keeps the second-order tangential error below the
  // first-order normal term at these resolutions.
  auto fn = [](double x, double y) { return y * y * (1.0 + 0.05 * std::cos(2.0 * pi * x)); };
  auto limit = [](double x, double y) {
    const double c = std::cos(2.0 * pi * x);
    return y == 0.0 ? 0.0 : 2.0 * (1.0 + 0.05 * c) + 0.05 * 4.0 * pi * pi * c;
  };
  auto error = [&](int n) {
    const Grid g = build_grid(1.0, 1.0, n, n);
    const Vec v = scaled_operator(n, fn, &StiffnessOp::apply, &MassVectors::comb);
    double e = 0.0;
    for (int j : {0, n})
      for (int i = 0; i < n; ++i) e = std::max(e, std::abs(v[g.index(i, j)] - limit(g.x(i), g.y(j))));
    return e;
  };
  const double ratio = error(32) / error(64);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.125));
}

TEST_CASE("operator refinement: coupled elliptic solve converges at second order") {
  auto g_fn = [](double x, double y) { return std::cos(2.0 * pi * x) * (1.0 + y * y) + std::sin(pi * y); };
  auto solve = [&](int n) {
    const Grid g = build_grid(1.0, 1.0, n, n);
    const auto m = assemble_masses(g);
    const StiffnessOp K(g);
    const Vec gv = sample(g, g_fn);
    Vec rhs(g.size()), diag(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
      rhs[p] = m.comb[p] * gv[p];
      diag[p] = m.comb[p] + K.diagonal()[p];
    }
    return solve_spd([&](std::span<const double> x, std::span<double> y) {
      K.apply(x, y);
      for (std::size_t p = 0; p < x.size(); ++p) y[p] += m.comb[p] * x[p];
    }, diag, rhs, 1e-13).x;
  };
  const int n0 = 8;
  const Vec a = solve(8), b = solve(16), c = solve(32);
  auto all = [](int) { return true; };
  const double ratio = coarse_diff(n0, 8, a, b, all) / coarse_diff(n0, 16, b, c, all);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("first nontrivial eigenvalue of the coupled form") {
  // Continuous: x-independent odd mode sin(beta (y - 1/2)) with
  // tan(beta/2) = 1/beta on the unit strip, eigenvalue beta^2.
  const double beta =
      oracle::bisect([](double b) { return std::tan(0.5 * b) - 1.0 / b; }, 0.5, 3.0);
  const double exact = beta * beta;

  auto discrete = [](int n) {
    const Grid g = build_grid(1.0, 1.0, n, n);
    const auto m = assemble_masses(g);
    const StiffnessOp K(g);
    const double total = std::accumulate(m.comb.begin(), m.comb.end(), 0.0);
    Vec v = oracle::random_vector(g.size(), 1), diag(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) diag[p] = m.comb[p] + K.diagonal()[p];
    auto deflate = [&](Vec& x) {
      double mean = 0.0;
      for (std::size_t p = 0; p < x.size(); ++p) mean += m.comb[p] * x[p];
      mean /= total;
      for (double& e : x) e -= mean;
      double nrm = 0.0;
      for (std::size_t p = 0; p < x.size(); ++p) nrm += m.comb[p] * x[p] * x[p];
      for (double& e : x) e /= std::sqrt(nrm);
    };
    deflate(v);
    double rq = 0.0;
    // Inverse iteration with (K + M)^{-1} M, orthogonal to constants.
    for (int it = 0; it < 200; ++it) {
      Vec rhs(g.size());
      for (std::size_t p = 0; p < g.size(); ++p) rhs[p] = m.comb[p] * v[p];
      v = solve_spd([&](std::span<const double> x, std::span<double> y) {
        K.apply(x, y);
        for (std::size_t p = 0; p < x.size(); ++p) y[p] += m.comb[p] * x[p];
      }, diag, rhs, 1e-12, 0, v).x;
      deflate(v);
      const double next = K.energy(v);
      if (std::abs(next - rq) <= 1e-12 * next) break;
      rq = next;
    }
    return rq;
  };
  const double l32 = discrete(32), l64 = discrete(64);
  CHECK(std::abs(l64 - exact) <= 0.05 * exact);
  CHECK(std::abs(l64 - exact) < std::abs(l32 - exact));
  // Richardson extrapolation from the two resolutions is closer still.
  const double rich = (4.0 * l64 - l32) / 3.0;
  CHECK(std::abs(rich - exact) < std::abs(l64 - exact));
}
