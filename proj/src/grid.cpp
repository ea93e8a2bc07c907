#include "pfsim/grid.hpp"

#include <cmath>
#include <sstream>

#include "pfsim/errors.hpp"

namespace pfsim {

Grid::Grid(double lx, double ly, int nx, int ny) : lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw ConfigError("grid lengths must be positive and finite");
  }
  if (nx < 4) throw ConfigError("grid needs nx >= 4, got " + std::to_string(nx));
  if (ny < 2) throw ConfigError("grid needs ny >= 2, got " + std::to_string(ny));
}

Grid build_grid(double lx, double ly, int nx, int ny) { return Grid(lx, ly, nx, ny); }

MassVectors assemble_masses(const Grid& g) {
  MassVectors m;
  m.bulk.assign(g.size(), 0.0);
  m.surf.assign(g.size(), 0.0);
  m.comb.assign(g.size(), 0.0);
  const double cell = g.hx() * g.hy();
  for (int j = 0; j <= g.ny(); ++j) {
    const bool bnd = g.boundary_row(j);
    for (int i = 0; i < g.nx(); ++i) {
      const auto p = g.index(i, j);
      m.bulk[p] = bnd ? 0.5 * cell : cell;
      m.surf[p] = bnd ? g.hx() : 0.0;
      m.comb[p] = m.bulk[p] + m.surf[p];
    }
  }
  return m;
}

StiffnessOp::StiffnessOp(const Grid& g) : grid_(g) {
  const int rows = g.rows();
  wx_bulk_.assign(rows, 0.0);
  wx_surf_.assign(rows, 0.0);
  for (int j = 0; j < rows; ++j) {
    const double alpha = g.boundary_row(j) ? 0.5 : 1.0;
    wx_bulk_[j] = g.hy() * alpha / g.hx();
    wx_surf_[j] = g.boundary_row(j) ? 1.0 / g.hx() : 0.0;
  }
  wy_ = g.hx() / g.hy();

  diag_.assign(g.size(), 0.0);
  for (int j = 0; j < rows; ++j) {
    const double vertical = (g.boundary_row(j) ? 1.0 : 2.0) * wy_;
    for (int i = 0; i < g.nx(); ++i) {
      diag_[g.index(i, j)] = 2.0 * (wx_bulk_[j] + wx_surf_[j]) + vertical;
    }
  }
}

void StiffnessOp::apply_impl(std::span<const double> z, std::span<double> out, bool bulk,
                             bool surf) const {
  const int nx = grid_.nx();
  const int rows = grid_.rows();
  for (int j = 0; j < rows; ++j) {
    const double wx = (bulk ? wx_bulk_[j] : 0.0) + (surf ? wx_surf_[j] : 0.0);
    const double wup = (bulk && j + 1 < rows) ? wy_ : 0.0;
    const double wdn = (bulk && j > 0) ? wy_ : 0.0;
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = row + i;
      const std::size_t left = row + (i == 0 ? nx - 1 : i - 1);
      const std::size_t right = row + (i == nx - 1 ? 0 : i + 1);
      double acc = wx * ((z[p] - z[left]) + (z[p] - z[right]));
      if (wup != 0.0) acc += wup * (z[p] - z[p + nx]);
      if (wdn != 0.0) acc += wdn * (z[p] - z[p - nx]);
      out[p] = acc;
    }
  }
}

void StiffnessOp::apply(std::span<const double> z, std::span<double> out) const {
  apply_impl(z, out, true, true);
}

Vec StiffnessOp::apply(std::span<const double> z) const {
  Vec out(z.size());
  apply(z, out);
  return out;
}

void StiffnessOp::apply_bulk(std::span<const double> z, std::span<double> out) const {
  apply_impl(z, out, true, false);
}

void StiffnessOp::apply_surf(std::span<const double> z, std::span<double> out) const {
  apply_impl(z, out, false, true);
}

double StiffnessOp::bilinear(std::span<const double> z, std::span<const double> w) const {
  const int nx = grid_.nx();
  const int rows = grid_.rows();
  double sum = 0.0;
  for (int j = 0; j < rows; ++j) {
    const double wx = wx_bulk_[j] + wx_surf_[j];
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = row + i;
      const std::size_t right = row + (i == nx - 1 ? 0 : i + 1);
      sum += wx * (z[right] - z[p]) * (w[right] - w[p]);
      if (j + 1 < rows) sum += wy_ * (z[p + nx] - z[p]) * (w[p + nx] - w[p]);
    }
  }
  return sum;
}

std::vector<StiffnessOp::Edge> StiffnessOp::edges() const {
  const int nx = grid_.nx();
  const int rows = grid_.rows();
  std::vector<Edge> out;
  out.reserve(2 * grid_.size());
  for (int j = 0; j < rows; ++j) {
    const double wx = wx_bulk_[j] + wx_surf_[j];
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = row + i;
      out.push_back({p, row + (i == nx - 1 ? 0 : i + 1), wx});
      if (j + 1 < rows) out.push_back({p, p + nx, wy_});
    }
  }
  return out;
}

double StiffnessOp::energy(std::span<const double> z) const { return bilinear(z, z); }

StiffnessOp assemble_stiffness(const Grid& g) { return StiffnessOp(g); }

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

CgResult solve_spd(const LinearOperator& apply, std::span<const double> diag,
                   std::span<const double> rhs, double tol, int max_iter,
                   std::span<const double> x0) {
  const std::size_t n = rhs.size();
  if (diag.size() != n) throw SolverError("solve_spd: diagonal size mismatch");
  if (!(tol > 0.0)) throw SolverError("solve_spd: tolerance must be positive");
  if (max_iter <= 0) max_iter = static_cast<int>(10 * n);

  CgResult res;
  res.x.assign(n, 0.0);
  if (x0.size() == n) res.x.assign(x0.begin(), x0.end());

  const double bnorm = std::sqrt(dot(rhs, rhs));
  if (bnorm == 0.0) {
    res.x.assign(n, 0.0);
    return res;
  }
  const double target = tol * bnorm;

  Vec r(n), z(n), p(n), q(n);
  apply(res.x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - q[k];
  double rnorm = std::sqrt(dot(r, r));
  if (rnorm <= target) {
    res.residual_norm = rnorm;
    return res;
  }
  for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
  p = z;
  double rz = dot(r, z);

  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw SolverError("solve_spd: operator is not positive definite");
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      res.x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    rnorm = std::sqrt(dot(r, r));
    if (rnorm <= target) {
      res.iterations = it;
      res.residual_norm = rnorm;
      return res;
    }
    for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  std::ostringstream msg;
  msg << "solve_spd: no convergence in " << max_iter << " iterations (residual " << rnorm
      << ", target " << target << ")";
  throw SolverError(msg.str());
}

}  // namespace pfsim
