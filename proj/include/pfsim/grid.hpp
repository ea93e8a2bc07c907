#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pfsim {

using Vec = std::vector<double>;

/// Periodic strip (0, lx) x (0, ly), periodic in x. Nodes (i, j) with
/// i = 0..nx-1 and j = 0..ny are stored row-major at j*nx + i. Rows j = 0 and
/// j = ny are the two boundary circles and carry the surface unknowns.
class Grid {
public:
  Grid() = default;
  /// Throws ConfigError unless lx, ly > 0, nx >= 4 and ny >= 2.
  Grid(double lx, double ly, int nx, int ny);

  double lx() const { return lx_; }
  double ly() const { return ly_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return lx_ / nx_; }
  double hy() const { return ly_ / ny_; }
  int rows() const { return ny_ + 1; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * (ny_ + 1); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i);
  }
  bool boundary_row(int j) const { return j == 0 || j == ny_; }
  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy(); }

  /// |Omega| and |Gamma| of the continuous strip.
  double bulk_measure() const { return lx_ * ly_; }
  double surface_measure() const { return 2.0 * lx_; }

  bool operator==(const Grid&) const = default;

private:
  double lx_ = 1.0;
  double ly_ = 1.0;
  int nx_ = 4;
  int ny_ = 2;
};

Grid build_grid(double lx, double ly, int nx, int ny);

/// Nodal quadrature weights realizing the bulk, surface and combined measure.
struct MassVectors {
  Vec bulk;
  Vec surf;
  Vec comb;
};

MassVectors assemble_masses(const Grid& g);

/// Weighted Laplacian K = K_bulk + K_surf of the coupled bulk/surface
/// Dirichlet form. Stored as edge weights; K z at a node is the sum over
/// incident edges of w (z_node - z_other).
class StiffnessOp {
public:
  StiffnessOp() = default;
  explicit StiffnessOp(const Grid& g);

  const Grid& grid() const { return grid_; }

  /// out = K z (out is overwritten).
  void apply(std::span<const double> z, std::span<double> out) const;
  Vec apply(std::span<const double> z) const;
  /// Only the bulk or only the surface part of K.
  void apply_bulk(std::span<const double> z, std::span<double> out) const;
  void apply_surf(std::span<const double> z, std::span<double> out) const;

  /// z^T K z as a sum of nonnegative edge terms.
  double energy(std::span<const double> z) const;
  /// z^T K w evaluated edge by edge.
  double bilinear(std::span<const double> z, std::span<const double> w) const;

  const Vec& diagonal() const { return diag_; }

  struct Edge {
    std::size_t a;
    std::size_t b;
    double weight;
  };
  /// Every edge once; K = sum over edges of weight (e_a - e_b)(e_a - e_b)^T.
  std::vector<Edge> edges() const;

private:
  void apply_impl(std::span<const double> z, std::span<double> out, bool bulk,
                  bool surf) const;

  Grid grid_;
  // Horizontal edge weight per row (bulk and surface parts) and vertical weight.
  Vec wx_bulk_;
  Vec wx_surf_;
  double wy_ = 0.0;
  Vec diag_;
};

StiffnessOp assemble_stiffness(const Grid& g);

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct CgResult {
  Vec x;
  int iterations = 0;
  double residual_norm = 0.0;
};

inline constexpr double kDefaultCgTol = 1e-10;

/// Jacobi-preconditioned conjugate gradients for an SPD operator. Returns x
/// with ||apply(x) - rhs||_2 <= tol ||rhs||_2. max_iter <= 0 selects
/// 10 * rhs.size(). Throws SolverError when the iteration budget runs out.
CgResult solve_spd(const LinearOperator& apply, std::span<const double> diag,
                   std::span<const double> rhs, double tol = kDefaultCgTol,
                   int max_iter = 0, std::span<const double> x0 = {});

}  // namespace pfsim
