#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "pfsim/functionals.hpp"

namespace pfsim {

struct StepperConfig {
  double tau = 1e-3;
  /// Relative to the initial M-weighted residual, floored at kNewtonAbsFloor.
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double guard_eps = 1e-12;
  double min_tau = 1e-3 / 1024.0;
  double cg_tol = kDefaultCgTol;
  double backtrack_factor = 0.5;

  /// Throws ConfigError on violated bounds.
  void validate() const;
};

inline constexpr double kNewtonAbsFloor = 1e-12;

enum class SourceKind { zero, sinusoid };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view name);

/// Separable heat source H(x, t) = cos(omega t) g(x), the same density in the
/// bulk and on the boundary. g is projected to zero dm-mean at construction.
struct HeatSource {
  SourceKind kind = SourceKind::zero;
  Vec profile;
  double omega = 0.0;
  /// |m(g)| of the raw profile before projection.
  double projected_mean = 0.0;

  bool active() const { return kind != SourceKind::zero; }
  /// Nodal density at time t; empty when inactive.
  Vec at(double t) const;
};

/// g(x, y) = amplitude cos(2 pi kx x / lx).
HeatSource make_heat_source(SourceKind kind, double amplitude, int kx, double omega,
                            const Model& md);

/// M-weighted residual norm sqrt(sum R_p^2 / m_p).
double residual_norm(std::span<const double> R, const MassVectors& m);

struct NewtonOutcome {
  Vec x;
  int iterations = 0;
  double residual = 0.0;
};

/// Backward-Euler phase step with convex splitting: f implicit, the concave
/// part and the temperature coupling lagged at the old state.
NewtonOutcome step_chi(const State& s, double tau, const StepperConfig& cfg, const Model& md);

/// Implicit entropy-variable step with chi_new frozen. heat is the nodal
/// source density (empty for zero).
NewtonOutcome step_theta(const State& s, std::span<const double> chi_new,
                         std::span<const double> heat, double tau, const StepperConfig& cfg,
                         const Model& md);

/// Residual vectors of both step systems, exposed for verification.
Vec chi_step_residual(const State& s, std::span<const double> chi, double tau,
                      const Model& md);
Vec theta_step_residual(const State& s, std::span<const double> chi_new,
                        std::span<const double> u, std::span<const double> heat, double tau,
                        const Model& md);

struct StepResult {
  State state;
  DiagnosticsRow row;
  double tau_used = 0.0;
  double dissipation = 0.0;
};

/// Stateful integrator: tracks cumulative dissipation/source, the initial
/// energy and the adaptive step size along one trajectory.
class Stepper {
public:
  Stepper(const Model& md, const StepperConfig& cfg, HeatSource source, const State& initial);

  const DiagnosticsRow& initial_row() const { return row0_; }
  double current_tau() const { return tau_; }

  /// One accepted step of length <= min(current tau, max_dt). Halves tau on
  /// solver failure; throws FatalSolverError below min_tau.
  StepResult advance(const State& s, double max_dt = 0.0);

private:
  const Model& md_;
  StepperConfig cfg_;
  HeatSource source_;
  DiagnosticsRow row0_;
  double tau_;
  int successes_ = 0;
  long step_ = 0;
  double dissipation_cum_ = 0.0;
  double source_cum_ = 0.0;
};

/// Single step from s with a fresh trajectory.
StepResult advance(const State& s, const StepperConfig& cfg, const Model& md,
                   const HeatSource& source = {});

using StepObserver = std::function<void(const State&, const DiagnosticsRow&)>;

struct Trajectory {
  std::vector<DiagnosticsRow> rows;
  State final_state;
};

/// Integrates to t_end, calling observer on the initial and every accepted
/// state. FatalSolverError carries the failing step.
Trajectory integrate(const Model& md, const StepperConfig& cfg, const HeatSource& source,
                     const State& initial, double t_end, const StepObserver& observer = {});

struct HomogeneousSample {
  double t;
  double theta;
  double chi;
};

/// Classical RK4 for the spatially constant reduction
///   chi' = -f(chi) + delta chi - lambda'(chi)/theta,  theta + lambda(chi) = const,
/// using the bulk laws. Returns n_samples + 1 evenly spaced samples.
std::vector<HomogeneousSample> integrate_homogeneous(double theta0, double chi0,
                                                     const Model& md, double tau_ref,
                                                     double t_end, int n_samples = 1000);

}  // namespace pfsim
