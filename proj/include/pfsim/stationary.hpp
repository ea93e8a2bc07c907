#pragma once

#include <span>
#include <vector>

#include "pfsim/functionals.hpp"

namespace pfsim {

/// Informational flags on the latent heats and the prescribed mass.
struct HypothesisReport {
  /// mu > |Omega| min lambda_b + |Gamma| min lambda_G over [-1, 1].
  bool admissible = false;
  double admissibility_bound = 0.0;
  /// mu > |Omega| max lambda_b + |Gamma| max lambda_G over [-1, 1].
  bool large_mass = false;
  double large_mass_bound = 0.0;
  /// lambda'(r) sign r stays positive as |r| -> 1 for both latent heats.
  bool sign_condition = false;
  double sign_margin = 0.0;
};

HypothesisReport evaluate_hypotheses(double mu, const Model& md);

struct StationaryResult {
  double mu_target = 0.0;
  double u_inf = 0.0;
  double theta_inf = 0.0;
  Vec chi_inf;
  double phase_residual = 0.0;
  double mass_gap = 0.0;
  /// 1 - max |chi_inf| for singular potentials, 0 otherwise.
  double separation = 0.0;
  int outer_iterations = 0;
  HypothesisReport hypotheses;
};

struct ChiSolve {
  Vec chi;
  double residual = 0.0;
  int iterations = 0;
};

/// Nodal residual K chi + m_b (f - delta chi - lambda_b'(chi) u) + m_G (...).
Vec stationary_phase_residual(double u_inf, std::span<const double> chi, const Model& md);

/// Damped Newton (with pseudo-transient fallback) on the stationary phase
/// equations at fixed u_inf < 0. Throws SolverError on non-convergence.
ChiSolve solve_chi_given_u(double u_inf, std::span<const double> guess, const Model& md,
                           double tol, double guard_eps = 1e-12, int max_iter = 400);

/// dm-integral of -1/u_inf + lambda(chi_inf) minus mu_target.
double mass_gap(double u_inf, std::span<const double> chi_inf, double mu_target,
                const Model& md);

/// Bisection on the temperature for the mass constraint, re-solving the phase
/// equations at every trial value. Tries the guesses in order and returns the
/// first root found. Throws AdmissibilityError, BracketError or SolverError.
StationaryResult solve_stationary(double mu_target, double theta_lo, double theta_hi,
                                  const std::vector<Vec>& guesses, const Model& md,
                                  double tol = 1e-10);

struct OmegaLimitThresholds {
  double u_std = 1e-6;
  double phase_residual = 1e-6;
  double mass = 1e-8;
};

struct OmegaLimitReport {
  double u_spatial_std = 0.0;
  double phase_residual = 0.0;
  double mass_error = 0.0;
  double chi_distance = 0.0;
  double u_distance = 0.0;
  bool converged = false;
};

OmegaLimitReport omega_limit_report(const State& final_state, const StationaryResult& result,
                                    const Model& md, const OmegaLimitThresholds& thr = {});

}  // namespace pfsim
