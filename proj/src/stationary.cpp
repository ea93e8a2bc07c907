#include "pfsim/stationary.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "pfsim/errors.hpp"
#include "pfsim/timestepper.hpp"

namespace pfsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Extremes of a quadratic latent heat on [-1, 1].
std::pair<double, double> latent_range(const LatentHeat& l) {
  double lo = std::min(l.value(-1.0), l.value(1.0));
  double hi = std::max(l.value(-1.0), l.value(1.0));
  if (l.a != 0.0) {
    const double vertex = l.b / (2.0 * l.a);
    if (vertex > -1.0 && vertex < 1.0) {
      lo = std::min(lo, l.value(vertex));
      hi = std::max(hi, l.value(vertex));
    }
  }
  return {lo, hi};
}

double sign_margin(const LatentHeat& l) { return std::min(l.slope(1.0), -l.slope(-1.0)); }

using SpMat = Eigen::SparseMatrix<double>;

SpMat phase_jacobian(double u_inf, std::span<const double> chi, const Model& md,
                     double shift) {
  const auto& m = md.mass;
  const std::size_t n = chi.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  for (const auto& e : md.stiffness.edges()) {
    const auto a = static_cast<int>(e.a), b = static_cast<int>(e.b);
    trip.emplace_back(a, a, e.weight);
    trip.emplace_back(b, b, e.weight);
    trip.emplace_back(a, b, -e.weight);
    trip.emplace_back(b, a, -e.weight);
  }
  for (std::size_t p = 0; p < n; ++p) {
    double d = m.bulk[p] * (evaluate(md.pot_bulk, chi[p]).fprime - md.pot_bulk.delta -
                            md.lat_bulk.curvature() * u_inf);
    if (m.surf[p] > 0.0) {
      d += m.surf[p] * (evaluate(md.pot_surf, chi[p]).fprime - md.pot_surf.delta -
                        md.lat_surf.curvature() * u_inf);
    }
    d += shift * m.comb[p];
    trip.emplace_back(static_cast<int>(p), static_cast<int>(p), d);
  }
  SpMat J(static_cast<int>(n), static_cast<int>(n));
  J.setFromTriplets(trip.begin(), trip.end());
  J.makeCompressed();
  return J;
}

std::optional<Vec> linear_solve(const SpMat& J, const Vec& R) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(J);
  lu.factorize(J);
  if (lu.info() != Eigen::Success) return std::nullopt;
  Eigen::Map<const Eigen::VectorXd> rhs(R.data(), static_cast<Eigen::Index>(R.size()));
  Eigen::VectorXd d = lu.solve(-rhs);
  if (lu.info() != Eigen::Success || !d.allFinite()) return std::nullopt;
  return Vec(d.data(), d.data() + d.size());
}

}  // namespace

HypothesisReport evaluate_hypotheses(double mu, const Model& md) {
  HypothesisReport rep;
  const double vol = md.grid.bulk_measure();
  const double area = md.grid.surface_measure();
  const auto [bmin, bmax] = latent_range(md.lat_bulk);
  const auto [smin, smax] = latent_range(md.lat_surf);
  rep.admissibility_bound = vol * bmin + area * smin;
  rep.admissible = mu > rep.admissibility_bound;
  rep.large_mass_bound = vol * bmax + area * smax;
  rep.large_mass = mu > rep.large_mass_bound;
  rep.sign_margin = std::min(sign_margin(md.lat_bulk), sign_margin(md.lat_surf));
  rep.sign_condition = rep.sign_margin > 0.0;
  return rep;
}

Vec stationary_phase_residual(double u_inf, std::span<const double> chi, const Model& md) {
  const auto& m = md.mass;
  Vec R = md.stiffness.apply(chi);
  for (std::size_t p = 0; p < R.size(); ++p) {
    const double r = chi[p];
    R[p] += m.bulk[p] * (evaluate(md.pot_bulk, r).f - md.pot_bulk.delta * r -
                         md.lat_bulk.slope(r) * u_inf);
    if (m.surf[p] > 0.0) {
      R[p] += m.surf[p] * (evaluate(md.pot_surf, r).f - md.pot_surf.delta * r -
                           md.lat_surf.slope(r) * u_inf);
    }
  }
  return R;
}

ChiSolve solve_chi_given_u(double u_inf, std::span<const double> guess, const Model& md,
                           double tol, double guard_eps, int max_iter) {
  if (!(u_inf < 0.0)) throw DomainError("stationary entropy variable must be negative");
  const std::size_t n = md.grid.size();
  if (guess.size() != n) throw DomainError("guess size does not match grid");

  Vec lo(n), hi(n), x(guess.begin(), guess.end());
  for (std::size_t p = 0; p < n; ++p) {
    const double a = md.chi_lo(p), b = md.chi_hi(p);
    const double hw = std::isfinite(a) && std::isfinite(b) ? 0.5 * (b - a) : 1.0;
    lo[p] = std::isfinite(a) ? a + guard_eps * hw : a;
    hi[p] = std::isfinite(b) ? b - guard_eps * hw : b;
    if (!(x[p] > md.chi_lo(p) && x[p] < md.chi_hi(p))) {
      throw DomainError("stationary guess outside the potential domain");
    }
    x[p] = std::clamp(x[p], lo[p], hi[p]);
  }

  Vec R = stationary_phase_residual(u_inf, x, md);
  double rnorm = residual_norm(R, md.mass);
  // shift > 0 selects pseudo-transient steps (J + shift M) d = -R.
  double shift = 0.0;
  ChiSolve out;
  Vec trial(n);

  while (rnorm > tol) {
    if (out.iterations >= max_iter) {
      std::ostringstream msg;
      msg << "stationary phase solve did not converge (residual " << rnorm << ", tol " << tol
          << ")";
      throw SolverError(msg.str());
    }
    ++out.iterations;
    auto d = linear_solve(phase_jacobian(u_inf, x, md, shift), R);
    if (!d) {
      shift = shift == 0.0 ? 1.0 : 10.0 * shift;
      continue;
    }
    double alpha = 1.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double dp = (*d)[p];
      if (dp > 0.0 && hi[p] < kInf) alpha = std::min(alpha, 0.995 * (hi[p] - x[p]) / dp);
      if (dp < 0.0 && lo[p] > -kInf) alpha = std::min(alpha, 0.995 * (lo[p] - x[p]) / dp);
    }

    if (shift == 0.0) {
      bool accepted = false;
      for (int k = 0; k < 40; ++k) {
        for (std::size_t p = 0; p < n; ++p) trial[p] = x[p] + alpha * (*d)[p];
        Vec Rt = stationary_phase_residual(u_inf, trial, md);
        const double tn = residual_norm(Rt, md.mass);
        if (std::isfinite(tn) && tn <= (1.0 - 1e-4 * alpha) * rnorm) {
          x.swap(trial);
          R.swap(Rt);
          rnorm = tn;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) shift = 1.0;
    } else {
      for (std::size_t p = 0; p < n; ++p) trial[p] = x[p] + alpha * (*d)[p];
      Vec Rt = stationary_phase_residual(u_inf, trial, md);
      const double tn = residual_norm(Rt, md.mass);
      if (!std::isfinite(tn) || tn > 1e3 * rnorm) {
        shift *= 10.0;
        continue;
      }
      // Switched evolution relaxation of the pseudo time step.
      shift *= tn / rnorm;
      if (shift < 1e-8) shift = 0.0;
      x.swap(trial);
      R.swap(Rt);
      rnorm = tn;
    }
  }
  out.chi = std::move(x);
  out.residual = rnorm;
  return out;
}

double mass_gap(double u_inf, std::span<const double> chi_inf, double mu_target,
                const Model& md) {
  const auto& m = md.mass;
  const double theta = -1.0 / u_inf;
  double mu = 0.0;
  for (std::size_t p = 0; p < chi_inf.size(); ++p) {
    mu += m.bulk[p] * (theta + md.lat_bulk.value(chi_inf[p]));
    if (m.surf[p] > 0.0) mu += m.surf[p] * (theta + md.lat_surf.value(chi_inf[p]));
  }
  return mu - mu_target;
}

namespace {

struct GapEval {
  double theta;
  double gap;
  Vec chi;
  double residual;
};

StationaryResult bisect_for_guess(double mu, double theta_lo, double theta_hi,
                                  const Vec& guess, const Model& md, double tol) {
  int evaluations = 0;
  auto eval = [&](double theta, const Vec& start) {
    ++evaluations;
    const double u = -1.0 / theta;
    auto sol = solve_chi_given_u(u, start, md, tol);
    const double g = mass_gap(u, sol.chi, mu, md);
    return GapEval{theta, g, std::move(sol.chi), sol.residual};
  };

  GapEval lo = eval(theta_lo, guess);
  GapEval hi = eval(theta_hi, lo.chi);
  for (int expand = 0; (lo.gap > 0.0) == (hi.gap > 0.0) && lo.gap != 0.0 && hi.gap != 0.0;
       ++expand) {
    if (expand >= 10) {
      std::ostringstream msg;
      msg << "no sign change of the mass gap in theta in [" << lo.theta << ", " << hi.theta
          << "]";
      throw BracketError(msg.str());
    }
    if (lo.gap > 0.0) {
      hi = lo;
      lo = eval(0.25 * lo.theta, lo.chi);
    } else {
      lo = hi;
      hi = eval(4.0 * hi.theta, hi.chi);
    }
  }

  GapEval best = std::abs(lo.gap) <= std::abs(hi.gap) ? lo : hi;
  const Vec* warm = &hi.chi;
  for (int k = 0; k < 200 && std::abs(best.gap) > tol; ++k) {
    const double mid = 0.5 * (lo.theta + hi.theta);
    if (mid <= lo.theta || mid >= hi.theta) break;
    GapEval m = eval(mid, *warm);
    if (std::abs(m.gap) < std::abs(best.gap)) best = m;
    if ((m.gap > 0.0) == (hi.gap > 0.0)) {
      hi = std::move(m);
      warm = &hi.chi;
    } else {
      lo = std::move(m);
      warm = &lo.chi;
    }
  }
  if (!(std::abs(best.gap) <= tol)) {
    std::ostringstream msg;
    msg << "mass gap not resolved (|gap| = " << std::abs(best.gap)
        << "); the phase branch is discontinuous in theta";
    throw SolverError(msg.str());
  }

  StationaryResult res;
  res.mu_target = mu;
  res.theta_inf = best.theta;
  res.u_inf = -1.0 / best.theta;
  res.chi_inf = std::move(best.chi);
  res.phase_residual =
      residual_norm(stationary_phase_residual(res.u_inf, res.chi_inf, md), md.mass);
  res.mass_gap = mass_gap(res.u_inf, res.chi_inf, mu, md);
  res.outer_iterations = evaluations;
  if (md.pot_bulk.singular() || md.pot_surf.singular()) {
    double amax = 0.0;
    for (double c : res.chi_inf) amax = std::max(amax, std::abs(c));
    res.separation = 1.0 - amax;
  }
  return res;
}

}  // namespace

StationaryResult solve_stationary(double mu_target, double theta_lo, double theta_hi,
                                  const std::vector<Vec>& guesses, const Model& md,
                                  double tol) {
  if (!(theta_lo > 0.0) || !(theta_hi > theta_lo)) {
    throw ConfigError("temperature bracket must satisfy 0 < theta_lo < theta_hi");
  }
  if (guesses.empty()) throw ConfigError("solve_stationary needs at least one guess");
  const HypothesisReport hyp = evaluate_hypotheses(mu_target, md);
  if (!hyp.admissible) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "mass " << mu_target << " does not exceed the admissibility bound "
        << hyp.admissibility_bound;
    throw AdmissibilityError(msg.str());
  }

  std::optional<BracketError> bracket_failure;
  std::optional<SolverError> solver_failure;
  for (const auto& guess : guesses) {
    try {
      StationaryResult res = bisect_for_guess(mu_target, theta_lo, theta_hi, guess, md, tol);
      res.hypotheses = hyp;
      return res;
    } catch (const BracketError& e) {
      bracket_failure = e;
    } catch (const SolverError& e) {
      solver_failure = e;
    }
  }
  if (solver_failure) throw *solver_failure;
  throw *bracket_failure;
}

OmegaLimitReport omega_limit_report(const State& final_state, const StationaryResult& result,
                                    const Model& md, const OmegaLimitThresholds& thr) {
  OmegaLimitReport rep;
  rep.u_spatial_std = dm_std(final_state.u, md.mass);
  const double u_mean = dm_mean(final_state.u, md.mass);
  rep.phase_residual = residual_norm(
      stationary_phase_residual(u_mean, final_state.chi, md), md.mass);
  rep.mass_error = std::abs(mass_mu(final_state, md) - result.mu_target);
  for (std::size_t p = 0; p < final_state.chi.size() && p < result.chi_inf.size(); ++p) {
    rep.chi_distance = std::max(rep.chi_distance, std::abs(final_state.chi[p] - result.chi_inf[p]));
  }
  rep.u_distance = std::abs(u_mean - result.u_inf);
  rep.converged = rep.u_spatial_std <= thr.u_std && rep.phase_residual <= thr.phase_residual &&
                  rep.mass_error <= thr.mass;
  return rep;
}

}  // namespace pfsim
