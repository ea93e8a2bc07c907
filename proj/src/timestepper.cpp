#include "pfsim/timestepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pfsim/errors.hpp"

namespace pfsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jacobian of both step systems has the form diag(D) + K.
struct NewtonSystem {
  std::function<void(std::span<const double>, std::span<double>)> residual;
  std::function<void(std::span<const double>, std::span<double>)> jac_diag;
  Vec lo;  // guarded bounds, +-inf when absent
  Vec hi;
};

NewtonOutcome damped_newton(const NewtonSystem& sys, Vec x, const StepperConfig& cfg,
                            const Model& md, const char* what) {
  const std::size_t n = x.size();
  const StiffnessOp& K = md.stiffness;
  Vec R(n), D(n), pdiag(n), d(n), trial(n), Rtrial(n), rhs(n);

  sys.residual(x, R);
  double rnorm = residual_norm(R, md.mass);
  const double target = std::max(cfg.newton_tol * rnorm, kNewtonAbsFloor);

  NewtonOutcome out;
  while (rnorm > target) {
    if (out.iterations >= cfg.newton_max_iter) {
      std::ostringstream msg;
      msg << what << ": Newton did not converge in " << cfg.newton_max_iter
          << " iterations (residual " << rnorm << ", target " << target << ")";
      throw SolverError(msg.str());
    }
    sys.jac_diag(x, D);
    for (std::size_t p = 0; p < n; ++p) {
      pdiag[p] = D[p] + K.diagonal()[p];
      rhs[p] = -R[p];
    }
    auto jac = [&](std::span<const double> v, std::span<double> w) {
      K.apply(v, w);
      for (std::size_t p = 0; p < n; ++p) w[p] += D[p] * v[p];
    };
    d = solve_spd(jac, pdiag, rhs, cfg.cg_tol).x;

    // A correction below rounding level means the residual has reached the
    // floor set by the conditioning of the system.
    double rel = 0.0;
    for (std::size_t p = 0; p < n; ++p) rel = std::max(rel, std::abs(d[p]) / (1.0 + std::abs(x[p])));
    if (rel <= 4.0 * std::numeric_limits<double>::epsilon()) {
      ++out.iterations;
      break;
    }

    // Fraction-to-boundary keeps iterates strictly inside the guarded domain.
    double alpha = 1.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (d[p] > 0.0 && sys.hi[p] < kInf) {
        alpha = std::min(alpha, 0.995 * (sys.hi[p] - x[p]) / d[p]);
      } else if (d[p] < 0.0 && sys.lo[p] > -kInf) {
        alpha = std::min(alpha, 0.995 * (sys.lo[p] - x[p]) / d[p]);
      }
    }
    alpha = std::max(alpha, 0.0);

    bool accepted = false;
    for (int k = 0; k < 60 && alpha > 0.0; ++k) {
      for (std::size_t p = 0; p < n; ++p) trial[p] = x[p] + alpha * d[p];
      sys.residual(trial, Rtrial);
      const double tnorm = residual_norm(Rtrial, md.mass);
      if (std::isfinite(tnorm) && tnorm <= (1.0 - 1e-4 * alpha) * rnorm) {
        x.swap(trial);
        R.swap(Rtrial);
        rnorm = tnorm;
        accepted = true;
        break;
      }
      alpha *= cfg.backtrack_factor;
    }
    ++out.iterations;
    if (!accepted) {
      std::ostringstream msg;
      msg << what << ": line search failed (residual " << rnorm << ", target " << target
          << ")";
      throw SolverError(msg.str());
    }
  }
  out.x = std::move(x);
  out.residual = rnorm;
  return out;
}

double guarded(double bound, double half_width, double eps, bool upper) {
  if (!std::isfinite(bound)) return bound;
  return upper ? bound - eps * half_width : bound + eps * half_width;
}

}  // namespace

void StepperConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("time step must be positive");
  if (!(min_tau > 0.0) || min_tau > tau) throw ConfigError("need 0 < min_dt <= dt");
  if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
  if (newton_max_iter < 1) throw ConfigError("newton_max_iter must be >= 1");
  if (!(guard_eps > 0.0 && guard_eps < 1.0)) throw ConfigError("guard_eps must lie in (0, 1)");
  if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw ConfigError("cg_tol must lie in (0, 1)");
}

std::string_view to_string(SourceKind kind) {
  return kind == SourceKind::zero ? "zero" : "sinusoid";
}

SourceKind source_kind_from_string(std::string_view name) {
  if (name == "zero") return SourceKind::zero;
  if (name == "sinusoid") return SourceKind::sinusoid;
  throw ConfigError("unknown source kind '" + std::string(name) + "'");
}

Vec HeatSource::at(double t) const {
  if (!active()) return {};
  Vec h(profile);
  const double c = std::cos(omega * t);
  for (double& v : h) v *= c;
  return h;
}

HeatSource make_heat_source(SourceKind kind, double amplitude, int kx, double omega,
                            const Model& md) {
  HeatSource src;
  src.kind = kind;
  src.omega = omega;
  if (kind == SourceKind::zero) return src;
  const Grid& g = md.grid;
  src.profile.assign(g.size(), 0.0);
  for (int j = 0; j <= g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      src.profile[g.index(i, j)] =
          amplitude * std::cos(2.0 * std::numbers::pi * kx * g.x(i) / g.lx());
    }
  }
  const double mean = dm_mean(src.profile, md.mass);
  src.projected_mean = std::abs(mean);
  for (double& v : src.profile) v -= mean;
  return src;
}

double residual_norm(std::span<const double> R, const MassVectors& m) {
  double s = 0.0;
  for (std::size_t p = 0; p < R.size(); ++p) s += R[p] * R[p] / m.comb[p];
  return std::sqrt(s);
}

Vec chi_step_residual(const State& s, std::span<const double> chi, double tau,
                      const Model& md) {
  const auto& m = md.mass;
  Vec R = md.stiffness.apply(chi);
  for (std::size_t p = 0; p < R.size(); ++p) {
    const double old = s.chi[p];
    R[p] += m.comb[p] * (chi[p] - old) / tau;
    R[p] += m.bulk[p] * (evaluate(md.pot_bulk, chi[p]).f - md.pot_bulk.delta * old -
                         md.lat_bulk.slope(old) * s.u[p]);
    if (m.surf[p] > 0.0) {
      R[p] += m.surf[p] * (evaluate(md.pot_surf, chi[p]).f - md.pot_surf.delta * old -
                           md.lat_surf.slope(old) * s.u[p]);
    }
  }
  return R;
}

Vec theta_step_residual(const State& s, std::span<const double> chi_new,
                        std::span<const double> u, std::span<const double> heat, double tau,
                        const Model& md) {
  const auto& m = md.mass;
  Vec R = md.stiffness.apply(u);
  for (std::size_t p = 0; p < R.size(); ++p) {
    const double theta_old = -1.0 / s.u[p];
    R[p] += m.comb[p] * (-1.0 / u[p] - theta_old) / tau;
    R[p] += m.bulk[p] * (md.lat_bulk.value(chi_new[p]) - md.lat_bulk.value(s.chi[p])) / tau;
    if (m.surf[p] > 0.0) {
      R[p] +=
          m.surf[p] * (md.lat_surf.value(chi_new[p]) - md.lat_surf.value(s.chi[p])) / tau;
    }
    if (!heat.empty()) R[p] -= m.comb[p] * heat[p];
  }
  return R;
}

NewtonOutcome step_chi(const State& s, double tau, const StepperConfig& cfg, const Model& md) {
  const std::size_t n = md.grid.size();
  const auto& m = md.mass;
  NewtonSystem sys;
  sys.lo.resize(n);
  sys.hi.resize(n);
  Vec x0(s.chi);
  for (std::size_t p = 0; p < n; ++p) {
    const double lo = md.chi_lo(p), hi = md.chi_hi(p);
    const double hw = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (hi - lo) : 1.0;
    sys.lo[p] = guarded(lo, hw, cfg.guard_eps, false);
    sys.hi[p] = guarded(hi, hw, cfg.guard_eps, true);
    x0[p] = std::clamp(x0[p], sys.lo[p], sys.hi[p]);
  }
  sys.residual = [&](std::span<const double> chi, std::span<double> R) {
    const Vec r = chi_step_residual(s, chi, tau, md);
    std::copy(r.begin(), r.end(), R.begin());
  };
  sys.jac_diag = [&](std::span<const double> chi, std::span<double> D) {
    for (std::size_t p = 0; p < n; ++p) {
      D[p] = m.comb[p] / tau + m.bulk[p] * evaluate(md.pot_bulk, chi[p]).fprime;
      if (m.surf[p] > 0.0) D[p] += m.surf[p] * evaluate(md.pot_surf, chi[p]).fprime;
    }
  };
  return damped_newton(sys, std::move(x0), cfg, md, "phase step");
}

NewtonOutcome step_theta(const State& s, std::span<const double> chi_new,
                         std::span<const double> heat, double tau, const StepperConfig& cfg,
                         const Model& md) {
  const std::size_t n = md.grid.size();
  const auto& m = md.mass;
  NewtonSystem sys;
  sys.lo.assign(n, -kInf);
  sys.hi.assign(n, -cfg.guard_eps);
  Vec x0(s.u);
  for (double& v : x0) v = std::min(v, -cfg.guard_eps);
  sys.residual = [&](std::span<const double> u, std::span<double> R) {
    const Vec r = theta_step_residual(s, chi_new, u, heat, tau, md);
    std::copy(r.begin(), r.end(), R.begin());
  };
  sys.jac_diag = [&](std::span<const double> u, std::span<double> D) {
    for (std::size_t p = 0; p < n; ++p) D[p] = m.comb[p] / (tau * u[p] * u[p]);
  };
  return damped_newton(sys, std::move(x0), cfg, md, "temperature step");
}

Stepper::Stepper(const Model& md, const StepperConfig& cfg, HeatSource source,
                 const State& initial)
    : md_(md), cfg_(cfg), source_(std::move(source)), tau_(cfg.tau) {
  cfg_.validate();
  check_state(initial, md_);
  row0_ = describe_state(initial, md_, 0);
}

StepResult Stepper::advance(const State& s, double max_dt) {
  for (;;) {
    double tau = tau_;
    if (max_dt > 0.0 && max_dt <= tau * (1.0 + 1e-9)) tau = max_dt;
    try {
      const auto chi = step_chi(s, tau, cfg_, md_);
      const double t_new = s.t + tau;
      const Vec heat = source_.at(t_new);
      const auto u = step_theta(s, chi.x, heat, tau, cfg_, md_);

      StepResult res;
      res.tau_used = tau;
      res.state.t = t_new;
      res.state.u = u.x;
      res.state.chi = chi.x;
      check_state(res.state, md_);

      res.dissipation = dissipation_increment(u.x, s.chi, chi.x, tau, md_.mass, md_.stiffness);
      dissipation_cum_ += res.dissipation;
      if (!heat.empty()) {
        double src = 0.0;
        for (std::size_t p = 0; p < heat.size(); ++p) src += md_.mass.comb[p] * heat[p] * u.x[p];
        source_cum_ += tau * src;
      }

      res.row = describe_state(res.state, md_, ++step_);
      res.row.dissipation_cum = dissipation_cum_;
      res.row.source_cum = source_cum_;
      res.row.energy_id_residual =
          res.row.energy + dissipation_cum_ - row0_.energy - source_cum_;
      res.row.newton_iters_chi = chi.iterations;
      res.row.newton_iters_theta = u.iterations;

      if (++successes_ >= 10 && tau_ < cfg_.tau) {
        tau_ = std::min(2.0 * tau_, cfg_.tau);
        successes_ = 0;
      }
      return res;
    } catch (const SolverError& e) {
      successes_ = 0;
      tau_ *= 0.5;
      if (tau_ < cfg_.min_tau) {
        std::ostringstream msg;
        msg << "step " << step_ + 1 << " at t = " << s.t
            << ": time step fell below min_dt (" << e.what() << ")";
        throw FatalSolverError(msg.str(), step_ + 1);
      }
    }
  }
}

StepResult advance(const State& s, const StepperConfig& cfg, const Model& md,
                   const HeatSource& source) {
  Stepper stepper(md, cfg, source, s);
  return stepper.advance(s);
}

Trajectory integrate(const Model& md, const StepperConfig& cfg, const HeatSource& source,
                     const State& initial, double t_end, const StepObserver& observer) {
  Stepper stepper(md, cfg, source, initial);
  Trajectory traj;
  traj.rows.push_back(stepper.initial_row());
  traj.final_state = initial;
  if (observer) observer(initial, traj.rows.back());

  // Steps within this fraction of tau of t_end land exactly on it.
  const double snap = 1e-9 * cfg.tau;
  while (traj.final_state.t < t_end - snap) {
    const double remaining = t_end - traj.final_state.t;
    const double max_dt = remaining <= stepper.current_tau() + snap ? remaining : 0.0;
    auto res = stepper.advance(traj.final_state, max_dt);
    if (max_dt > 0.0 && res.tau_used == max_dt) res.state.t = t_end;
    res.row.t = res.state.t;
    traj.rows.push_back(res.row);
    traj.final_state = std::move(res.state);
    if (observer) observer(traj.final_state, traj.rows.back());
  }
  return traj;
}

std::vector<HomogeneousSample> integrate_homogeneous(double theta0, double chi0,
                                                     const Model& md, double tau_ref,
                                                     double t_end, int n_samples) {
  if (!(theta0 > 0.0)) throw DomainError("initial temperature must be positive");
  if (!md.pot_bulk.in_domain(chi0)) throw DomainError("initial phase outside the domain");
  if (!(tau_ref > 0.0) || !(t_end >= 0.0)) throw ConfigError("need tau_ref > 0, t_end >= 0");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");

  const Potential& pot = md.pot_bulk;
  const LatentHeat& lat = md.lat_bulk;
  const double e0 = theta0 + lat.value(chi0);

  auto rhs = [&](double chi) {
    if (!pot.in_domain(chi)) throw DomainError("homogeneous trajectory left the domain");
    const double theta = e0 - lat.value(chi);
    if (!(theta > 0.0)) throw DomainError("homogeneous trajectory reached zero temperature");
    return -evaluate(pot, chi).f + pot.delta * chi - lat.slope(chi) / theta;
  };

  const long steps = std::max(1L, std::lround(std::ceil(t_end / tau_ref - 1e-9)));
  const double h = t_end / static_cast<double>(steps);
  const long stride = std::max(1L, steps / n_samples);

  std::vector<HomogeneousSample> out;
  double chi = chi0;
  out.push_back({0.0, theta0, chi0});
  if (t_end == 0.0) return out;
  for (long k = 1; k <= steps; ++k) {
    const double k1 = rhs(chi);
    const double k2 = rhs(chi + 0.5 * h * k1);
    const double k3 = rhs(chi + 0.5 * h * k2);
    const double k4 = rhs(chi + h * k3);
    chi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (k % stride == 0 || k == steps) {
      out.push_back({k * h, e0 - lat.value(chi), chi});
    }
  }
  return out;
}

}  // namespace pfsim
