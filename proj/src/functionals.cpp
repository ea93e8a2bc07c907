#include "pfsim/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pfsim/errors.hpp"

namespace pfsim {

Model::Model(const Grid& g, const Potential& pb, const Potential& ps, const LatentHeat& lb,
             const LatentHeat& ls)
    : grid(g),
      mass(assemble_masses(g)),
      stiffness(assemble_stiffness(g)),
      pot_bulk(pb),
      pot_surf(ps),
      lat_bulk(lb),
      lat_surf(ls) {}

double Model::chi_lo(std::size_t p) const {
  return on_boundary(p) ? std::max(pot_bulk.domain_lo(), pot_surf.domain_lo())
                        : pot_bulk.domain_lo();
}

double Model::chi_hi(std::size_t p) const {
  return on_boundary(p) ? std::min(pot_bulk.domain_hi(), pot_surf.domain_hi())
                        : pot_bulk.domain_hi();
}

Vec State::theta() const {
  Vec th(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) th[p] = -1.0 / u[p];
  return th;
}

State make_state(double t, std::span<const double> theta, std::span<const double> chi) {
  if (theta.size() != chi.size()) throw DomainError("theta and chi sizes differ");
  State s;
  s.t = t;
  s.u.resize(theta.size());
  for (std::size_t p = 0; p < theta.size(); ++p) {
    if (!(theta[p] > 0.0)) throw DomainError("temperature must be positive");
    s.u[p] = -1.0 / theta[p];
  }
  s.chi.assign(chi.begin(), chi.end());
  return s;
}

void check_state(const State& s, const Model& md) {
  const std::size_t n = md.grid.size();
  if (s.u.size() != n || s.chi.size() != n) throw DomainError("state size does not match grid");
  for (std::size_t p = 0; p < n; ++p) {
    if (!std::isfinite(s.u[p]) || !std::isfinite(s.chi[p])) {
      throw DomainError("state has non-finite entries");
    }
    if (!(s.u[p] < 0.0)) {
      std::ostringstream msg;
      msg << "entropy variable must be negative, u = " << s.u[p] << " at node " << p;
      throw DomainError(msg.str());
    }
    if (!(s.chi[p] > md.chi_lo(p) && s.chi[p] < md.chi_hi(p))) {
      std::ostringstream msg;
      msg << "phase field outside the potential domain, chi = " << s.chi[p] << " at node "
          << p;
      throw DomainError(msg.str());
    }
  }
}

double mass_mu(const State& s, const LatentHeat& l_bulk, const LatentHeat& l_surf,
               const MassVectors& m) {
  double mu = 0.0;
  for (std::size_t p = 0; p < s.u.size(); ++p) {
    const double theta = -1.0 / s.u[p];
    mu += m.bulk[p] * (theta + l_bulk.value(s.chi[p]));
    if (m.surf[p] > 0.0) mu += m.surf[p] * (theta + l_surf.value(s.chi[p]));
  }
  return mu;
}

namespace {

void require_positive(double u) {
  if (!(u < 0.0) || !std::isfinite(u)) throw DomainError("temperature must be positive");
}

}  // namespace

double energy(const State& s, const Potential& p_bulk, const Potential& p_surf,
              const LatentHeat& l_bulk, const LatentHeat& l_surf, const MassVectors& m,
              const StiffnessOp& K) {
  double e = 0.0;
  for (std::size_t p = 0; p < s.u.size(); ++p) {
    require_positive(s.u[p]);
    const double theta = -1.0 / s.u[p];
    const double thermal = theta - std::log(theta);
    const double r = s.chi[p];
    e += m.bulk[p] * (thermal + l_bulk.value(r) + evaluate(p_bulk, r).F -
                      0.5 * p_bulk.delta * r * r);
    if (m.surf[p] > 0.0) {
      e += m.surf[p] * (thermal + l_surf.value(r) + evaluate(p_surf, r).F -
                        0.5 * p_surf.delta * r * r);
    }
  }
  return e + 0.5 * K.energy(s.chi);
}

double entropy(const State& s, const Potential& p_bulk, const Potential& p_surf,
               const MassVectors& m, const StiffnessOp& K) {
  double S = 0.0;
  for (std::size_t p = 0; p < s.u.size(); ++p) {
    require_positive(s.u[p]);
    const double log_theta = std::log(-1.0 / s.u[p]);
    const double r = s.chi[p];
    S += m.bulk[p] * (log_theta + p_bulk.s0(r));
    if (m.surf[p] > 0.0) S += m.surf[p] * (log_theta + p_surf.s0(r));
  }
  return S - 0.5 * K.energy(s.chi);
}

double dissipation_increment(std::span<const double> u_new, std::span<const double> chi_old,
                             std::span<const double> chi_new, double tau,
                             const MassVectors& m, const StiffnessOp& K) {
  double rate = 0.0;
  for (std::size_t p = 0; p < chi_new.size(); ++p) {
    const double r = (chi_new[p] - chi_old[p]) / tau;
    rate += m.comb[p] * r * r;
  }
  return tau * (K.energy(u_new) + rate);
}

double energy_identity_residual(std::span<const DiagnosticsRow> rows) {
  if (rows.empty()) return 0.0;
  const auto& first = rows.front();
  const auto& last = rows.back();
  return last.energy + last.dissipation_cum - first.energy - last.source_cum;
}

double dm_mean(std::span<const double> v, const MassVectors& m) {
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    num += m.comb[p] * v[p];
    den += m.comb[p];
  }
  return num / den;
}

double dm_std(std::span<const double> v, const MassVectors& m) {
  const double mean = dm_mean(v, m);
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < v.size(); ++p) {
    num += m.comb[p] * (v[p] - mean) * (v[p] - mean);
    den += m.comb[p];
  }
  return std::sqrt(num / den);
}

DiagnosticsRow describe_state(const State& s, const Model& md, long step) {
  DiagnosticsRow row;
  row.step = step;
  row.t = s.t;
  row.mu = mass_mu(s, md);
  row.energy = energy(s, md);
  row.entropy = entropy(s, md);
  const auto [umin, umax] = std::minmax_element(s.u.begin(), s.u.end());
  row.theta_min = -1.0 / *umin;
  row.theta_max = -1.0 / *umax;
  const auto [cmin, cmax] = std::minmax_element(s.chi.begin(), s.chi.end());
  row.chi_min = *cmin;
  row.chi_max = *cmax;
  row.u_spatial_std = dm_std(s.u, md.mass);
  return row;
}

}  // namespace pfsim
