#pragma once

#include <span>
#include <vector>

#include "pfsim/grid.hpp"
#include "pfsim/potentials.hpp"

namespace pfsim {

/// Geometry, measures, operator and constitutive functions of one problem.
struct Model {
  Grid grid;
  MassVectors mass;
  StiffnessOp stiffness;
  Potential pot_bulk;
  Potential pot_surf;
  LatentHeat lat_bulk;
  LatentHeat lat_surf;

  Model() = default;
  Model(const Grid& g, const Potential& pb, const Potential& ps, const LatentHeat& lb,
        const LatentHeat& ls);

  /// True when the bulk and surface laws coincide, so that spatially
  /// constant data stay constant.
  bool homogeneous_laws() const {
    return pot_bulk == pot_surf && lat_bulk == lat_surf;
  }
  /// Whether node p lies on a boundary circle.
  bool on_boundary(std::size_t p) const { return mass.surf[p] > 0.0; }
  /// Open interval admissible for chi at node p (bulk law, plus surface law
  /// on the boundary rows).
  double chi_lo(std::size_t p) const;
  double chi_hi(std::size_t p) const;
};

/// Nodal fields at one time. u = -1/theta is the entropy variable; boundary
/// rows hold the surface values (theta there is the boundary temperature).
struct State {
  double t = 0.0;
  Vec u;
  Vec chi;

  Vec theta() const;
};

State make_state(double t, std::span<const double> theta, std::span<const double> chi);

/// Throws DomainError unless u < 0 everywhere, chi lies in the potential
/// domains and all entries are finite.
void check_state(const State& s, const Model& model);

struct DiagnosticsRow {
  long step = 0;
  double t = 0.0;
  double mu = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double dissipation_cum = 0.0;
  double source_cum = 0.0;
  double energy_id_residual = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double chi_min = 0.0;
  double chi_max = 0.0;
  double u_spatial_std = 0.0;
  int newton_iters_chi = 0;
  int newton_iters_theta = 0;
};

/// dm-integral of theta + lambda(chi).
double mass_mu(const State& s, const LatentHeat& l_bulk, const LatentHeat& l_surf,
               const MassVectors& m);

double energy(const State& s, const Potential& p_bulk, const Potential& p_surf,
              const LatentHeat& l_bulk, const LatentHeat& l_surf, const MassVectors& m,
              const StiffnessOp& K);

double entropy(const State& s, const Potential& p_bulk, const Potential& p_surf,
               const MassVectors& m, const StiffnessOp& K);

/// tau * (u^T K u + |(chi_new - chi_old)/tau|^2_m); nonnegative by construction.
double dissipation_increment(std::span<const double> u_new, std::span<const double> chi_old,
                             std::span<const double> chi_new, double tau,
                             const MassVectors& m, const StiffnessOp& K);

/// E(t_N) + dissipation_cum(t_N) - E(t_0) - source_cum(t_N).
double energy_identity_residual(std::span<const DiagnosticsRow> rows);

inline double mass_mu(const State& s, const Model& md) {
  return mass_mu(s, md.lat_bulk, md.lat_surf, md.mass);
}
inline double energy(const State& s, const Model& md) {
  return energy(s, md.pot_bulk, md.pot_surf, md.lat_bulk, md.lat_surf, md.mass,
                md.stiffness);
}
inline double entropy(const State& s, const Model& md) {
  return entropy(s, md.pot_bulk, md.pot_surf, md.mass, md.stiffness);
}

/// dm-weighted mean and standard deviation of a nodal field.
double dm_mean(std::span<const double> v, const MassVectors& m);
double dm_std(std::span<const double> v, const MassVectors& m);

/// Diagnostics of a single state; cumulative entries left at zero.
DiagnosticsRow describe_state(const State& s, const Model& md, long step);

}  // namespace pfsim
