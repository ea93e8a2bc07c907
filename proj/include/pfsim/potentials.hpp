#pragma once

#include <string>
#include <string_view>

namespace pfsim {

enum class PotentialKind { logarithmic, quartic };

std::string_view to_string(PotentialKind kind);
/// Throws ConfigError on an unknown name.
PotentialKind potential_kind_from_string(std::string_view name);

/// Configuration potential split as -s0'(r) = f(r) - delta*r, with f = F'
/// monotone, f(0) = 0 and F(0) = 0.
///
///   logarithmic: F(r) = (1+r)ln(1+r) + (1-r)ln(1-r) on (-1, 1)
///   quartic:     F(r) = r^4/4 on the real line
struct Potential {
  PotentialKind kind = PotentialKind::logarithmic;
  double delta = 0.0;

  bool singular() const { return kind == PotentialKind::logarithmic; }
  /// Open interval (lo, hi); infinite ends for regular potentials.
  double domain_lo() const;
  double domain_hi() const;
  bool in_domain(double r) const { return r > domain_lo() && r < domain_hi(); }

  /// s0(r) = delta r^2/2 - F(r), normalized so that s0(0) = 0.
  double s0(double r) const;
  double s0_prime(double r) const;

  bool operator==(const Potential&) const = default;
};

struct PotentialValues {
  double F;
  double f;
  double fprime;
};

/// Throws DomainError unless r lies strictly inside the domain.
PotentialValues evaluate(const Potential& p, double r);

/// Quadratic latent heat lambda(r) = -a r^2 + b r + c.
struct LatentHeat {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double value(double r) const { return (-a * r + b) * r + c; }
  double slope(double r) const { return -2.0 * a * r + b; }
  double curvature() const { return -2.0 * a; }

  bool operator==(const LatentHeat&) const = default;
};

struct LatentValues {
  double lambda;
  double lambda_prime;
  double lambda_second;
};

LatentValues latent_eval(const LatentHeat& l, double r);

/// Half-width of the sampling window used for regular (unbounded) domains.
inline constexpr double kRegularSampleRadius = 10.0;
/// Relative margin of the half-width kept away from singular endpoints.
inline constexpr double kSingularSampleMargin = 1e-6;

/// Fitted constants of f f_G >= c_s f^2 - C_s, and for two singular
/// potentials on (-1, 1) also of |f_G| >= kappa_s |f| - C_s.
struct CompatReport {
  bool ok = false;
  double c_s = 0.0;
  double C_s = 0.0;
  bool singular_pair = false;
  double kappa_s = 0.0;
  double C_s_sing = 0.0;
  double sample_lo = 0.0;
  double sample_hi = 0.0;
  double sample_margin = 0.0;
};

/// Throws DomainError when dom(f_surf) is not contained in dom(f_bulk).
CompatReport check_compatibility(const Potential& f_bulk, const Potential& f_surf,
                                 int n_samples);

/// Fitted constants of lambda(r) - s0(r) >= c1 r^2 - c2 for one side.
struct CoercivityFit {
  bool ok = false;
  bool bounded_domain = false;
  double c1 = 0.0;
  double c2 = 0.0;
};

struct CoercivityReport {
  bool ok = false;
  CoercivityFit bulk;
  CoercivityFit surf;
};

CoercivityFit fit_coercivity(const Potential& p, const LatentHeat& l, int n_samples);
CoercivityReport check_coercivity(const Potential& p_bulk, const Potential& p_surf,
                                  const LatentHeat& l_bulk, const LatentHeat& l_surf,
                                  int n_samples);

}  // namespace pfsim
