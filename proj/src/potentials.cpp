#include "pfsim/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "pfsim/errors.hpp"

namespace pfsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Evenly spaced samples covering the interior of dom(p).
std::vector<double> sample_domain(const Potential& p, int n, double* lo_out,
                                  double* hi_out) {
  double lo = -kRegularSampleRadius;
  double hi = kRegularSampleRadius;
  if (p.singular()) {
    const double half = 0.5 * (p.domain_hi() - p.domain_lo());
    lo = p.domain_lo() + kSingularSampleMargin * half;
    hi = p.domain_hi() - kSingularSampleMargin * half;
  }
  if (lo_out) *lo_out = lo;
  if (hi_out) *hi_out = hi;
  std::vector<double> r(static_cast<std::size_t>(n));
  if (n == 1) {
    r[0] = 0.5 * (lo + hi);
    return r;
  }
  for (int k = 0; k < n; ++k) r[k] = lo + (hi - lo) * k / (n - 1);
  return r;
}

}  // namespace

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::logarithmic:
      return "logarithmic";
    case PotentialKind::quartic:
      return "quartic";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(std::string_view name) {
  if (name == "logarithmic") return PotentialKind::logarithmic;
  if (name == "quartic") return PotentialKind::quartic;
  throw ConfigError("unknown potential kind '" + std::string(name) + "'");
}

double Potential::domain_lo() const { return singular() ? -1.0 : -kInf; }
double Potential::domain_hi() const { return singular() ? 1.0 : kInf; }

double Potential::s0(double r) const { return 0.5 * delta * r * r - evaluate(*this, r).F; }
double Potential::s0_prime(double r) const { return delta * r - evaluate(*this, r).f; }

PotentialValues evaluate(const Potential& p, double r) {
  if (!p.in_domain(r) || !std::isfinite(r)) {
    std::ostringstream msg;
    msg << to_string(p.kind) << " potential evaluated outside its domain at r = " << r;
    throw DomainError(msg.str());
  }
  switch (p.kind) {
    case PotentialKind::logarithmic: {
      const double lp = std::log1p(r);
      const double lm = std::log1p(-r);
      return {(1.0 + r) * lp + (1.0 - r) * lm, lp - lm, 2.0 / ((1.0 - r) * (1.0 + r))};
    }
    case PotentialKind::quartic: {
      const double r2 = r * r;
      return {0.25 * r2 * r2, r2 * r, 3.0 * r2};
    }
  }
  throw DomainError("unhandled potential kind");
}

LatentValues latent_eval(const LatentHeat& l, double r) {
  return {l.value(r), l.slope(r), l.curvature()};
}

CompatReport check_compatibility(const Potential& f_bulk, const Potential& f_surf,
                                 int n_samples) {
  if (n_samples < 1) throw ConfigError("check_compatibility needs at least one sample");
  if (f_surf.domain_lo() < f_bulk.domain_lo() || f_surf.domain_hi() > f_bulk.domain_hi()) {
    throw DomainError("dom(f_surf) is not contained in dom(f_bulk)");
  }

  CompatReport rep;
  rep.sample_margin = f_surf.singular() ? kSingularSampleMargin : 0.0;
  const auto r = sample_domain(f_surf, n_samples, &rep.sample_lo, &rep.sample_hi);

  std::vector<double> fb(r.size()), fs(r.size());
  double fmax = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    fb[k] = evaluate(f_bulk, r[k]).f;
    fs[k] = evaluate(f_surf, r[k]).f;
    fmax = std::max(fmax, std::abs(fb[k]));
  }

  // c_s is read off the outer half of the range of |f|, C_s absorbs the rest.
  double c_s = kInf;
  double kappa = kInf;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (fb[k] == 0.0 || std::abs(fb[k]) < 0.5 * fmax) continue;
    c_s = std::min(c_s, fb[k] * fs[k] / (fb[k] * fb[k]));
    kappa = std::min(kappa, std::abs(fs[k]) / std::abs(fb[k]));
  }
  if (!std::isfinite(c_s)) c_s = 1.0;
  if (!std::isfinite(kappa)) kappa = 1.0;

  double C_s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    C_s = std::max(C_s, c_s * fb[k] * fb[k] - fb[k] * fs[k]);
  }
  rep.c_s = c_s;
  rep.C_s = C_s;

  rep.singular_pair = f_bulk.singular() && f_surf.singular() &&
                      f_bulk.domain_lo() == -1.0 && f_bulk.domain_hi() == 1.0 &&
                      f_surf.domain_lo() == -1.0 && f_surf.domain_hi() == 1.0;
  bool sing_ok = true;
  if (rep.singular_pair) {
    kappa = std::min(kappa, 1.0);
    double C = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      C = std::max(C, kappa * std::abs(fb[k]) - std::abs(fs[k]));
    }
    rep.kappa_s = kappa;
    rep.C_s_sing = C;
    sing_ok = kappa > 0.0;
  }
  rep.ok = c_s > 0.0 && sing_ok;
  return rep;
}

CoercivityFit fit_coercivity(const Potential& p, const LatentHeat& l, int n_samples) {
  if (n_samples < 2) throw ConfigError("check_coercivity needs at least two samples");
  CoercivityFit fit;
  fit.bounded_domain = p.singular();
  double lo = 0.0, hi = 0.0;
  const auto r = sample_domain(p, n_samples, &lo, &hi);
  auto g = [&](double x) { return l.value(x) - p.s0(x); };

  if (fit.bounded_domain) {
    // r^2 is bounded on the domain, so any positive c1 works.
    fit.c1 = 1.0;
  } else {
    // Half of the quadratic growth rate seen at the ends of the window.
    fit.c1 = 0.5 * std::min(g(lo) / (lo * lo), g(hi) / (hi * hi));
  }
  double c2 = -kInf;
  for (double x : r) c2 = std::max(c2, fit.c1 * x * x - g(x));
  fit.c2 = c2;
  fit.ok = fit.bounded_domain || fit.c1 > 0.0;
  return fit;
}

CoercivityReport check_coercivity(const Potential& p_bulk, const Potential& p_surf,
                                  const LatentHeat& l_bulk, const LatentHeat& l_surf,
                                  int n_samples) {
  CoercivityReport rep;
  rep.bulk = fit_coercivity(p_bulk, l_bulk, n_samples);
  rep.surf = fit_coercivity(p_surf, l_surf, n_samples);
  rep.ok = rep.bulk.ok && rep.surf.ok;
  return rep;
}

}  // namespace pfsim
