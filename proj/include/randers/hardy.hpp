#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "randers/minkowski.hpp"
#include "randers/quadrature.hpp"
#include "randers/sampling.hpp"

namespace randers {

/// Exponents of the weighted Hardy inequalities. `radius` is only used by the
/// logarithmic remainder of the Wang-Willem form.
struct HardyConfig {
  double a_exp = 0.0;
  double b_exp = 0.0;
  double p = 2.0;
  int d = 3;
  double radius = 1.0;

  void validate() const {
    if (!(p > 1.0)) throw std::invalid_argument("HardyConfig: p must exceed 1");
    if (d < 2) throw std::invalid_argument("HardyConfig: d must be >= 2");
    if (!(d + a_exp - p > 0.0)) throw std::invalid_argument("HardyConfig: requires d + a - p > 0");
    if (!(b_exp + p > 0.0)) throw std::invalid_argument("HardyConfig: requires b + p > 0");
    if (!(radius > 0.0)) throw std::invalid_argument("HardyConfig: radius must be positive");
  }

  /// ((a + d - p) / (b + p))^p
  double sharp_constant() const { return std::pow((a_exp + d - p) / (b_exp + p), p); }
};

/// A radial function sampled on its own grid, interpolated piecewise-linearly.
struct SampledProfile {
  std::vector<double> grid;
  std::vector<double> values;
};

/// Cone-measure averages over a unit sphere of the norm used for the radial
/// variable, split by the sign of the radial derivative.
///
/// For u = phi(rho(x)) the pointwise gradient cost is |phi'|^p * descending
/// where phi' < 0 and phi'^p * ascending where phi' > 0. `cone_measure` is
/// d * Vol(unit ball): dx = s^{d-1} ds dmu.
struct RadialAnisotropy {
  double descending = 1.0;
  double ascending = 1.0;
  double cone_measure = 0.0;
};

/// Radial variable rho(x) = F(x) = d_F(0, x); gradient cost F*(-D|u|).
inline RadialAnisotropy hardy_anisotropy(const MinkowskiRanders& m, double p, const SphereDesign& design) {
  if (design.dim() != m.dim()) throw std::invalid_argument("hardy_anisotropy: design dimension mismatch");
  const int d = m.dim();
  double wsum = 0.0, down = 0.0, up = 0.0;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const Vector theta(design.direction(k));
    const double w = std::pow(randers_norm(m, theta), -d);
    const Covector dF = norm_differential(m, theta);
    // -D|u| = -phi' DF: phi' < 0 pairs with +DF, phi' > 0 with -DF.
    down += w * std::pow(polar_norm(m, dF), p);
    up += w * std::pow(polar_norm(m, -dF), p);
    wsum += w;
  }
  return {down / wsum, up / wsum, unit_sphere_area(d) * wsum / static_cast<double>(design.size())};
}

/// Radial variable rho(x) = F*(-x); gradient cost F(grad |u|).
inline RadialAnisotropy wang_willem_anisotropy(const MinkowskiRanders& m, double p, const SphereDesign& design) {
  if (design.dim() != m.dim()) throw std::invalid_argument("wang_willem_anisotropy: design dimension mismatch");
  const int d = m.dim();
  double wsum = 0.0, down = 0.0, up = 0.0;
  for (std::size_t k = 0; k < design.size(); ++k) {
    const Covector minus_theta(-design.direction(k));
    const double w = std::pow(polar_norm(m, minus_theta), -d);
    // grad rho(x) = -(grad F*)(-x); grad u = phi' grad rho.
    const Vector g = polar_gradient(m, minus_theta);
    const Vector minus_g(-g.coords);
    down += w * std::pow(randers_norm(m, g), p);
    up += w * std::pow(randers_norm(m, minus_g), p);
    wsum += w;
  }
  return {down / wsum, up / wsum, unit_sphere_area(d) * wsum / static_cast<double>(design.size())};
}

inline constexpr std::size_t kDefaultAnisotropyDirections = 4096;
inline constexpr std::uint64_t kDefaultAnisotropySeed = 0xA11CEULL;

namespace detail {

inline std::vector<double> abs_values(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::abs(x);
  return out;
}

inline double radial_gradient_cost(double du, double p, const RadialAnisotropy& an) {
  if (du < 0.0) return std::pow(-du, p) * an.descending;
  if (du > 0.0) return std::pow(du, p) * an.ascending;
  return 0.0;
}

}  // namespace detail

/// Left side over right side of the weighted Hardy inequality on a flat Randers
/// space, for u(x) = phi(F(x)):
///
///   int F(x)^a |u|^b F*^p(-D|u|) dx  /  [C int |u|^{p+b} F(x)^{a-p} dx],
///   C = ((a+d-p)/(b+p))^p.
///
/// The right-hand weight is read as d_F^{a-p}. Both sides are reduced to
/// one-dimensional integrals in s = F(x); the common cone-measure factor cancels.
inline double hardy_ratio(const HardyConfig& cfg, const SampledProfile& u, const RadialAnisotropy& an,
                          const QuadratureSpec& quad = {}) {
  cfg.validate();
  validate_grid(u.grid);
  const auto phi = detail::abs_values(u.values);
  const double p = cfg.p, a = cfg.a_exp, b = cfg.b_exp;
  const double d = static_cast<double>(cfg.d);
  const double num = integrate_piecewise_linear(
      u.grid, phi,
      [&](double s, double v, double du) {
        const double ub = b == 0.0 ? 1.0 : std::pow(v, b);
        return std::pow(s, a + d - 1.0) * ub * detail::radial_gradient_cost(du, p, an);
      },
      quad);
  const double den = integrate_piecewise_linear(
      u.grid, phi, [&](double s, double v, double) { return std::pow(v, p + b) * std::pow(s, a - p + d - 1.0); }, quad);
  if (!std::isfinite(den)) throw std::domain_error("hardy_ratio: weighted L^{p+b} integral diverges at the origin");
  if (!(den > 0.0)) throw std::invalid_argument("hardy_ratio: profile vanishes identically");
  return num / (cfg.sharp_constant() * den);
}

inline double hardy_ratio(const MinkowskiRanders& m, const HardyConfig& cfg, const SampledProfile& u,
                          const QuadratureSpec& quad = {}) {
  if (m.dim() != cfg.d) throw std::invalid_argument("hardy_ratio: structure dimension differs from cfg.d");
  const SphereDesign design(m.dim(), kDefaultAnisotropyDirections, kDefaultAnisotropySeed);
  return hardy_ratio(cfg, u, hardy_anisotropy(m, cfg.p, design), quad);
}

/// The three integrals of the improved Hardy inequality with logarithmic remainder,
/// in Lebesgue measure.
struct WangWillemTerms {
  double lhs = 0.0;        // int F*^a(-x) F^p(grad|u|)
  double hardy = 0.0;      // ((d+a-p)/p)^p int F*^{a-p}(-x)|u|^p
  double remainder = 0.0;  // l_F^{p/2}/2^{p-1} ((p-1)/p)^p int F*^{a-p}(-x)|u|^p / ln(R/F*(-x))^p
  double slack() const { return lhs - (hardy + remainder); }
  double scale() const { return std::abs(lhs) + std::abs(hardy) + std::abs(remainder); }
};

/// Terms of the Wang-Willem-type inequality for u(x) = phi(F*(-x)) supported
/// in {F*(-x) < R}.
inline WangWillemTerms wang_willem_terms(const HardyConfig& cfg, double uniformity_constant, const SampledProfile& u,
                                         const RadialAnisotropy& an, const QuadratureSpec& quad = {}) {
  cfg.validate();
  validate_grid(u.grid);
  const auto phi = detail::abs_values(u.values);
  std::size_t last = phi.size();
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (phi[i] != 0.0) last = i;
  if (last == phi.size()) return {};
  const double support_end = last + 1 < u.grid.size() ? u.grid[last + 1] : u.grid[last];
  const double R = cfg.radius;
  if (!(support_end < R)) throw std::domain_error("wang_willem: profile support reaches F*(-x) = R");

  const double p = cfg.p, a = cfg.a_exp;
  const double d = static_cast<double>(cfg.d);
  const double weight_exp = a - p + d - 1.0;
  WangWillemTerms t;
  t.lhs = an.cone_measure * integrate_piecewise_linear(
                                u.grid, phi,
                                [&](double s, double, double du) {
                                  return std::pow(s, a + d - 1.0) * detail::radial_gradient_cost(du, p, an);
                                },
                                quad);
  const double base = integrate_piecewise_linear(
      u.grid, phi, [&](double s, double v, double) { return std::pow(s, weight_exp) * std::pow(v, p); }, quad);
  const double logged = integrate_piecewise_linear(
      u.grid, phi,
      [&](double s, double v, double) {
        if (v == 0.0) return 0.0;
        return std::pow(s, weight_exp) * std::pow(v, p) * std::pow(std::log(R / s), -p);
      },
      quad);
  t.hardy = an.cone_measure * std::pow((d + a - p) / p, p) * base;
  t.remainder = an.cone_measure * std::pow(uniformity_constant, 0.5 * p) / std::pow(2.0, p - 1.0) *
                std::pow((p - 1.0) / p, p) * logged;
  return t;
}

/// LHS - RHS of the Wang-Willem-type inequality (see wang_willem_terms).
inline double wang_willem_slack(const MinkowskiRanders& m, const HardyConfig& cfg, const SampledProfile& u,
                                const QuadratureSpec& quad = {}) {
  if (m.dim() != cfg.d) throw std::invalid_argument("wang_willem_slack: structure dimension differs from cfg.d");
  const SphereDesign design(m.dim(), kDefaultAnisotropyDirections, kDefaultAnisotropySeed);
  return wang_willem_terms(cfg, uniformity(m), u, wang_willem_anisotropy(m, cfg.p, design), quad).slack();
}

// ---------------------------------------------------------------------------
// Test profiles

/// Nonnegative sum of 1-4 smooth compact bumps (1 - x^2)^2, all supported in
/// [0, support_end). Roughly a third of the draws carry a plateau at the origin.
inline SampledProfile random_bump_profile(Rng& rng, std::vector<double> grid, double support_end) {
  SampledProfile u{std::move(grid), {}};
  u.values.assign(u.grid.size(), 0.0);
  const int bumps = 1 + static_cast<int>(rng.index(4));
  for (int k = 0; k < bumps; ++k) {
    const bool at_origin = rng.uniform() < 0.35;
    const double centre = at_origin ? 0.0 : rng.uniform(0.05, 0.85) * support_end;
    double width = rng.uniform(0.05, 0.6) * support_end;
    width = std::min(width, 0.98 * (support_end - centre));
    const double height = rng.uniform(0.1, 2.0);
    for (std::size_t i = 0; i < u.grid.size(); ++i) {
      const double x = (u.grid[i] - centre) / width;
      if (std::abs(x) < 1.0) u.values[i] += height * (1.0 - x * x) * (1.0 - x * x);
    }
  }
  for (std::size_t i = 0; i < u.grid.size(); ++i)
    if (u.grid[i] >= support_end) u.values[i] = 0.0;
  return u;
}

/// u(s) = s^{-gamma0} v(s) with v(s) = max(0, s^eps - (s/S)^M s^eps),
/// gamma0 = (a+d-p)/(b+p), s clamped below at the first positive node.
inline SampledProfile near_extremal_profile(const HardyConfig& cfg, std::vector<double> grid, double eps, double M,
                                            double S) {
  if (grid.size() < 3 || !(S <= grid.back())) throw std::invalid_argument("near_extremal_profile: grid must cover [0,S]");
  const double gamma0 = (cfg.a_exp + cfg.d - cfg.p) / (cfg.b_exp + cfg.p);
  SampledProfile u{std::move(grid), {}};
  u.values.resize(u.grid.size());
  const double floor_s = u.grid[1];
  for (std::size_t i = 0; i < u.grid.size(); ++i) {
    const double s = std::max(u.grid[i], floor_s);
    const double v = std::max(0.0, std::pow(s, eps) * (1.0 - std::pow(s / S, M)));
    u.values[i] = std::pow(s, -gamma0) * v;
  }
  u.values.back() = 0.0;
  return u;
}

struct ExtremalScanResult {
  double min_ratio = std::numeric_limits<double>::infinity();
  double eps = 0.0;
  double M = 0.0;
  std::size_t profiles = 0;
};

/// Scans the near-extremal family over eps and M on a geometric grid reaching
/// down to 1e-30; the minimum ratio approaches 1 from above.
inline ExtremalScanResult near_extremal_scan(const HardyConfig& cfg, const RadialAnisotropy& an,
                                             std::span<const double> eps_values, std::span<const double> m_values,
                                             std::size_t cells = 4096, const QuadratureSpec& quad = {}) {
  const double S = 1.0;
  const auto grid = geometric_grid(1e-30, S, cells);
  ExtremalScanResult best;
  for (double eps : eps_values) {
    for (double M : m_values) {
      const double r = hardy_ratio(cfg, near_extremal_profile(cfg, grid, eps, M, S), an, quad);
      ++best.profiles;
      if (r < best.min_ratio) best = {r, eps, M, best.profiles};
    }
  }
  return best;
}

}  // namespace randers
