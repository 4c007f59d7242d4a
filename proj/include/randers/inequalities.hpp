#pragma once

#include <cmath>
#include <stdexcept>

#include "randers/minkowski.hpp"

namespace randers {

/// Relative tolerance used by every pointwise slack check.
inline constexpr double kPointwiseRelTol = 1e-10;

/// 1e-10 * (1 + F*^p(beta) + F*^p(xi)).
inline double pointwise_tolerance(const MinkowskiRanders& m, double p, const Covector& xi, const Covector& beta) {
  return kPointwiseRelTol * (1.0 + std::pow(polar_norm(m, beta), p) + std::pow(polar_norm(m, xi), p));
}

/// F*^{p-2}(xi) J*(xi), the gradient of F*^p / p. Zero at xi = 0 for every p > 1.
inline Vector p_duality_map(const MinkowskiRanders& m, const Covector& xi, double p) {
  const double f = polar_norm(m, xi);
  if (f == 0.0) return Vector(Eigen::VectorXd::Zero(xi.dim()));
  Vector j = legendre(m, xi);
  j.coords *= std::pow(f, p - 2.0);
  return j;
}

/// RHS - LHS of
///   F*^2(t xi + (1-t) beta) <= t F*^2(xi) + (1-t) F*^2(beta) - l_F t (1-t) F*^2(beta - xi).
///
/// The convex combination is anchored at the nearer endpoint so that t in {0,1}
/// and xi == beta produce an exact zero.
inline double uniformity_slack(const MinkowskiRanders& m, const Covector& xi, const Covector& beta, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("uniformity_slack: t must lie in [0,1]");
  const double fx2 = std::pow(polar_norm(m, xi), 2);
  const double fb2 = std::pow(polar_norm(m, beta), 2);
  const double fd2 = std::pow(polar_norm(m, beta - xi), 2);
  const double strong = uniformity(m) * t * (1.0 - t) * fd2;
  if (t <= 0.5) {
    const Covector mid = beta + t * (xi - beta);
    const double rhs = fb2 + t * (fx2 - fb2) - strong;
    return rhs - std::pow(polar_norm(m, mid), 2);
  }
  const Covector mid = xi + (1.0 - t) * (beta - xi);
  const double rhs = fx2 + (1.0 - t) * (fb2 - fx2) - strong;
  return rhs - std::pow(polar_norm(m, mid), 2);
}

/// |b|^p - |a|^p - p <|a|^{p-2} a, b - a> - 2^{1-p} |a - b|^p  (Euclidean, p >= 2).
inline double lindqvist_slack(double p, const Vector& a_vec, const Vector& b_vec) {
  if (!(p >= 2.0)) throw std::invalid_argument("lindqvist_slack: requires p >= 2");
  if (a_vec.dim() != b_vec.dim()) throw std::invalid_argument("lindqvist_slack: dimension mismatch");
  const double na = a_vec.coords.norm();
  const double nb = b_vec.coords.norm();
  const Eigen::VectorXd diff = b_vec.coords - a_vec.coords;
  const double linear = na == 0.0 ? 0.0 : p * std::pow(na, p - 2.0) * a_vec.coords.dot(diff);
  const double remainder = std::pow(2.0, 1.0 - p) * std::pow(diff.norm(), p);
  return std::pow(nb, p) - (std::pow(na, p) + linear + remainder);
}

/// F*^p(beta) - [ p (beta - xi)(F*^{p-2}(xi) J*(xi)) + l_F^{p/2}/2^{p-1} F*^p(beta - xi) + F*^p(xi) ].
inline double clarkson_finsler_slack(const MinkowskiRanders& m, double p, const Covector& xi, const Covector& beta) {
  if (!(p >= 2.0)) throw std::invalid_argument("clarkson_finsler_slack: requires p >= 2");
  const Covector diff = beta - xi;
  const double linear = p * apply(diff, p_duality_map(m, xi, p));
  const double remainder = std::pow(uniformity(m), 0.5 * p) / std::pow(2.0, p - 1.0) * std::pow(polar_norm(m, diff), p);
  return std::pow(polar_norm(m, beta), p) - (linear + remainder + std::pow(polar_norm(m, xi), p));
}

/// Same as the Clarkson-type slack without the l_F remainder; valid for p > 1.
inline double convexity_step_slack(const MinkowskiRanders& m, double p, const Covector& xi, const Covector& beta) {
  if (!(p > 1.0)) throw std::invalid_argument("convexity_step_slack: requires p > 1");
  const Covector diff = beta - xi;
  const double linear = p * apply(diff, p_duality_map(m, xi, p));
  return std::pow(polar_norm(m, beta), p) - (linear + std::pow(polar_norm(m, xi), p));
}

/// The exact gap convexity_step_slack - clarkson_finsler_slack.
inline double clarkson_remainder(const MinkowskiRanders& m, double p, const Covector& xi, const Covector& beta) {
  return std::pow(uniformity(m), 0.5 * p) / std::pow(2.0, p - 1.0) * std::pow(polar_norm(m, beta - xi), p);
}

}  // namespace randers
