#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "randers/sampling.hpp"

namespace randers {

/// Tangent vector y in the fiber.
struct Vector {
  Eigen::VectorXd coords;

  Vector() = default;
  explicit Vector(Eigen::VectorXd c) : coords(std::move(c)) {}
  int dim() const { return static_cast<int>(coords.size()); }
};

/// Covector xi in the dual fiber.
struct Covector {
  Eigen::VectorXd coords;

  Covector() = default;
  explicit Covector(Eigen::VectorXd c) : coords(std::move(c)) {}
  int dim() const { return static_cast<int>(coords.size()); }
  bool is_zero() const { return (coords.array() == 0.0).all(); }

  friend Covector operator+(const Covector& l, const Covector& r) { return Covector(l.coords + r.coords); }
  friend Covector operator-(const Covector& l, const Covector& r) { return Covector(l.coords - r.coords); }
  friend Covector operator-(const Covector& c) { return Covector(-c.coords); }
  friend Covector operator*(double t, const Covector& c) { return Covector(t * c.coords); }
};

/// Pairing xi(y).
inline double apply(const Covector& xi, const Vector& y) { return xi.coords.dot(y.coords); }

/// Flat Randers structure F(y) = sqrt(y^T A y) + b.y on R^dim.
///
/// A is the Riemannian fiber metric g, b the 1-form beta. The dual metric
/// g* = A^{-1} and a = |b|_{g*} are computed once at construction; a < 1 is
/// what keeps F positive on nonzero vectors.
class MinkowskiRanders {
 public:
  MinkowskiRanders(Eigen::MatrixXd metric, Eigen::VectorXd drift) : metric_(std::move(metric)), drift_(std::move(drift)) {
    const auto n = metric_.rows();
    if (n < 2) throw std::invalid_argument("MinkowskiRanders: dim must be >= 2");
    if (metric_.cols() != n || drift_.size() != n)
      throw std::invalid_argument("MinkowskiRanders: metric must be square and match drift length");
    if (!metric_.allFinite() || !drift_.allFinite()) throw std::invalid_argument("MinkowskiRanders: non-finite entries");
    const double scale = std::max(1.0, metric_.cwiseAbs().maxCoeff());
    if ((metric_ - metric_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("MinkowskiRanders: metric is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(metric_);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("MinkowskiRanders: metric is not positive definite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(metric_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("MinkowskiRanders: metric is not positive definite");
    chol_ = llt.matrixL();
    dual_metric_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
    dual_metric_ = 0.5 * (dual_metric_ + dual_metric_.transpose());
    sharp_drift_ = dual_metric_ * drift_;
    const double a2 = drift_.dot(sharp_drift_);
    beta_norm_ = std::sqrt(std::max(0.0, a2));
    if (!(beta_norm_ < 1.0)) throw std::invalid_argument("MinkowskiRanders: requires |b|_{A^-1} < 1, got " + std::to_string(beta_norm_));
  }

  /// Riemannian metric with b scaled so that |b|_{A^-1} = a along the given direction.
  static MinkowskiRanders with_beta_norm(Eigen::MatrixXd metric, const Eigen::VectorXd& direction, double a) {
    Eigen::LLT<Eigen::MatrixXd> llt(metric);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("MinkowskiRanders: metric is not positive definite");
    const Eigen::VectorXd w = llt.matrixL() * direction;
    const double len = std::sqrt(w.dot(llt.solve(w)));
    if (len == 0.0) return MinkowskiRanders(std::move(metric), Eigen::VectorXd::Zero(direction.size()));
    return MinkowskiRanders(std::move(metric), (a / len) * w);
  }

  static MinkowskiRanders euclidean(int dim) {
    return MinkowskiRanders(Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim));
  }

  int dim() const { return static_cast<int>(drift_.size()); }
  const Eigen::MatrixXd& metric() const { return metric_; }
  const Eigen::VectorXd& drift() const { return drift_; }
  const Eigen::MatrixXd& dual_metric() const { return dual_metric_; }
  /// Lower Cholesky factor L with A = L L^T.
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  /// A^{-1} b, the g*-dual of beta as a vector.
  const Eigen::VectorXd& sharp_drift() const { return sharp_drift_; }
  /// a = sqrt(b^T A^{-1} b).
  double beta_norm() const { return beta_norm_; }

 private:
  Eigen::MatrixXd metric_;
  Eigen::VectorXd drift_;
  Eigen::MatrixXd chol_;
  Eigen::MatrixXd dual_metric_;
  Eigen::VectorXd sharp_drift_;
  double beta_norm_ = 0.0;
};

/// F(y) = sqrt(y^T A y) + b.y
inline double randers_norm(const MinkowskiRanders& m, const Vector& y) {
  const double q = y.coords.dot(m.metric() * y.coords);
  return std::sqrt(std::max(0.0, q)) + m.drift().dot(y.coords);
}

namespace detail {

struct PolarParts {
  double pair;     // <xi, b>_{g*}
  double norm2;    // |xi|^2_{g*}
  double root;     // sqrt(pair^2 + (1-a^2) norm2)
  double value;    // F*(xi)
};

inline PolarParts polar_parts(const MinkowskiRanders& m, const Covector& xi) {
  const double a = m.beta_norm();
  const double one_minus = (1.0 - a) * (1.0 + a);
  PolarParts parts{};
  parts.pair = xi.coords.dot(m.sharp_drift());
  parts.norm2 = std::max(0.0, xi.coords.dot(m.dual_metric() * xi.coords));
  parts.root = std::sqrt(parts.pair * parts.pair + one_minus * parts.norm2);
  // Two algebraically equal forms; pick the one without cancellation.
  if (parts.pair >= 0.0)
    parts.value = parts.root + parts.pair > 0.0 ? parts.norm2 / (parts.root + parts.pair) : 0.0;
  else
    parts.value = (parts.root - parts.pair) / one_minus;
  return parts;
}

}  // namespace detail

/// Co-metric F*(xi) = sup_{y != 0} xi(y) / F(y), in closed form:
/// [sqrt(<xi,b>^2 + (1-a^2)|xi|^2) - <xi,b>] / (1-a^2) with <,> taken in A^{-1}.
inline double polar_norm(const MinkowskiRanders& m, const Covector& xi) { return detail::polar_parts(m, xi).value; }

/// J*(xi) = d/dxi (F*(xi)^2 / 2). J*(0) = 0.
inline Vector legendre(const MinkowskiRanders& m, const Covector& xi) {
  const auto parts = detail::polar_parts(m, xi);
  if (parts.root == 0.0) return Vector(Eigen::VectorXd::Zero(xi.dim()));
  // grad F* = (A^{-1} xi - F* A^{-1} b) / root
  Eigen::VectorXd grad = (m.dual_metric() * xi.coords - parts.value * m.sharp_drift()) / parts.root;
  return Vector(parts.value * grad);
}

/// grad F*(xi) = J*(xi) / F*(xi), 0-homogeneous; undefined at xi = 0.
inline Vector polar_gradient(const MinkowskiRanders& m, const Covector& xi) {
  const auto parts = detail::polar_parts(m, xi);
  if (parts.root == 0.0) throw std::domain_error("polar_gradient: undefined at the zero covector");
  return Vector((m.dual_metric() * xi.coords - parts.value * m.sharp_drift()) / parts.root);
}

/// DF(y) = A y / sqrt(y^T A y) + b, 0-homogeneous; undefined at y = 0.
inline Covector norm_differential(const MinkowskiRanders& m, const Vector& y) {
  const Eigen::VectorXd ay = m.metric() * y.coords;
  const double q = y.coords.dot(ay);
  if (!(q > 0.0)) throw std::domain_error("norm_differential: undefined at the zero vector");
  return Covector(ay / std::sqrt(q) + m.drift());
}

/// r_F = (1+a)/(1-a).
inline double reversibility(const MinkowskiRanders& m) {
  const double a = m.beta_norm();
  return (1.0 + a) / (1.0 - a);
}

/// l_F = ((1-a)/(1+a))^2 = 1 / r_F^2.
inline double uniformity(const MinkowskiRanders& m) {
  const double a = m.beta_norm();
  const double ratio = (1.0 - a) / (1.0 + a);
  return ratio * ratio;
}

/// Brute-force estimate of sup_y xi(y)/F(y) over the directions of `design`.
///
/// Directions are pushed onto the g-unit sphere, y = L^{-T} w, so coverage does
/// not degrade with the conditioning of A. Only F and the pairing are evaluated;
/// the closed-form co-metric is never touched.
inline double duality_oracle(const MinkowskiRanders& m, const Covector& xi, const SphereDesign& design) {
  if (design.dim() != m.dim()) throw std::invalid_argument("duality_oracle: design dimension mismatch");
  // xi(L^{-T} w) = (L^{-1} xi).w ; F(L^{-T} w) = |w| + (L^{-1} b).w
  const auto L = m.cholesky().triangularView<Eigen::Lower>();
  const Eigen::VectorXd xi_w = L.solve(xi.coords);
  const Eigen::VectorXd b_w = L.solve(m.drift());
  const Eigen::RowVectorXd num = xi_w.transpose() * design.directions();
  const Eigen::RowVectorXd den = b_w.transpose() * design.directions();
  double best = 0.0;
  for (Eigen::Index k = 0; k < num.size(); ++k) best = std::max(best, num[k] / (1.0 + den[k]));
  return best;
}

inline double duality_oracle(const MinkowskiRanders& m, const Covector& xi, std::size_t n_samples, std::uint64_t seed = 0x5EEDULL) {
  if (n_samples < 100) throw std::invalid_argument("duality_oracle: n_samples must be >= 100");
  return duality_oracle(m, xi, SphereDesign(m.dim(), n_samples, seed));
}

}  // namespace randers
