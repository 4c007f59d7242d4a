#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace randers {

/// Seeded pseudo-random source with distributions computed in-house so that
/// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for sample `index` of a campaign seeded with `seed`.
  static Rng for_sample(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finaliser decorrelates neighbouring indices
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return Rng(z ^ (z >> 31));
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Eigen::VectorXd normal_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd unit_vector(int dim) {
    Eigen::VectorXd v = normal_vector(dim);
    double n = v.norm();
    while (n == 0.0) {
      v = normal_vector(dim);
      n = v.norm();
    }
    return v / n;
  }

  /// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
  Eigen::MatrixXd orthogonal(int dim) {
    Eigen::MatrixXd g(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) g(i, j) = normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// A finite set of unit directions on the Euclidean sphere S^{dim-1}, stored
/// column-wise. Equal-weight quadrature over the sphere is the column mean.
///
/// dim 2: equispaced angles with a seeded offset.
/// dim 3: Fibonacci lattice under a seeded rotation.
/// dim >= 4: seeded Gaussian directions.
class SphereDesign {
 public:
  SphereDesign(int dim, std::size_t n, std::uint64_t seed) : dim_(dim), seed_(seed), dirs_(dim, static_cast<Eigen::Index>(n)) {
    if (dim < 2) throw std::invalid_argument("SphereDesign: dim must be >= 2");
    if (n == 0) throw std::invalid_argument("SphereDesign: need at least one direction");
    Rng rng(seed);
    const auto count = static_cast<double>(n);
    if (dim == 2) {
      const double offset = rng.uniform();
      for (std::size_t k = 0; k < n; ++k) {
        const double t = 2.0 * std::numbers::pi * (static_cast<double>(k) + offset) / count;
        dirs_(0, static_cast<Eigen::Index>(k)) = std::cos(t);
        dirs_(1, static_cast<Eigen::Index>(k)) = std::sin(t);
      }
    } else if (dim == 3) {
      const Eigen::MatrixXd rot = rng.orthogonal(3);
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (std::size_t k = 0; k < n; ++k) {
        const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / count;
        const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(k);
        Eigen::Vector3d v(rxy * std::cos(phi), rxy * std::sin(phi), z);
        dirs_.col(static_cast<Eigen::Index>(k)) = rot * v;
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) dirs_.col(static_cast<Eigen::Index>(k)) = rng.unit_vector(dim);
    }
  }

  int dim() const { return dim_; }
  std::size_t size() const { return static_cast<std::size_t>(dirs_.cols()); }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& directions() const { return dirs_; }
  Eigen::VectorXd direction(std::size_t k) const { return dirs_.col(static_cast<Eigen::Index>(k)); }

 private:
  int dim_;
  std::uint64_t seed_;
  Eigen::MatrixXd dirs_;
};

/// Surface area of the Euclidean unit sphere S^{dim-1}.
inline double unit_sphere_area(int dim) {
  const double half = 0.5 * static_cast<double>(dim);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

}  // namespace randers
