#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "randers/csv.hpp"
#include "randers/quadrature.hpp"
#include "randers/radial_model.hpp"
#include "randers/sampling.hpp"

namespace randers {

enum class Nonlinearity { power_r };

/// Exponents and coefficients of the critical problem
///   -Delta_{p,F} u + |u|^{p-2}u = mu |u|^{p*-2}u + lambda alpha h(u),  h(t) = |t|^{r-2} t.
struct ProblemParams {
  double p = 2.0;
  double q = 3.0;
  double r = 1.5;
  double c1 = 1.0;
  double c2 = 1.0;
  double mu = 1.0;
  double lambda = 0.0;
  int d = 4;
  Nonlinearity h_kind = Nonlinearity::power_r;

  double p_star() const { return p * d / (d - p); }

  void validate() const {
    if (d < 2) throw std::invalid_argument("ProblemParams: d must be >= 2");
    if (!(p > 1.0 && p < d)) throw std::invalid_argument("ProblemParams: requires 1 < p < d");
    if (!(r > 1.0 && r < p)) throw std::invalid_argument("ProblemParams: requires 1 < r < p");
    if (!(q >= p && q < p_star())) throw std::invalid_argument("ProblemParams: requires p <= q < p*");
    if (!(c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("ProblemParams: c1 and c2 must be positive");
    if (!(mu >= 0.0)) throw std::invalid_argument("ProblemParams: mu must be nonnegative");
    if (!(lambda >= 0.0)) throw std::invalid_argument("ProblemParams: lambda must be nonnegative");
  }
};

struct EnergyBreakdown {
  double grad_term = 0.0;
  double mass_term = 0.0;
  double critical_term = 0.0;
  double perturbation_term = 0.0;
  double total = 0.0;
  double norm_F = 0.0;
};

namespace detail {

/// |x|^e with the common integer and half-integer exponents done by multiplication.
inline double abs_pow(double x, double e) {
  x = std::abs(x);
  if (e == 2.0) return x * x;
  if (e == 4.0) return (x * x) * (x * x);
  if (e == 3.0) return x * x * x;
  if (e == 1.5) return x * std::sqrt(x);
  if (e == 1.0) return x;
  return std::pow(x, e);
}

/// |x|^{e-2} x
inline double signed_pow(double x, double e) {
  if (x == 0.0) return 0.0;
  return std::copysign(abs_pow(x, e - 1.0), x);
}

}  // namespace detail

/// The discrete energy on a fixed model and quadrature. Quadrature abscissae,
/// density and weight are tabulated once.
class DiscreteEnergy {
 public:
  DiscreteEnergy(const RadialModel& model, const ProblemParams& params, const QuadratureSpec& quad = {})
      : model_(model), params_(params), quad_(quad) {
    params_.validate();
    if (params_.d != model.d()) throw std::invalid_argument("DiscreteEnergy: params.d differs from model.d");
    const auto& g = model.grid();
    const std::size_t cells = g.size() - 1;
    h_.resize(cells);
    cell_volume_.assign(cells, 0.0);
    for (std::size_t i = 0; i < cells; ++i) h_[i] = g[i + 1] - g[i];
    for (const auto& node : quadrature_nodes(g, quad)) {
      const double w = node.weight * volume_density(model, node.s);
      pts_.push_back({node.cell, node.theta, w, w * alpha_weight(model, node.s)});
      cell_volume_[node.cell] += w;
    }
  }

  const RadialModel& model() const { return model_; }
  const ProblemParams& params() const { return params_; }
  const QuadratureSpec& quadrature() const { return quad_; }
  std::size_t nodes() const { return h_.size() + 1; }

  /// (du+ + rho du-)^p
  double gradient_cost(double du) const {
    if (du > 0.0) return detail::abs_pow(du, params_.p);
    if (du < 0.0) return detail::abs_pow(model_.rho_rev() * du, params_.p);
    return 0.0;
  }

  EnergyBreakdown evaluate(std::span<const double> u) const {
    check(u);
    const double p = params_.p, ps = params_.p_star(), r = params_.r;
    double grad = 0.0, mass = 0.0, crit = 0.0, pert = 0.0;
    for (std::size_t i = 0; i < h_.size(); ++i) grad += cell_volume_[i] * gradient_cost((u[i + 1] - u[i]) / h_[i]);
    for (const auto& q : pts_) {
      const double v = (1.0 - q.theta) * u[q.cell] + q.theta * u[q.cell + 1];
      mass += q.w * detail::abs_pow(v, p);
      crit += q.w * detail::abs_pow(v, ps);
      pert += q.aw * detail::abs_pow(v, r);
    }
    EnergyBreakdown e;
    e.grad_term = grad / p;
    e.mass_term = mass / p;
    e.critical_term = params_.mu * crit / ps;
    e.perturbation_term = params_.lambda * pert / r;
    e.total = e.grad_term + e.mass_term - e.critical_term - e.perturbation_term;
    e.norm_F = std::pow(grad + mass, 1.0 / p);
    return e;
  }

  /// Exact gradient of evaluate().total with respect to the nodal values; the
  /// Dirichlet node S_max carries 0. The gradient-term derivative is 0 at du = 0.
  std::vector<double> gradient(std::span<const double> u) const {
    check(u);
    const double p = params_.p, ps = params_.p_star(), r = params_.r;
    const double rho_p = std::pow(model_.rho_rev(), p);
    std::vector<double> g(u.size(), 0.0);
    for (std::size_t i = 0; i < h_.size(); ++i) {
      const double du = (u[i + 1] - u[i]) / h_[i];
      // d/d(du) of (1/p) G(du)
      double dg = 0.0;
      if (du > 0.0) dg = detail::abs_pow(du, p - 1.0);
      else if (du < 0.0) dg = -rho_p * detail::abs_pow(du, p - 1.0);
      const double c = cell_volume_[i] * dg / h_[i];
      g[i] -= c;
      g[i + 1] += c;
    }
    for (const auto& q : pts_) {
      const double v = (1.0 - q.theta) * u[q.cell] + q.theta * u[q.cell + 1];
      const double f = q.w * (detail::signed_pow(v, p) - params_.mu * detail::signed_pow(v, ps)) -
                       params_.lambda * q.aw * detail::signed_pow(v, r);
      g[q.cell] += (1.0 - q.theta) * f;
      g[q.cell + 1] += q.theta * f;
    }
    g.back() = 0.0;
    return g;
  }

  /// ||u||_F = (int F*^p(Du) + |u|^p)^{1/p}
  double norm(std::span<const double> u) const {
    check(u);
    double total = 0.0;
    for (std::size_t i = 0; i < h_.size(); ++i) total += cell_volume_[i] * gradient_cost((u[i + 1] - u[i]) / h_[i]);
    for (const auto& q : pts_) total += q.w * detail::abs_pow((1.0 - q.theta) * u[q.cell] + q.theta * u[q.cell + 1], params_.p);
    return std::pow(total, 1.0 / params_.p);
  }

  /// (int |u|^e dV)^{1/e}
  double lebesgue_norm(std::span<const double> u, double e) const {
    check(u);
    double total = 0.0;
    for (const auto& q : pts_) total += q.w * detail::abs_pow((1.0 - q.theta) * u[q.cell] + q.theta * u[q.cell + 1], e);
    return std::pow(total, 1.0 / e);
  }

  /// Tridiagonal Sobolev metric on the free nodes 0..N-1: the Hessian of
  /// (1/p)||u||_F^p at u, with |du|^{p-2} and |u|^{p-2} floored when p != 2.
  Eigen::SparseMatrix<double> metric(std::span<const double> u) const {
    check(u);
    const double p = params_.p;
    const auto n = static_cast<Eigen::Index>(h_.size());
    const double rho_p = std::pow(model_.rho_rev(), p);
    double du_max = 0.0, u_max = 0.0;
    for (std::size_t i = 0; i < h_.size(); ++i) du_max = std::max(du_max, std::abs(u[i + 1] - u[i]) / h_[i]);
    for (double v : u) u_max = std::max(u_max, std::abs(v));
    const double du_floor = 1e-3 * du_max + std::numeric_limits<double>::min();
    const double u_floor = 1e-3 * u_max + std::numeric_limits<double>::min();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 4 + pts_.size() * 4);
    auto add = [&](std::size_t i, std::size_t j, double v) {
      if (static_cast<Eigen::Index>(i) < n && static_cast<Eigen::Index>(j) < n)
        trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), v);
    };
    for (std::size_t i = 0; i < h_.size(); ++i) {
      const double du = (u[i + 1] - u[i]) / h_[i];
      const double side = du > 0.0 ? 1.0 : du < 0.0 ? rho_p : std::max(1.0, rho_p);
      const double curv = p == 2.0 ? 1.0 : (p - 1.0) * std::pow(std::max(std::abs(du), du_floor), p - 2.0);
      const double c = cell_volume_[i] * side * curv / (h_[i] * h_[i]);
      add(i, i, c);
      add(i + 1, i + 1, c);
      add(i, i + 1, -c);
      add(i + 1, i, -c);
    }
    for (const auto& q : pts_) {
      double c = q.w;
      if (p != 2.0) {
        const double v = (1.0 - q.theta) * u[q.cell] + q.theta * u[q.cell + 1];
        c *= (p - 1.0) * std::pow(std::max(std::abs(v), u_floor), p - 2.0);
      }
      const double l = 1.0 - q.theta, rgt = q.theta;
      add(q.cell, q.cell, c * l * l);
      add(q.cell + 1, q.cell + 1, c * rgt * rgt);
      add(q.cell, q.cell + 1, c * l * rgt);
      add(q.cell + 1, q.cell, c * l * rgt);
    }
    Eigen::SparseMatrix<double> k(n, n);
    k.setFromTriplets(trip.begin(), trip.end());
    return k;
  }

 private:
  struct Point {
    std::size_t cell;
    double theta;
    double w;   // quadrature weight times density
    double aw;  // w times alpha_0
  };

  void check(std::span<const double> u) const {
    if (u.size() != h_.size() + 1) throw std::invalid_argument("profile is not aligned with the model grid");
  }

  RadialModel model_;
  ProblemParams params_;
  QuadratureSpec quad_;
  std::vector<double> h_;
  std::vector<double> cell_volume_;
  std::vector<Point> pts_;
};

inline EnergyBreakdown energy(const RadialModel& model, const ProblemParams& params, const RadialProfile& u,
                              const QuadratureSpec& quad = {}) {
  return DiscreteEnergy(model, params, quad).evaluate(u.values);
}

inline RadialProfile energy_gradient(const RadialModel& model, const ProblemParams& params, const RadialProfile& u,
                                     const QuadratureSpec& quad = {}) {
  return {DiscreteEnergy(model, params, quad).gradient(u.values)};
}

inline double sobolev_norm(const RadialModel& model, const ProblemParams& params, const RadialProfile& u,
                           const QuadratureSpec& quad = {}) {
  return DiscreteEnergy(model, params, quad).norm(u.values);
}

// ---------------------------------------------------------------------------
// Embedding constant

namespace detail {

/// Cut-off Talenti profile (1 + (s/scale)^{p/(p-1)})^{-decay (d-p)/p} minus its value at S_max.
inline std::vector<double> bubble(const RadialModel& model, double p, double scale, double decay) {
  const auto& g = model.grid();
  const double e1 = p / (p - 1.0);
  const double e2 = -decay * (model.d() - p) / p;
  auto f = [&](double s) { return std::pow(1.0 + std::pow(s / scale, e1), e2); };
  const double tail = f(model.S_max());
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::max(0.0, f(g[i]) - tail);
  v.back() = 0.0;
  return v;
}

inline std::vector<double> bump(const RadialModel& model, double centre, double width) {
  const auto& g = model.grid();
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = (g[i] - centre) / width;
    if (std::abs(x) < 1.0) v[i] = (1.0 - x * x) * (1.0 - x * x);
  }
  v.back() = 0.0;
  return v;
}

/// max(||u||_{p*}/||u||_F, ||-u||_{p*}/||-u||_F); the norm is not even.
inline double embedding_ratio(const DiscreteEnergy& e, std::vector<double> u) {
  const double ps = e.params().p_star();
  double best = 0.0;
  for (int sign = 0; sign < 2; ++sign) {
    const double n = e.norm(u);
    if (n > 0.0) best = std::max(best, e.lebesgue_norm(u, ps) / n);
    for (double& x : u) x = -x;
  }
  return best;
}

/// Plain Nelder-Mead maximisation in two variables with box clamping.
template <class Fn>
std::pair<std::array<double, 2>, double> nelder_mead_max(Fn&& f, std::array<double, 2> x0, std::array<double, 2> step,
                                                         std::array<double, 2> lo, std::array<double, 2> hi,
                                                         int iterations) {
  auto clamp = [&](std::array<double, 2> x) {
    for (int k = 0; k < 2; ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
    return x;
  };
  std::array<std::array<double, 2>, 3> xs{clamp(x0), clamp({x0[0] + step[0], x0[1]}), clamp({x0[0], x0[1] + step[1]})};
  std::array<double, 3> fs{};
  for (int k = 0; k < 3; ++k) fs[k] = f(xs[k]);
  for (int it = 0; it < iterations; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] > fs[b]; });
    const auto best = xs[idx[0]], mid = xs[idx[1]], worst = xs[idx[2]];
    const double fmid = fs[idx[1]], fworst = fs[idx[2]];
    const std::array<double, 2> c{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    auto along = [&](double t) { return clamp({c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}); };
    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr > fs[idx[0]]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      xs[idx[2]] = fe > fr ? xe : xr;
      fs[idx[2]] = std::max(fe, fr);
    } else if (fr > fmid) {
      xs[idx[2]] = xr;
      fs[idx[2]] = fr;
    } else {
      const auto xc = along(0.5);
      const double fc = f(xc);
      if (fc > fworst) {
        xs[idx[2]] = xc;
        fs[idx[2]] = fc;
      } else {
        for (int k : {idx[1], idx[2]}) {
          xs[k] = clamp({0.5 * (xs[k][0] + best[0]), 0.5 * (xs[k][1] + best[1])});
          fs[k] = f(xs[k]);
        }
      }
    }
  }
  const auto top = std::max_element(fs.begin(), fs.end()) - fs.begin();
  return {xs[top], fs[top]};
}

}  // namespace detail

struct EmbeddingEstimate {
  double max_ratio = 0.0;  // before the safety factor
  double kappa = 0.0;      // 1.1 * max_ratio
  std::size_t profiles = 0;
};

inline constexpr double kEmbeddingSafety = 1.1;

/// Numerical sup of ||u||_{p*} / ||u||_F on the discrete model: random bumps
/// and bubbles from `seed`, then a Nelder-Mead refinement over the bubble
/// family seeded by a fixed scale scan. The refinement does not depend on
/// n_trials, so more trials never lower the estimate.
inline EmbeddingEstimate estimate_embedding_constant(const RadialModel& model, const ProblemParams& params,
                                                     std::size_t n_trials, std::uint64_t seed,
                                                     const QuadratureSpec& quad = {}) {
  if (n_trials < 10) throw std::invalid_argument("embedding_constant: n_trials must be >= 10");
  ProblemParams pp = params;
  pp.lambda = 0.0;
  const DiscreteEnergy e(model, pp, quad);
  const double S = model.S_max();
  const double s_lo = 4.0 * model.grid()[1];
  const double log_lo = std::log(s_lo), log_hi = std::log(0.5 * S);
  EmbeddingEstimate est;
  auto consider = [&](const std::vector<double>& u) {
    ++est.profiles;
    est.max_ratio = std::max(est.max_ratio, detail::embedding_ratio(e, u));
  };

  for (std::size_t j = 0; j < n_trials; ++j) {
    Rng rng = Rng::for_sample(seed, j);
    if (rng.uniform() < 0.5) {
      const double width = std::exp(rng.uniform(log_lo, log_hi));
      const double centre = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, S - width);
      consider(detail::bump(model, centre, width));
    } else {
      consider(detail::bubble(model, pp.p, std::exp(rng.uniform(log_lo, log_hi)), rng.uniform(0.8, 1.6)));
    }
  }

  // fixed scan, then local refinement in (log scale, log decay)
  double best_scale = log_lo, best_val = -1.0;
  for (int k = 0; k <= 40; ++k) {
    const double ls = log_lo + (log_hi - log_lo) * k / 40.0;
    const double v = detail::embedding_ratio(e, detail::bubble(model, pp.p, std::exp(ls), 1.0));
    ++est.profiles;
    if (v > best_val) best_val = v, best_scale = ls;
  }
  est.max_ratio = std::max(est.max_ratio, best_val);
  auto objective = [&](const std::array<double, 2>& x) {
    ++est.profiles;
    return detail::embedding_ratio(e, detail::bubble(model, pp.p, std::exp(x[0]), std::exp(x[1])));
  };
  const auto refined = detail::nelder_mead_max(objective, {best_scale, 0.0}, {0.3, 0.2}, {log_lo, std::log(0.5)},
                                               {log_hi, std::log(3.0)}, 60);
  est.max_ratio = std::max(est.max_ratio, refined.second);
  est.kappa = kEmbeddingSafety * est.max_ratio;
  return est;
}

inline double embedding_constant(const RadialModel& model, const ProblemParams& params, std::size_t n_trials,
                                 std::uint64_t seed, const QuadratureSpec& quad = {}) {
  return estimate_embedding_constant(model, params, n_trials, seed, quad).kappa;
}

// ---------------------------------------------------------------------------
// Thresholds

/// rho* = ((1/mu)(p*/p) l^{p/2} / (2^{p-1} kappa^{p*}))^{1/(p*-p)}
inline double rho_star(const ProblemParams& params, double kappa_emb, double l_F) {
  if (!(kappa_emb > 0.0)) throw std::invalid_argument("rho_star: kappa must be positive");
  if (!(l_F > 0.0 && l_F <= 1.0)) throw std::invalid_argument("rho_star: l_F must lie in (0,1]");
  if (!(params.mu > 0.0)) throw std::invalid_argument("rho_star: mu must be positive");
  const double p = params.p, ps = params.p_star();
  const double inner = (1.0 / params.mu) * (ps / p) * std::pow(l_F, 0.5 * p) / (std::pow(2.0, p - 1.0) * std::pow(kappa_emb, ps));
  return std::pow(inner, 1.0 / (ps - p));
}

struct AlphaNorms {
  double q_norm;  // ||alpha||_{p*/(p*-q)}
  double r_norm;  // ||alpha||_{p*/(p*-r)}
};

inline AlphaNorms alpha_norms(const RadialModel& model, const ProblemParams& params, const QuadratureSpec& quad = {}) {
  const double ps = params.p_star();
  const std::array<double, 2> e{ps / (ps - params.q), ps / (ps - params.r)};
  const auto n = alpha_lp_norms(model, e, quad);
  return {n[0], n[1]};
}

/// t -> (t^{p-1} - mu kappa^{p*} t^{p*-1}) / (c1 kappa^q A_q t^{q-1} + c2 kappa^r A_r t^{r-1})
inline double threshold_ratio(const ProblemParams& pr, double kappa, const AlphaNorms& an, double t) {
  const double ps = pr.p_star();
  const double num = std::pow(t, pr.p - 1.0) - pr.mu * std::pow(kappa, ps) * std::pow(t, ps - 1.0);
  const double den = pr.c1 * std::pow(kappa, pr.q) * an.q_norm * std::pow(t, pr.q - 1.0) +
                     pr.c2 * std::pow(kappa, pr.r) * an.r_norm * std::pow(t, pr.r - 1.0);
  return num / den;
}

/// Zero of the numerator of threshold_ratio.
inline double threshold_upper(const ProblemParams& pr, double kappa) {
  if (!(pr.mu > 0.0)) throw std::invalid_argument("threshold_upper: mu must be positive");
  return std::pow(1.0 / (pr.mu * std::pow(kappa, pr.p_star())), 1.0 / (pr.p_star() - pr.p));
}

/// Argmax of threshold_ratio on (0, t_up) by golden-section search in log t.
/// The ratio is unimodal there: t (log f)' is strictly decreasing.
inline double rho_zero(const ProblemParams& pr, double kappa, const AlphaNorms& an) {
  if (!(kappa > 0.0)) throw std::invalid_argument("rho_zero: kappa must be positive");
  const double t_up = threshold_upper(pr, kappa);
  auto f = [&](double x) { return threshold_ratio(pr, kappa, an, std::exp(x)); };
  double lo = std::log(t_up) - 1.0, hi = std::log(t_up);
  // extend the bracket downward until the ratio turns
  while (f(lo - 1.0) >= f(lo)) {
    lo -= 1.0;
    if (lo < std::log(t_up) - 700.0) throw std::domain_error("rho_zero: no interior maximum");
  }
  lo -= 1.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-11) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
  }
  const double t = std::exp(0.5 * (lo + hi));
  if (!(threshold_ratio(pr, kappa, an, t) > 0.0)) throw std::domain_error("rho_zero: maximum of the ratio is not positive");
  return t;
}

inline double lambda_star(const ProblemParams& pr, double kappa, const AlphaNorms& an, double l_F) {
  const double rho_mu = std::min(rho_zero(pr, kappa, an), rho_star(pr, kappa, l_F));
  return threshold_ratio(pr, kappa, an, rho_mu);
}

/// All explicit thresholds of the existence argument for one configuration.
struct Thresholds {
  double kappa = 0.0;
  double embedding_max_ratio = 0.0;
  double l_F = 1.0;
  AlphaNorms alpha{0.0, 0.0};
  double rho_star = 0.0;
  double rho_zero = 0.0;
  double rho_mu = 0.0;
  double lambda_star = 0.0;
  double mckean = 0.0;
};

inline double model_uniformity(const RadialModel& model) {
  const double t = (1.0 - model.a()) / (1.0 + model.a());
  return t * t;
}

inline Thresholds compute_thresholds(const RadialModel& model, const ProblemParams& params, double kappa,
                                     const QuadratureSpec& quad = {}) {
  params.validate();
  Thresholds t;
  t.kappa = kappa;
  t.embedding_max_ratio = kappa / kEmbeddingSafety;
  t.l_F = model_uniformity(model);
  t.alpha = alpha_norms(model, params, quad);
  t.rho_star = rho_star(params, kappa, t.l_F);
  t.rho_zero = rho_zero(params, kappa, t.alpha);
  t.rho_mu = std::min(t.rho_star, t.rho_zero);
  t.lambda_star = threshold_ratio(params, kappa, t.alpha, t.rho_mu);
  t.mckean = mckean_constant(model, params.p);
  return t;
}

inline Thresholds compute_thresholds(const RadialModel& model, const ProblemParams& params, std::size_t n_trials,
                                     std::uint64_t seed, const QuadratureSpec& quad = {}) {
  const auto est = estimate_embedding_constant(model, params, n_trials, seed, quad);
  auto t = compute_thresholds(model, params, est.kappa, quad);
  t.embedding_max_ratio = est.max_ratio;
  return t;
}

// ---------------------------------------------------------------------------
// Test function and negativity witness

/// theta * u_{R,zeta}: 1 on [0,zeta], (R-s)/(R-zeta) on [zeta,R], 0 beyond.
inline RadialProfile test_function(const RadialModel& model, double R, double zeta, double theta) {
  if (!(R > 0.0 && R <= model.S_max())) throw std::invalid_argument("test_function: requires 0 < R <= S_max");
  const double cap = R * (1.0 - model.a()) / (1.0 + model.a());
  if (!(zeta > 0.0 && zeta < cap)) throw std::invalid_argument("test_function: requires 0 < zeta < R(1-a)/(1+a)");
  RadialProfile u{std::vector<double>(model.grid().size(), 0.0)};
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double s = model.grid()[i];
    if (s <= zeta) u.values[i] = theta;
    else if (s < R) u.values[i] = theta * (R - s) / (R - zeta);
  }
  u.values.back() = 0.0;
  return u;
}

/// Default zeta for a given R: half of the admissible range.
inline double default_witness_zeta(const RadialModel& model, double R) {
  return 0.5 * R * (1.0 - model.a()) / (1.0 + model.a());
}

struct Witness {
  double theta = 0.0;
  int halvings = 0;
  EnergyBreakdown energy;
  RadialProfile profile;
};

inline constexpr int kMaxWitnessHalvings = 60;

/// First theta = 2^{-j}, j = 0..60, with E(theta u_{R,zeta}) < 0 and
/// ||theta u_{R,zeta}||_F <= max_norm.
inline Witness negativity_witness(const RadialModel& model, const ProblemParams& params, double R, double zeta,
                                  double max_norm = std::numeric_limits<double>::infinity(),
                                  const QuadratureSpec& quad = {}) {
  if (params.h_kind != Nonlinearity::power_r) throw std::invalid_argument("negativity_witness: requires power_r");
  const DiscreteEnergy e(model, params, quad);
  const auto base = test_function(model, R, zeta, 1.0);
  for (int j = 0; j <= kMaxWitnessHalvings; ++j) {
    const double theta = std::ldexp(1.0, -j);
    RadialProfile u = base;
    for (double& v : u.values) v *= theta;
    const auto en = e.evaluate(u.values);
    if (en.total < 0.0 && en.norm_F <= max_norm) return {theta, j, en, std::move(u)};
  }
  throw std::runtime_error("negativity_witness: no theta = 2^-j (j <= 60) gives negative energy");
}

// ---------------------------------------------------------------------------
// Projected descent

struct SolverOptions {
  std::size_t max_iterations = 50000;
  double residual_rel_tol = 1e-8;
  /// Absolute residual target; the effective tolerance is the larger of the two.
  double residual_abs_tol = 0.0;
  double armijo = 1e-4;
  int max_halvings = 60;
  double margin_rel = 1e-6;
  QuadratureSpec quad{};
};

struct SolutionReport {
  RadialProfile u_star;
  double norm = 0.0;
  double rho_mu = 0.0;
  double rho_star = std::numeric_limits<double>::quiet_NaN();
  double rho_zero = std::numeric_limits<double>::quiet_NaN();
  double lambda_star = std::numeric_limits<double>::quiet_NaN();
  EnergyBreakdown energy;
  double el_residual = 0.0;
  double residual_tolerance = 0.0;
  bool interior = false;
  bool nonzero = false;
  std::size_t iterations = 0;
  bool converged = false;
  bool energy_monotone = true;
};

namespace detail {

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Minimises the discrete energy over {||u||_F <= rho}. Each step moves along
/// -K^{-1} grad E, K the Sobolev metric of DiscreteEnergy::metric, with Armijo
/// backtracking on the projected point; the projection is the radial rescaling
/// u -> (rho/||u||_F) u. Non-convergence is reported, never thrown.
inline SolutionReport minimize_in_ball(const RadialModel& model, const ProblemParams& params, double rho,
                                       const RadialProfile& init, const SolverOptions& opts = {}) {
  if (!(rho > 0.0)) throw std::invalid_argument("minimize_in_ball: rho must be positive");
  const DiscreteEnergy e(model, params, opts.quad);
  std::vector<double> u = init.values;
  if (u.size() != e.nodes()) throw std::invalid_argument("minimize_in_ball: init is not aligned with the grid");
  u.back() = 0.0;
  auto project = [&](std::vector<double>& v) {
    const double n = e.norm(v);
    if (n > rho) {
      const double s = rho / n;
      for (double& x : v) x *= s;
    }
  };
  project(u);

  SolutionReport rep;
  rep.rho_mu = rho;
  auto g = e.gradient(u);
  double E = e.evaluate(u).total;
  const double scale0 = detail::max_abs(g);
  const double tol = std::max(opts.residual_rel_tol * scale0, opts.residual_abs_tol);
  rep.residual_tolerance = tol;
  const auto n_free = static_cast<Eigen::Index>(u.size() - 1);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  std::vector<double> trial(u.size());

  double residual = detail::max_abs(g);
  while (residual > tol && rep.iterations < opts.max_iterations) {
    solver.compute(e.metric(u));
    if (solver.info() != Eigen::Success) break;
    const Eigen::VectorXd dir = -solver.solve(Eigen::Map<const Eigen::VectorXd>(g.data(), n_free));
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k, t *= 0.5) {
      for (Eigen::Index i = 0; i < n_free; ++i) trial[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)] + t * dir[i];
      trial.back() = 0.0;
      project(trial);
      double decrease = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) decrease += g[i] * (trial[i] - u[i]);
      if (!(decrease < 0.0)) continue;
      const double Et = e.evaluate(trial).total;
      if (Et <= E + opts.armijo * decrease) {
        if (Et > E) rep.energy_monotone = false;
        u.swap(trial);
        E = Et;
        accepted = true;
        break;
      }
    }
    ++rep.iterations;
    if (!accepted) break;
    g = e.gradient(u);
    residual = detail::max_abs(g);
  }

  rep.u_star = {u};
  rep.energy = e.evaluate(u);
  rep.norm = rep.energy.norm_F;
  rep.el_residual = residual;
  rep.converged = residual <= tol;
  const double margin = opts.margin_rel * rho;
  rep.interior = rep.norm < rho - margin;
  rep.nonzero = rep.norm > margin;
  return rep;
}

/// Settings shared by solve and sweep pipelines.
struct SolveSetup {
  double witness_R = 1.0;
  double witness_zeta = 0.0;  // 0 selects default_witness_zeta
  SolverOptions solver{};
};

/// Initial guess inside the ball: zero when lambda = 0, otherwise the
/// negativity witness restricted to ||u||_F <= rho (1 - 1e-3).
inline RadialProfile initial_guess(const RadialModel& model, const ProblemParams& params, double rho,
                                   const SolveSetup& setup) {
  if (params.lambda == 0.0) return zero_profile(model);
  const double zeta = setup.witness_zeta > 0.0 ? setup.witness_zeta : default_witness_zeta(model, setup.witness_R);
  return negativity_witness(model, params, setup.witness_R, zeta, rho * (1.0 - 1e-3), setup.solver.quad).profile;
}

/// Direct method on B_{rho_mu} with the thresholds filled in.
inline SolutionReport solve(const RadialModel& model, const ProblemParams& params, const Thresholds& th,
                            const SolveSetup& setup = {}) {
  auto rep = minimize_in_ball(model, params, th.rho_mu, initial_guess(model, params, th.rho_mu, setup), setup.solver);
  rep.rho_star = th.rho_star;
  rep.rho_zero = th.rho_zero;
  rep.lambda_star = th.lambda_star;
  return rep;
}

struct SweepRow {
  double lambda = 0.0;
  double lambda_star = 0.0;
  double norm = 0.0;
  double energy_total = 0.0;
  bool interior = false;
  bool nonzero = false;
  bool converged = false;
  std::size_t iterations = 0;
  double el_residual = 0.0;
  std::string error;
};

/// One minimisation per lambda on the ball of radius rho_mu; rows ascend in lambda.
inline std::vector<SweepRow> lambda_sweep(const RadialModel& model, const ProblemParams& params, std::vector<double> lambdas,
                                          const Thresholds& th, const SolveSetup& setup = {}) {
  std::sort(lambdas.begin(), lambdas.end());
  std::vector<SweepRow> rows;
  for (double lam : lambdas) {
    SweepRow row;
    row.lambda = lam;
    row.lambda_star = th.lambda_star;
    try {
      ProblemParams pr = params;
      pr.lambda = lam;
      const auto rep = solve(model, pr, th, setup);
      row.norm = rep.norm;
      row.energy_total = rep.energy.total;
      row.interior = rep.interior;
      row.nonzero = rep.nonzero;
      row.converged = rep.converged;
      row.iterations = rep.iterations;
      row.el_residual = rep.el_residual;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string sweep_header() {
  return csv_header({"lambda", "lambda_star", "norm", "energy_total", "interior", "nonzero", "converged", "iterations",
                     "el_residual", "error"});
}

inline std::string to_csv_row(const SweepRow& r) {
  CsvRow row;
  row.add(r.lambda).add(r.lambda_star).add(r.norm).add(r.energy_total).add(r.interior).add(r.nonzero).add(r.converged);
  row.add(r.iterations).add(r.el_residual).add(r.error);
  return row.str();
}

}  // namespace randers
