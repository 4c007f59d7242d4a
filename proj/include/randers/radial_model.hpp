#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "randers/csv.hpp"
#include "randers/quadrature.hpp"
#include "randers/sampling.hpp"

namespace randers {

/// Construction parameters of a RadialModel. The default grid is geometric:
/// 0, then `cells` nodes from S_max * first_node_fraction to S_max.
struct RadialModelSpec {
  int d = 4;
  double kappa = 1.0;
  double a = 0.3;
  std::optional<double> rho_rev;  // defaults to (1+a)/(1-a)
  double S_max = 12.0;
  std::size_t cells = 512;
  double gamma = 2.0;
  double first_node_fraction = 1e-4;
};

/// One-dimensional reduction of a non-compact Randers space with a sinh volume
/// envelope, around the fixed point x0 = grid origin.
class RadialModel {
 public:
  explicit RadialModel(const RadialModelSpec& spec = {})
      : RadialModel(spec, geometric_grid(spec.S_max * spec.first_node_fraction, spec.S_max, spec.cells)) {}

  RadialModel(const RadialModelSpec& spec, std::vector<double> grid) : d_(spec.d), kappa_(spec.kappa), a_(spec.a),
        S_max_(spec.S_max), gamma_(spec.gamma), grid_(std::move(grid)) {
    if (d_ < 2) throw std::invalid_argument("RadialModel: d must be >= 2");
    if (!(kappa_ > 0.0)) throw std::invalid_argument("RadialModel: kappa must be positive");
    if (!(a_ >= 0.0 && a_ < 1.0)) throw std::invalid_argument("RadialModel: a must lie in [0,1)");
    if (!(S_max_ > 0.0)) throw std::invalid_argument("RadialModel: S_max must be positive");
    if (!(gamma_ > 1.0)) throw std::invalid_argument("RadialModel: gamma must exceed 1");
    validate_grid(grid_);
    if (std::abs(grid_.back() - S_max_) > 1e-12 * S_max_) throw std::invalid_argument("RadialModel: grid must end at S_max");
    grid_.back() = S_max_;
    const double r = (1.0 + a_) / (1.0 - a_);
    rho_rev_ = spec.rho_rev.value_or(r);
    if (!(rho_rev_ >= 1.0 / r * (1.0 - 1e-12) && rho_rev_ <= r * (1.0 + 1e-12)))
      throw std::invalid_argument("RadialModel: rho_rev must lie in [1/r_F, r_F]");
    kappa_eff_ = kappa_ / (1.0 - a_);
    density_factor_ = std::pow((1.0 - a_) * (1.0 + a_), 0.5 * (d_ + 1)) * unit_sphere_area(d_);
  }

  int d() const { return d_; }
  double kappa() const { return kappa_; }
  double a() const { return a_; }
  double rho_rev() const { return rho_rev_; }
  double S_max() const { return S_max_; }
  double gamma() const { return gamma_; }
  double kappa_eff() const { return kappa_eff_; }
  std::size_t cells() const { return grid_.size() - 1; }
  const std::vector<double>& grid() const { return grid_; }
  /// (1-a^2)^{(d+1)/2} sigma_{d-1}
  double density_factor() const { return density_factor_; }

  RadialModelSpec spec() const {
    RadialModelSpec s;
    s.d = d_;
    s.kappa = kappa_;
    s.a = a_;
    s.rho_rev = rho_rev_;
    s.S_max = S_max_;
    s.cells = cells();
    s.gamma = gamma_;
    if (grid_.size() > 2) s.first_node_fraction = grid_[1] / S_max_;
    return s;
  }

 private:
  int d_;
  double kappa_;
  double a_;
  double S_max_;
  double gamma_;
  std::vector<double> grid_;
  double rho_rev_ = 1.0;
  double kappa_eff_ = 1.0;
  double density_factor_ = 1.0;
};

/// A sampled radial function aligned with a model grid.
struct RadialProfile {
  std::vector<double> values;
};

inline RadialProfile zero_profile(const RadialModel& model) { return {std::vector<double>(model.grid().size(), 0.0)}; }

inline void validate_profile(const RadialModel& model, const RadialProfile& u) {
  if (u.values.size() != model.grid().size()) throw std::invalid_argument("profile is not aligned with the model grid");
  if (u.values.back() != 0.0) throw std::invalid_argument("profile must vanish at S_max");
}

/// w(s) = (1-a^2)^{(d+1)/2} sigma_{d-1} (sinh(kappa_eff s)/kappa_eff)^{d-1}
inline double volume_density(const RadialModel& model, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("volume_density: s must be nonnegative");
  const double ke = model.kappa_eff();
  return model.density_factor() * std::pow(std::sinh(ke * s) / ke, model.d() - 1);
}

/// alpha_0(s) = s^{-gamma} / sinh(kappa_eff s)^{d-1} for s >= 1, alpha_0(1) below.
inline double alpha_weight(const RadialModel& model, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("alpha_weight: s must be nonnegative");
  const double x = std::max(s, 1.0);
  return std::pow(x, -model.gamma()) / std::pow(std::sinh(model.kappa_eff() * x), model.d() - 1);
}

/// (du+ + rho_rev du-)^p, the p-th power of F*(du * D d_F).
inline double radial_dual_norm_p(const RadialModel& model, double du, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("radial_dual_norm_p: p must exceed 1");
  if (du > 0.0) return std::pow(du, p);
  if (du < 0.0) return std::pow(-model.rho_rev() * du, p);
  return 0.0;
}

/// Integral of f(s, u, u') against ds over [0, S_max] (no density applied).
template <class Integrand>
double integrate(const RadialModel& model, Integrand&& f, const RadialProfile& u, const QuadratureSpec& quad = {}) {
  if (u.values.size() != model.grid().size()) throw std::invalid_argument("integrate: profile is not aligned with the grid");
  return integrate_piecewise_linear(model.grid(), u.values, std::forward<Integrand>(f), quad);
}

/// Integral of g(s) over [0, S_max] on the model's quadrature nodes.
template <class Fn>
double integrate_function(const RadialModel& model, Fn&& g, const QuadratureSpec& quad = {}) {
  double total = 0.0;
  for (const auto& node : quadrature_nodes(model.grid(), quad)) total += node.weight * g(node.s);
  return total;
}

/// Total of alpha_0 w on [0, infinity): quadrature on the grid plus the exact
/// tail, since alpha_0 w = (1-a^2)^{(d+1)/2} sigma_{d-1} kappa_eff^{1-d} s^{-gamma} beyond s = 1.
inline double alpha_tail_coefficient(const RadialModel& model) {
  return model.density_factor() * std::pow(model.kappa_eff(), 1 - model.d());
}

/// (int alpha_0^e w)^{1/e} over the whole space for each exponent e >= 1;
/// e = infinity returns sup alpha_0 = alpha_0(0).
inline std::vector<double> alpha_lp_norms(const RadialModel& model, std::span<const double> exponents,
                                          const QuadratureSpec& quad = {}) {
  std::vector<double> out;
  out.reserve(exponents.size());
  const double S = model.S_max();
  const double c = alpha_tail_coefficient(model);
  for (double e : exponents) {
    if (std::isinf(e) && e > 0) {
      out.push_back(alpha_weight(model, 0.0));
      continue;
    }
    if (!(e >= 1.0)) throw std::invalid_argument("alpha_lp_norms: exponents must be >= 1");
    double total = integrate_function(
        model, [&](double s) { return std::pow(alpha_weight(model, s), e) * volume_density(model, s); }, quad);
    if (S >= 1.0) {
      if (e == 1.0) {
        total += c * std::pow(S, 1.0 - model.gamma()) / (model.gamma() - 1.0);
      } else {
        // alpha_0^e w ~ C s^{-gamma e} (2 e^{-kappa_eff s})^{(e-1)(d-1)}: exponential tail
        const double decay = (e - 1.0) * (model.d() - 1) * model.kappa_eff() + model.gamma() * e / S;
        total += std::pow(alpha_weight(model, S), e) * volume_density(model, S) / decay;
      }
    }
    if (!std::isfinite(total) || !(total > 0.0)) throw std::domain_error("alpha_lp_norms: integral diverges");
    out.push_back(std::pow(total, 1.0 / e));
  }
  return out;
}

/// Fraction of int_0^infinity alpha_0^e w carried by (s_from, infinity).
inline double alpha_tail_fraction(const RadialModel& model, double s_from, double e = 1.0, const QuadratureSpec& quad = {}) {
  const double total = std::pow(alpha_lp_norms(model, std::span<const double>(&e, 1), quad).front(), e);
  double head = 0.0;
  for (const auto& node : quadrature_nodes(model.grid(), quad))
    if (node.s < s_from) head += node.weight * std::pow(alpha_weight(model, node.s), e) * volume_density(model, node.s);
  // quadrature nodes at or past s_from count as tail
  return (total - head) / total;
}

/// C_{k,p} = (1-a^2)^{(d+1)/2}/(1+a)^p (d-1)^p k^p / (p^p + (d-1)^p k^p)
inline double mckean_constant(int d, double a, double k, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("mckean_constant: p must exceed 1");
  if (d < 2) throw std::invalid_argument("mckean_constant: d must be >= 2");
  if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("mckean_constant: a must lie in [0,1)");
  const double lead = std::pow((1.0 - a) * (1.0 + a), 0.5 * (d + 1)) / std::pow(1.0 + a, p);
  const double dk = std::pow((d - 1) * k, p);
  return lead * dk / (std::pow(p, p) + dk);
}

inline double mckean_constant(const RadialModel& model, double p) {
  return mckean_constant(model.d(), model.a(), model.kappa(), p);
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string serialize_model(const RadialModel& model) {
  std::ostringstream os;
  os << "d = " << model.d() << '\n'
     << "kappa = " << format_double(model.kappa()) << '\n'
     << "a = " << format_double(model.a()) << '\n'
     << "rho_rev = " << format_double(model.rho_rev()) << '\n'
     << "S_max = " << format_double(model.S_max()) << '\n'
     << "N = " << model.cells() << '\n'
     << "gamma = " << format_double(model.gamma()) << '\n';
  return os.str();
}

/// Inverse of serialize_model (geometric default grid).
inline RadialModel parse_model(const std::string& text) {
  RadialModelSpec spec;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) throw std::invalid_argument("model line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto key = trim(line.substr(0, eq));
    const auto val = trim(line.substr(eq + 1));
    if (key == "d") spec.d = std::stoi(val);
    else if (key == "kappa") spec.kappa = std::stod(val);
    else if (key == "a") spec.a = std::stod(val);
    else if (key == "rho_rev") spec.rho_rev = std::stod(val);
    else if (key == "S_max") spec.S_max = std::stod(val);
    else if (key == "N") spec.cells = static_cast<std::size_t>(std::stoul(val));
    else if (key == "gamma") spec.gamma = std::stod(val);
    else throw std::invalid_argument("model line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return RadialModel(spec);
}

inline std::string profile_csv(const RadialModel& model, const RadialProfile& u) {
  validate_profile(model, u);
  std::string out = csv_header({"s", "u"}) + '\n';
  for (std::size_t i = 0; i < u.values.size(); ++i) out += CsvRow().add(model.grid()[i]).add(u.values[i]).str() + '\n';
  return out;
}

}  // namespace randers
