#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "randers/csv.hpp"
#include "randers/hardy.hpp"
#include "randers/inequalities.hpp"
#include "randers/minkowski.hpp"
#include "randers/sampling.hpp"

namespace randers {

enum class CampaignKind { uniformity, lindqvist, clarkson, convexity, hardy, wang_willem };

inline std::string_view to_string(CampaignKind k) {
  switch (k) {
    case CampaignKind::uniformity: return "uniformity";
    case CampaignKind::lindqvist: return "lindqvist";
    case CampaignKind::clarkson: return "clarkson";
    case CampaignKind::convexity: return "convexity";
    case CampaignKind::hardy: return "hardy";
    case CampaignKind::wang_willem: return "wang_willem";
  }
  return "unknown";
}

inline CampaignKind parse_campaign_kind(std::string_view s) {
  for (auto k : {CampaignKind::uniformity, CampaignKind::lindqvist, CampaignKind::clarkson, CampaignKind::convexity,
                 CampaignKind::hardy, CampaignKind::wang_willem})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown campaign kind '" + std::string(s) + "'");
}

inline bool is_integral_kind(CampaignKind k) { return k == CampaignKind::hardy || k == CampaignKind::wang_willem; }

/// Exponent set for one Hardy-type configuration in an integral campaign.
struct HardyCase {
  int d;
  double p;
  double a_exp;
  double b_exp;
};

struct CampaignSpec {
  CampaignKind kind = CampaignKind::clarkson;
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  std::vector<int> dims{2, 3, 5};
  double p_min = 2.0;
  double p_max = 4.0;
  double a_max = 0.95;
  /// Hardy cases cycled over samples (hardy kind).
  std::vector<HardyCase> hardy_cases{{3, 2.0, 0.0, 0.0}, {4, 2.0, 1.0, 0.0}, {4, 3.0, 0.0, 1.0}};
  /// Wang-Willem: d = wang_willem_d, p = p_min, a_exp = 0, |b| cycled over these.
  int wang_willem_d = 3;
  std::vector<double> wang_willem_beta_norms{0.0, 0.3};
  double radius = 1.0;
  std::size_t cells = 4096;
  std::size_t anisotropy_directions = kDefaultAnisotropyDirections;
};

struct SlackReport {
  CampaignKind kind = CampaignKind::clarkson;
  std::size_t n_samples = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  std::string argmin_sample;
  std::size_t argmin_index = 0;
  std::size_t violations = 0;
  double tolerance = 0.0;  // relative
  std::uint64_t seed = 0;
};

/// One randomly drawn pointwise instance.
struct PointwiseSample {
  CampaignKind kind = CampaignKind::clarkson;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double p = 2.0;
  double t = 0.0;
  Eigen::VectorXd xi;
  Eigen::VectorXd beta;
};

/// Random SPD matrix Q diag(10^u) Q^T with u ~ U[0,3] (condition number <= 1e3).
inline Eigen::MatrixXd random_spd(Rng& rng, int dim) {
  const Eigen::MatrixXd q = rng.orthogonal(dim);
  Eigen::VectorXd diag(dim);
  for (int i = 0; i < dim; ++i) diag[i] = std::pow(10.0, rng.uniform(0.0, 3.0));
  Eigen::MatrixXd a = q * diag.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

/// Random Randers structure with |b|_{A^-1} ~ U[0, a_max].
inline MinkowskiRanders random_randers(Rng& rng, int dim, double a_max) {
  Eigen::MatrixXd a = random_spd(rng, dim);
  const double beta = rng.uniform(0.0, a_max);
  return MinkowskiRanders::with_beta_norm(std::move(a), rng.unit_vector(dim), beta);
}

inline MinkowskiRanders random_randers_fixed(Rng& rng, int dim, double beta_norm) {
  Eigen::MatrixXd a = random_spd(rng, dim);
  return MinkowskiRanders::with_beta_norm(std::move(a), rng.unit_vector(dim), beta_norm);
}

inline Eigen::VectorXd random_box(Rng& rng, int dim, double half_width) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-half_width, half_width);
  return v;
}

inline void validate_campaign(const CampaignSpec& spec) {
  if (spec.n == 0) throw std::invalid_argument("campaign: n must be >= 1");
  if (spec.dims.empty()) throw std::invalid_argument("campaign: dims must not be empty");
  for (int d : spec.dims)
    if (d < 2) throw std::invalid_argument("campaign: every dimension must be >= 2");
  if (!(spec.p_max >= spec.p_min)) throw std::invalid_argument("campaign: p_max < p_min");
  if (!(spec.a_max >= 0.0 && spec.a_max < 1.0)) throw std::invalid_argument("campaign: a_max must lie in [0,1)");
  const bool needs_p2 = spec.kind == CampaignKind::clarkson || spec.kind == CampaignKind::lindqvist;
  if (needs_p2 && spec.p_min < 2.0) throw std::invalid_argument("campaign: clarkson and lindqvist require p >= 2");
  if (!(spec.p_min > 1.0)) throw std::invalid_argument("campaign: p must exceed 1");
}

inline PointwiseSample draw_pointwise(const CampaignSpec& spec, std::uint64_t index) {
  Rng rng = Rng::for_sample(spec.seed, index);
  PointwiseSample s;
  s.kind = spec.kind;
  const int dim = spec.dims[rng.index(spec.dims.size())];
  if (spec.kind == CampaignKind::lindqvist) {
    s.A = Eigen::MatrixXd::Identity(dim, dim);
    s.b = Eigen::VectorXd::Zero(dim);
  } else {
    const auto m = random_randers(rng, dim, spec.a_max);
    s.A = m.metric();
    s.b = m.drift();
  }
  s.p = rng.uniform(spec.p_min, spec.p_max);
  s.t = spec.kind == CampaignKind::uniformity ? rng.uniform() : 0.0;
  s.xi = random_box(rng, dim, 10.0);
  s.beta = random_box(rng, dim, 10.0);
  return s;
}

namespace detail {

inline void append_array(std::ostringstream& os, std::string_view key, const double* data, Eigen::Index n) {
  os << ' ' << key << '=';
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) os << ';';
    os << format_double(data[i]);
  }
}

inline std::vector<double> parse_array(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find(';', pos);
    const auto token = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    std::size_t used = 0;
    out.push_back(std::stod(token, &used));
    if (used != token.size()) throw std::invalid_argument("sample: malformed number '" + token + "'");
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

/// Space-separated key=value text, arrays joined by ';', column-major matrices.
inline std::string serialize(const PointwiseSample& s) {
  std::ostringstream os;
  os << "kind=" << to_string(s.kind) << " dim=" << s.xi.size() << " p=" << format_double(s.p)
     << " t=" << format_double(s.t);
  detail::append_array(os, "A", s.A.data(), s.A.size());
  detail::append_array(os, "b", s.b.data(), s.b.size());
  detail::append_array(os, "xi", s.xi.data(), s.xi.size());
  detail::append_array(os, "beta", s.beta.data(), s.beta.size());
  return os.str();
}

inline PointwiseSample parse_pointwise_sample(const std::string& text) {
  PointwiseSample s;
  std::istringstream is(text);
  std::string token;
  int dim = -1;
  std::vector<double> a, b, xi, beta;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("sample: expected key=value, got '" + token + "'");
    const auto key = token.substr(0, eq);
    const auto val = token.substr(eq + 1);
    if (key == "kind") s.kind = parse_campaign_kind(val);
    else if (key == "dim") dim = std::stoi(val);
    else if (key == "p") s.p = std::stod(val);
    else if (key == "t") s.t = std::stod(val);
    else if (key == "A") a = detail::parse_array(val);
    else if (key == "b") b = detail::parse_array(val);
    else if (key == "xi") xi = detail::parse_array(val);
    else if (key == "beta") beta = detail::parse_array(val);
    else throw std::invalid_argument("sample: unknown key '" + key + "'");
  }
  const auto n = static_cast<std::size_t>(dim);
  if (dim < 2 || a.size() != n * n || b.size() != n || xi.size() != n || beta.size() != n)
    throw std::invalid_argument("sample: inconsistent array lengths");
  s.A = Eigen::Map<Eigen::MatrixXd>(a.data(), dim, dim);
  s.b = Eigen::Map<Eigen::VectorXd>(b.data(), dim);
  s.xi = Eigen::Map<Eigen::VectorXd>(xi.data(), dim);
  s.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), dim);
  return s;
}

struct SampleOutcome {
  double slack;
  double tolerance;  // absolute, for this sample
};

inline SampleOutcome evaluate(const PointwiseSample& s) {
  const Covector xi(s.xi), beta(s.beta);
  if (s.kind == CampaignKind::lindqvist) {
    const Vector a(s.xi), b(s.beta);
    const double scale = 1.0 + std::pow(s.xi.norm(), s.p) + std::pow(s.beta.norm(), s.p);
    return {lindqvist_slack(s.p, a, b), kPointwiseRelTol * scale};
  }
  const MinkowskiRanders m(s.A, s.b);
  switch (s.kind) {
    case CampaignKind::uniformity:
      return {uniformity_slack(m, xi, beta, s.t), pointwise_tolerance(m, 2.0, xi, beta)};
    case CampaignKind::clarkson:
      return {clarkson_finsler_slack(m, s.p, xi, beta), pointwise_tolerance(m, s.p, xi, beta)};
    case CampaignKind::convexity:
      return {convexity_step_slack(m, s.p, xi, beta), pointwise_tolerance(m, s.p, xi, beta)};
    default:
      throw std::invalid_argument("evaluate: not a pointwise kind");
  }
}

/// One integral-inequality instance, regenerated from (seed, index).
struct IntegralSample {
  CampaignKind kind = CampaignKind::hardy;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  HardyConfig cfg;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  SampledProfile profile;
};

inline IntegralSample draw_integral(const CampaignSpec& spec, std::uint64_t index) {
  Rng rng = Rng::for_sample(spec.seed, index);
  IntegralSample s;
  s.kind = spec.kind;
  s.seed = spec.seed;
  s.index = index;
  double beta_norm;
  if (spec.kind == CampaignKind::hardy) {
    if (spec.hardy_cases.empty()) throw std::invalid_argument("campaign: hardy_cases must not be empty");
    const auto& c = spec.hardy_cases[index % spec.hardy_cases.size()];
    s.cfg = {c.a_exp, c.b_exp, c.p, c.d, spec.radius};
    beta_norm = rng.uniform(0.0, spec.a_max);
  } else {
    if (spec.wang_willem_beta_norms.empty()) throw std::invalid_argument("campaign: wang_willem_beta_norms empty");
    s.cfg = {0.0, 0.0, spec.p_min, spec.wang_willem_d, spec.radius};
    beta_norm = spec.wang_willem_beta_norms[index % spec.wang_willem_beta_norms.size()];
  }
  s.cfg.validate();
  const auto m = random_randers_fixed(rng, s.cfg.d, beta_norm);
  s.A = m.metric();
  s.b = m.drift();
  const double support = spec.kind == CampaignKind::hardy ? spec.radius : rng.uniform(0.5, 0.95) * spec.radius;
  s.profile = random_bump_profile(rng, uniform_grid(spec.radius, spec.cells), support);
  return s;
}

inline std::string serialize(const IntegralSample& s) {
  std::ostringstream os;
  os << "kind=" << to_string(s.kind) << " seed=" << s.seed << " index=" << s.index << " d=" << s.cfg.d
     << " p=" << format_double(s.cfg.p) << " a_exp=" << format_double(s.cfg.a_exp)
     << " b_exp=" << format_double(s.cfg.b_exp) << " R=" << format_double(s.cfg.radius);
  detail::append_array(os, "A", s.A.data(), s.A.size());
  detail::append_array(os, "b", s.b.data(), s.b.size());
  return os.str();
}

/// Hardy: ratio - 1 against 1e-4. Wang-Willem: LHS - RHS against 1e-4 * scale.
inline SampleOutcome evaluate(const IntegralSample& s, std::size_t directions = kDefaultAnisotropyDirections) {
  const MinkowskiRanders m(s.A, s.b);
  const SphereDesign design(m.dim(), directions, kDefaultAnisotropySeed);
  if (s.kind == CampaignKind::hardy) {
    const double ratio = hardy_ratio(s.cfg, s.profile, hardy_anisotropy(m, s.cfg.p, design));
    return {ratio - 1.0, 1e-4};
  }
  const auto terms = wang_willem_terms(s.cfg, uniformity(m), s.profile, wang_willem_anisotropy(m, s.cfg.p, design));
  return {terms.slack(), 1e-4 * terms.scale()};
}

/// Relative tolerance recorded in a report of the given kind.
inline double campaign_tolerance(CampaignKind k) { return is_integral_kind(k) ? 1e-4 : kPointwiseRelTol; }

/// Samples `spec.n` instances in index order and aggregates the slacks.
inline SlackReport run_campaign(const CampaignSpec& spec) {
  validate_campaign(spec);
  SlackReport rep;
  rep.kind = spec.kind;
  rep.n_samples = spec.n;
  rep.seed = spec.seed;
  rep.tolerance = campaign_tolerance(spec.kind);
  for (std::uint64_t i = 0; i < spec.n; ++i) {
    SampleOutcome out;
    if (is_integral_kind(spec.kind)) {
      const auto s = draw_integral(spec, i);
      out = evaluate(s, spec.anisotropy_directions);
      if (out.slack < rep.min_slack) {
        rep.min_slack = out.slack;
        rep.argmin_index = i;
        rep.argmin_sample = serialize(s);
      }
    } else {
      const auto s = draw_pointwise(spec, i);
      out = evaluate(s);
      if (out.slack < rep.min_slack) {
        rep.min_slack = out.slack;
        rep.argmin_index = i;
        rep.argmin_sample = serialize(s);
      }
    }
    if (!(out.slack >= -out.tolerance)) ++rep.violations;
  }
  return rep;
}

inline SlackReport run_campaign(CampaignKind kind, std::size_t n, std::uint64_t seed, std::vector<int> dims,
                                double p_min, double p_max) {
  CampaignSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.seed = seed;
  spec.dims = std::move(dims);
  spec.p_min = p_min;
  spec.p_max = p_max;
  return run_campaign(spec);
}

inline std::string slack_report_header() {
  return csv_header({"kind", "n", "seed", "min_slack", "violations", "tolerance", "argmin_serialized"});
}

inline std::string to_csv_row(const SlackReport& r, std::string_view kind_label) {
  CsvRow row;
  row.add(kind_label).add(r.n_samples).add(r.seed).add(r.min_slack).add(r.violations).add(r.tolerance).add(
      r.argmin_sample);
  return row.str();
}

inline std::string to_csv_row(const SlackReport& r) { return to_csv_row(r, to_string(r.kind)); }

}  // namespace randers
