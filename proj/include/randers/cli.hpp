#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "randers/campaign.hpp"
#include "randers/csv.hpp"
#include "randers/direct_method.hpp"
#include "randers/hardy.hpp"
#include "randers/radial_model.hpp"

namespace randers {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { check, solve, hardy, sweep, thresholds };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::check: return "check";
    case Command::solve: return "solve";
    case Command::hardy: return "hardy";
    case Command::sweep: return "sweep";
    case Command::thresholds: return "thresholds";
  }
  return "unknown";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::check, Command::solve, Command::hardy, Command::sweep, Command::thresholds})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

enum ExitCode : int { kExitOk = 0, kExitViolations = 1, kExitNoConvergence = 2, kExitConfigError = 3 };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + msg : "config: " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct RunConfig {
  Command command = Command::solve;
  RadialModelSpec model{};
  int refinement = 4;
  ProblemParams params{};
  std::optional<double> lambda;
  double lambda_fraction = 0.5;
  CampaignSpec campaign{};
  std::vector<double> lambdas;
  std::vector<double> lambda_fractions{0.0, 0.1, 0.3, 0.5, 0.9};
  std::size_t hardy_n = 1000;
  std::size_t embedding_trials = 200;
  std::size_t max_iterations = 50000;
  double witness_R = 1.0;
  double witness_zeta = 0.0;
  std::string output_dir = ".";

  std::uint64_t seed() const { return campaign.seed; }
  QuadratureSpec quadrature() const { return {QuadratureRule::trapezoid, refinement}; }
  SolveSetup solve_setup() const {
    SolveSetup s;
    s.witness_R = witness_R;
    s.witness_zeta = witness_zeta;
    s.solver.max_iterations = max_iterations;
    s.solver.quad = quadrature();
    return s;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& v, int line, const std::string& key) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out))
    throw ConfigError(line, "malformed number '" + v + "' for " + key);
  return out;
}

inline long long parse_integer(const std::string& v, int line, const std::string& key) {
  // accept integral reals such as 1e5
  const double x = parse_real(v, line, key);
  if (x != std::floor(x) || std::abs(x) > 9.0e15) throw ConfigError(line, "expected an integer for " + key + ", got '" + v + "'");
  return static_cast<long long>(x);
}

inline std::vector<double> parse_real_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(line, "empty list entry for " + key);
    out.push_back(parse_real(item, line, key));
  }
  if (out.empty()) throw ConfigError(line, "empty list for " + key);
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

/// Line-oriented `key = value` text with '#' comments. Omitted keys keep their
/// defaults; unknown keys, malformed numbers and invariant violations raise
/// ConfigError carrying the offending line.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  using Setter = std::function<void(const std::string&, int)>;
  auto real = [](double& dst) -> Setter {
    return [&dst](const std::string& v, int l) { dst = detail::parse_real(v, l, "value"); };
  };
  auto count = [](std::size_t& dst, long long lo) -> Setter {
    return [&dst, lo](const std::string& v, int l) {
      const auto x = detail::parse_integer(v, l, "value");
      if (x < lo) throw ConfigError(l, "value must be >= " + std::to_string(lo));
      dst = static_cast<std::size_t>(x);
    };
  };
  const std::map<std::string, Setter> setters{
      {"command",
       [&](const std::string& v, int l) {
         const auto c = parse_command(v);
         if (!c) throw ConfigError(l, "unknown command '" + v + "'");
         cfg.command = *c;
       }},
      {"d",
       [&](const std::string& v, int l) {
         cfg.model.d = static_cast<int>(detail::parse_integer(v, l, "d"));
         cfg.params.d = cfg.model.d;
       }},
      {"kappa", real(cfg.model.kappa)},
      {"a", real(cfg.model.a)},
      {"rho_rev", [&](const std::string& v, int l) { cfg.model.rho_rev = detail::parse_real(v, l, "rho_rev"); }},
      {"S_max", real(cfg.model.S_max)},
      {"N", count(cfg.model.cells, 2)},
      {"gamma", real(cfg.model.gamma)},
      {"refinement", [&](const std::string& v, int l) { cfg.refinement = static_cast<int>(detail::parse_integer(v, l, "refinement")); }},
      {"p", real(cfg.params.p)},
      {"q", real(cfg.params.q)},
      {"r", real(cfg.params.r)},
      {"c1", real(cfg.params.c1)},
      {"c2", real(cfg.params.c2)},
      {"mu", real(cfg.params.mu)},
      {"lambda", [&](const std::string& v, int l) { cfg.lambda = detail::parse_real(v, l, "lambda"); }},
      {"lambda_fraction", real(cfg.lambda_fraction)},
      {"campaign",
       [&](const std::string& v, int l) {
         try {
           cfg.campaign.kind = parse_campaign_kind(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(l, e.what());
         }
       }},
      {"n", count(cfg.campaign.n, 1)},
      {"seed",
       [&](const std::string& v, int l) {
         const auto x = detail::parse_integer(v, l, "seed");
         if (x < 0) throw ConfigError(l, "seed must be nonnegative");
         cfg.campaign.seed = static_cast<std::uint64_t>(x);
       }},
      {"dims",
       [&](const std::string& v, int l) {
         cfg.campaign.dims.clear();
         for (double x : detail::parse_real_list(v, l, "dims")) {
           if (x != std::floor(x) || x < 2) throw ConfigError(l, "dims entries must be integers >= 2");
           cfg.campaign.dims.push_back(static_cast<int>(x));
         }
       }},
      {"p_min", real(cfg.campaign.p_min)},
      {"p_max", real(cfg.campaign.p_max)},
      {"a_max", real(cfg.campaign.a_max)},
      {"lambdas", [&](const std::string& v, int l) { cfg.lambdas = detail::parse_real_list(v, l, "lambdas"); }},
      {"lambda_fractions",
       [&](const std::string& v, int l) { cfg.lambda_fractions = detail::parse_real_list(v, l, "lambda_fractions"); }},
      {"hardy_n", count(cfg.hardy_n, 1)},
      {"embedding_trials", count(cfg.embedding_trials, 10)},
      {"max_iterations", count(cfg.max_iterations, 1)},
      {"witness_R", real(cfg.witness_R)},
      {"witness_zeta", real(cfg.witness_zeta)},
      {"output_dir", [&](const std::string& v, int) { cfg.output_dir = v; }},
  };

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto val = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(lineno, "unknown key '" + key + "'");
    if (val.empty()) throw ConfigError(lineno, "missing value for " + key);
    it->second(val, lineno);
    seen[key] = lineno;
  }

  auto line_of = [&](std::initializer_list<const char*> keys) {
    int l = 0;
    for (const char* k : keys)
      if (auto it = seen.find(k); it != seen.end()) l = std::max(l, it->second);
    return l;
  };
  auto require = [&](bool ok, std::initializer_list<const char*> keys, const std::string& msg) {
    if (!ok) throw ConfigError(line_of(keys), msg);
  };
  const auto& m = cfg.model;
  const auto& pr = cfg.params;
  require(m.d >= 2, {"d"}, "d must be >= 2");
  require(m.kappa > 0.0, {"kappa"}, "kappa must be positive");
  require(m.a >= 0.0 && m.a < 1.0, {"a"}, "a must satisfy 0 <= a < 1 (|beta| < 1)");
  require(m.S_max > 0.0, {"S_max"}, "S_max must be positive");
  require(m.gamma > 1.0, {"gamma"}, "gamma must exceed 1");
  require(cfg.refinement >= 1, {"refinement"}, "refinement must be >= 1");
  if (m.rho_rev) {
    const double rf = (1.0 + m.a) / (1.0 - m.a);
    require(*m.rho_rev >= 1.0 / rf && *m.rho_rev <= rf, {"rho_rev", "a"}, "rho_rev must lie in [1/r_F, r_F]");
  }
  require(pr.p > 1.0 && pr.p < pr.d, {"p", "d"}, "p must satisfy 1 < p < d");
  require(pr.r > 1.0 && pr.r < pr.p, {"r", "p"}, "r must satisfy 1 < r < p");
  require(pr.q >= pr.p && pr.q < pr.p_star(), {"q", "p", "d"}, "q must satisfy p <= q < p* = pd/(d-p)");
  require(pr.c1 > 0.0 && pr.c2 > 0.0, {"c1", "c2"}, "c1 and c2 must be positive");
  require(pr.mu > 0.0, {"mu"}, "mu must be positive");
  require(!cfg.lambda || *cfg.lambda >= 0.0, {"lambda"}, "lambda must be nonnegative");
  require(cfg.lambda_fraction >= 0.0, {"lambda_fraction"}, "lambda_fraction must be nonnegative");
  for (double x : cfg.lambdas) require(x >= 0.0, {"lambdas"}, "lambdas must be nonnegative");
  for (double x : cfg.lambda_fractions) require(x >= 0.0, {"lambda_fractions"}, "lambda_fractions must be nonnegative");
  require(cfg.witness_R > 0.0 && cfg.witness_R <= m.S_max, {"witness_R", "S_max"}, "witness_R must lie in (0, S_max]");
  require(cfg.witness_zeta == 0.0 || (cfg.witness_zeta > 0.0 && cfg.witness_zeta < cfg.witness_R * (1.0 - m.a) / (1.0 + m.a)),
          {"witness_zeta", "witness_R", "a"}, "witness_zeta must satisfy 0 < zeta < R(1-a)/(1+a)");
  try {
    validate_campaign(cfg.campaign);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line_of({"campaign", "p_min", "p_max", "a_max", "dims", "n"}), e.what());
  }
  try {
    RadialModel probe(cfg.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line_of({"d", "kappa", "a", "rho_rev", "S_max", "N", "gamma"}), e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Canonical text of every effective setting, in a fixed order.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto kd = [&](const char* k, double v) { kv(k, format_double(v)); };
  kv("command", to_string(c.command));
  kv("d", std::to_string(c.model.d));
  kd("kappa", c.model.kappa);
  kd("a", c.model.a);
  kd("rho_rev", c.model.rho_rev.value_or((1.0 + c.model.a) / (1.0 - c.model.a)));
  kd("S_max", c.model.S_max);
  kv("N", std::to_string(c.model.cells));
  kd("gamma", c.model.gamma);
  kv("refinement", std::to_string(c.refinement));
  kd("p", c.params.p);
  kd("q", c.params.q);
  kd("r", c.params.r);
  kd("c1", c.params.c1);
  kd("c2", c.params.c2);
  kd("mu", c.params.mu);
  if (c.lambda) kd("lambda", *c.lambda);
  kd("lambda_fraction", c.lambda_fraction);
  kv("campaign", std::string(to_string(c.campaign.kind)));
  kv("n", std::to_string(c.campaign.n));
  kv("seed", std::to_string(c.campaign.seed));
  std::string dims;
  for (std::size_t i = 0; i < c.campaign.dims.size(); ++i) dims += (i ? "," : "") + std::to_string(c.campaign.dims[i]);
  kv("dims", dims);
  kd("p_min", c.campaign.p_min);
  kd("p_max", c.campaign.p_max);
  kd("a_max", c.campaign.a_max);
  if (!c.lambdas.empty()) kv("lambdas", detail::join(c.lambdas));
  kv("lambda_fractions", detail::join(c.lambda_fractions));
  kv("hardy_n", std::to_string(c.hardy_n));
  kv("embedding_trials", std::to_string(c.embedding_trials));
  kv("max_iterations", std::to_string(c.max_iterations));
  kd("witness_R", c.witness_R);
  kd("witness_zeta", c.witness_zeta);
  return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(serialize_config(c))));
  return buf;
}

inline std::string provenance_line(const RunConfig& c) {
  return "# version=" + std::string(kVersion) + " seed=" + std::to_string(c.seed()) + " config_hash=" + config_hash(c);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::string thresholds_header() {
  return csv_header({"kappa", "embedding_max_ratio", "l_F", "alpha_q_norm", "alpha_r_norm", "rho_star", "rho_zero",
                     "rho_mu", "lambda_star", "mckean_C"});
}

inline std::string thresholds_row(const Thresholds& t) {
  return CsvRow()
      .add(t.kappa)
      .add(t.embedding_max_ratio)
      .add(t.l_F)
      .add(t.alpha.q_norm)
      .add(t.alpha.r_norm)
      .add(t.rho_star)
      .add(t.rho_zero)
      .add(t.rho_mu)
      .add(t.lambda_star)
      .add(t.mckean)
      .str();
}

inline int run_check(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const auto rep = run_campaign(cfg.campaign);
  write_file(dir / "report_check.csv", provenance_line(cfg) + '\n' + slack_report_header() + '\n' + to_csv_row(rep) + '\n');
  log << "check " << to_string(rep.kind) << ": n=" << rep.n_samples << " min_slack=" << format_double(rep.min_slack)
      << " violations=" << rep.violations << " -> " << (dir / "report_check.csv").string() << '\n';
  return rep.violations == 0 ? kExitOk : kExitViolations;
}

inline int run_hardy(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  CampaignSpec h = cfg.campaign;
  h.kind = CampaignKind::hardy;
  h.n = cfg.hardy_n;
  h.p_min = 2.0;
  h.p_max = 2.0;
  CampaignSpec w = h;
  w.kind = CampaignKind::wang_willem;
  const auto hr = run_campaign(h);
  const auto wr = run_campaign(w);

  const HardyConfig sharp_cfg{0.0, 0.0, 2.0, 3, 1.0};
  const auto m = MinkowskiRanders::euclidean(3);
  const SphereDesign design(3, kDefaultAnisotropyDirections, kDefaultAnisotropySeed);
  const std::array<double, 6> eps{0.2, 0.1, 0.05, 0.03, 0.02, 0.01};
  const std::array<double, 4> ms{0.25, 0.5, 1.0, 2.0};
  const auto scan = near_extremal_scan(sharp_cfg, hardy_anisotropy(m, 2.0, design), eps, ms);
  SlackReport sr;
  sr.kind = CampaignKind::hardy;
  sr.n_samples = scan.profiles;
  sr.min_slack = scan.min_ratio - 1.0;
  sr.violations = scan.min_ratio < 1.0 - 1e-4 ? 1 : 0;
  sr.tolerance = 1e-4;
  sr.seed = cfg.seed();
  sr.argmin_sample = "family=near_extremal d=3 p=2 a_exp=0 b_exp=0 eps=" + format_double(scan.eps) +
                     " M=" + format_double(scan.M) + " ratio=" + format_double(scan.min_ratio);
  const std::string sharp_row = to_csv_row(sr, "hardy_sharpness");

  write_file(dir / "report_hardy.csv", provenance_line(cfg) + '\n' + slack_report_header() + '\n' + to_csv_row(hr) +
                                           '\n' + to_csv_row(wr) + '\n' + sharp_row + '\n');
  log << "hardy: n=" << hr.n_samples << " min(ratio-1)=" << format_double(hr.min_slack) << " violations=" << hr.violations
      << '\n';
  log << "wang_willem: n=" << wr.n_samples << " min_slack=" << format_double(wr.min_slack)
      << " violations=" << wr.violations << '\n';
  log << "hardy_sharpness: min ratio=" << format_double(scan.min_ratio) << " at eps=" << format_double(scan.eps)
      << " M=" << format_double(scan.M) << " -> " << (dir / "report_hardy.csv").string() << '\n';
  return hr.violations + wr.violations + sr.violations == 0 ? kExitOk : kExitViolations;
}

inline Thresholds thresholds_for(const RunConfig& cfg, const RadialModel& model) {
  return compute_thresholds(model, cfg.params, cfg.embedding_trials, cfg.seed(), cfg.quadrature());
}

inline int run_thresholds(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const RadialModel model(cfg.model);
  const auto th = thresholds_for(cfg, model);
  write_file(dir / "report_thresholds.csv", provenance_line(cfg) + '\n' + thresholds_header() + '\n' + thresholds_row(th) + '\n');
  log << "thresholds: " << thresholds_header() << '\n' << "thresholds: " << thresholds_row(th) << " -> "
      << (dir / "report_thresholds.csv").string() << '\n';
  return kExitOk;
}

inline int run_solve(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const RadialModel model(cfg.model);
  const auto th = thresholds_for(cfg, model);
  ProblemParams pr = cfg.params;
  pr.lambda = cfg.lambda.value_or(cfg.lambda_fraction * th.lambda_star);
  SolutionReport rep;
  try {
    rep = solve(model, pr, th, cfg.solve_setup());
  } catch (const std::exception& e) {
    log << "solve: no initial guess: " << e.what() << '\n';
    return kExitNoConvergence;
  }
  const std::string header = csv_header({"lambda", "lambda_star", "rho_star", "rho_zero", "rho_mu", "norm", "grad_term",
                                         "mass_term", "critical_term", "perturbation_term", "energy_total", "el_residual",
                                         "residual_tolerance", "interior", "nonzero", "iterations", "converged"});
  const std::string row = CsvRow()
                              .add(pr.lambda)
                              .add(rep.lambda_star)
                              .add(rep.rho_star)
                              .add(rep.rho_zero)
                              .add(rep.rho_mu)
                              .add(rep.norm)
                              .add(rep.energy.grad_term)
                              .add(rep.energy.mass_term)
                              .add(rep.energy.critical_term)
                              .add(rep.energy.perturbation_term)
                              .add(rep.energy.total)
                              .add(rep.el_residual)
                              .add(rep.residual_tolerance)
                              .add(rep.interior)
                              .add(rep.nonzero)
                              .add(rep.iterations)
                              .add(rep.converged)
                              .str();
  write_file(dir / "report_solve.csv", provenance_line(cfg) + '\n' + header + '\n' + row + '\n');
  write_file(dir / "profile.csv", provenance_line(cfg) + '\n' + profile_csv(model, rep.u_star));
  log << "solve: lambda=" << format_double(pr.lambda) << " lambda_star=" << format_double(rep.lambda_star)
      << " norm=" << format_double(rep.norm) << " rho_mu=" << format_double(rep.rho_mu)
      << " E=" << format_double(rep.energy.total) << " residual=" << format_double(rep.el_residual)
      << " iterations=" << rep.iterations << " converged=" << format_bool(rep.converged)
      << " interior=" << format_bool(rep.interior) << " -> " << (dir / "report_solve.csv").string() << ", "
      << (dir / "profile.csv").string() << '\n';
  return rep.converged ? kExitOk : kExitNoConvergence;
}

inline int run_sweep(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const RadialModel model(cfg.model);
  const auto th = thresholds_for(cfg, model);
  std::vector<double> lambdas = cfg.lambdas;
  if (lambdas.empty())
    for (double f : cfg.lambda_fractions) lambdas.push_back(f * th.lambda_star);
  const auto rows = lambda_sweep(model, cfg.params, lambdas, th, cfg.solve_setup());
  std::string body = provenance_line(cfg) + '\n' + sweep_header() + '\n';
  std::size_t failed = 0;
  for (const auto& r : rows) {
    body += to_csv_row(r) + '\n';
    if (!r.converged) ++failed;
  }
  write_file(dir / "sweep.csv", body);
  write_file(dir / "report_sweep.csv", provenance_line(cfg) + '\n' + thresholds_header() + ",rows,not_converged\n" +
                                           thresholds_row(th) + ',' + std::to_string(rows.size()) + ',' +
                                           std::to_string(failed) + '\n');
  log << "sweep: " << rows.size() << " rows, " << failed << " not converged -> " << (dir / "sweep.csv").string() << '\n';
  return failed == 0 ? kExitOk : kExitNoConvergence;
}

}  // namespace detail

/// Runs the configured command, writing CSVs into cfg.output_dir.
inline int dispatch(const RunConfig& cfg, std::ostream& log) {
  try {
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    switch (cfg.command) {
      case Command::check: return detail::run_check(cfg, dir, log);
      case Command::hardy: return detail::run_hardy(cfg, dir, log);
      case Command::thresholds: return detail::run_thresholds(cfg, dir, log);
      case Command::solve: return detail::run_solve(cfg, dir, log);
      case Command::sweep: return detail::run_sweep(cfg, dir, log);
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  }
  return kExitConfigError;
}

}  // namespace randers
