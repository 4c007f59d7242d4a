#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "randers/direct_method.hpp"

using namespace randers;

namespace {

RadialProfile random_smooth_profile(const RadialModel& m, Rng& rng) {
  RadialProfile u = zero_profile(m);
  const int modes = 1 + static_cast<int>(rng.index(3));
  for (int k = 0; k < modes; ++k) {
    const double c = rng.uniform(0.0, 4.0), w = rng.uniform(0.5, 4.0), h = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      const double x = (m.grid()[i] - c) / w;
      u.values[i] += h * std::exp(-x * x);
    }
  }
  const double tail = u.values.back();
  for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] -= tail * m.grid()[i] / m.S_max();
  u.values.back() = 0.0;
  return u;
}

struct Setup {
  RadialModel model{};
  ProblemParams params{};
  Thresholds th = compute_thresholds(model, params, 200, 7);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST(ProblemParams, Validation) {
  ProblemParams p;
  EXPECT_DOUBLE_EQ(p.p_star(), 4.0);
  EXPECT_NO_THROW(p.validate());
  p.r = 2.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.q = 4.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.p = 4.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Energy, ZeroProfile) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.lambda = 1.0;
  const auto e = energy(s.model, pr, zero_profile(s.model));
  EXPECT_EQ(e.total, 0.0);
  EXPECT_EQ(e.grad_term + e.mass_term + e.critical_term + e.perturbation_term, 0.0);
  pr.lambda = 0.0;
  const auto g = energy_gradient(s.model, pr, zero_profile(s.model));
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(Energy, ScalingTableAndTotal) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.lambda = 0.7;
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const auto u = random_smooth_profile(s.model, rng);
    auto u2 = u;
    for (double& v : u2.values) v *= 2.0;
    const auto e1 = energy(s.model, pr, u), e2 = energy(s.model, pr, u2);
    EXPECT_NEAR(e2.grad_term, 4 * e1.grad_term, 1e-10 * e2.grad_term);
    EXPECT_NEAR(e2.mass_term, 4 * e1.mass_term, 1e-10 * e2.mass_term);
    EXPECT_NEAR(e2.critical_term, 16 * e1.critical_term, 1e-10 * e2.critical_term);
    EXPECT_NEAR(e2.perturbation_term, std::pow(2.0, 1.5) * e1.perturbation_term, 1e-10 * e2.perturbation_term);
    const double sum = e1.grad_term + e1.mass_term - e1.critical_term - e1.perturbation_term;
    EXPECT_NEAR(e1.total, sum, 1e-12 * (e1.grad_term + e1.mass_term + e1.critical_term + e1.perturbation_term));
    EXPECT_NEAR(e2.norm_F, 2 * e1.norm_F, 1e-12 * e2.norm_F);
  }
}

TEST(Energy, ReverseFactorIsolation) {
  RadialModelSpec sa;
  sa.a = 0.3;
  sa.rho_rev = 1.0;
  RadialModelSpec s0;
  s0.a = 0.0;
  s0.kappa = 1.0 / 0.7;  // same kappa_eff
  const RadialModel ma(sa), m0(s0);
  ProblemParams pr;
  pr.mu = 0.0;
  RadialProfile u = zero_profile(ma);
  for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = 1.0 - ma.grid()[i] / ma.S_max();
  const double factor = std::pow(1 - 0.09, 2.5);
  EXPECT_NEAR(energy(ma, pr, u).grad_term, factor * energy(m0, pr, u).grad_term, 1e-12 * energy(m0, pr, u).grad_term);
  // decreasing profile: the default reverse factor multiplies the gradient term by rho^p
  const RadialModel md;
  EXPECT_NEAR(energy(md, pr, u).grad_term, std::pow(md.rho_rev(), 2) * energy(ma, pr, u).grad_term,
              1e-12 * energy(md, pr, u).grad_term);
}

TEST(Energy, GradientMatchesFiniteDifferences) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.lambda = 0.5 * s.th.lambda_star;
  const DiscreteEnergy e(s.model, pr);
  const auto& g = s.model.grid();
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    auto u = random_smooth_profile(s.model, rng).values;
    const auto grad = e.gradient(u);
    double gmax = 0.0;
    for (double v : grad) gmax = std::max(gmax, std::abs(v));
    for (std::size_t j = 0; j + 1 < u.size(); j += 7) {
      const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
      // keep away from du = 0 kinks and from u = 0 for the sublinear term
      const double du_l = j > 0 ? std::abs(u[j] - u[j - 1]) : 1.0;
      const double du_r = std::abs(u[j + 1] - u[j]);
      if (du_l < 10 * h || du_r < 10 * h || std::abs(u[j]) < 10 * h) continue;
      auto up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      const double fd = (e.evaluate(up).total - e.evaluate(dn).total) / (2 * h);
      EXPECT_NEAR(grad[j], fd, 1e-5 * std::max(std::abs(grad[j]), 1e-3 * gmax)) << "node " << j << " s=" << g[j];
    }
    EXPECT_EQ(grad.back(), 0.0);
  }
}

TEST(Energy, DiscreteLowerSemicontinuityChain) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.mu = 0.0;
  pr.lambda = 0.0;
  const DiscreteEnergy e(s.model, pr);
  const double l = model_uniformity(s.model);
  const double p = pr.p;
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const auto u = random_smooth_profile(s.model, rng).values;
    const auto v = random_smooth_profile(s.model, rng).values;
    const auto G = e.gradient(u);  // gradient of (1/p)||.||^p
    std::vector<double> diff(u.size());
    double pair = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      diff[i] = v[i] - u[i];
      pair += G[i] * diff[i];
    }
    const double lhs = std::pow(e.norm(v), p) - std::pow(e.norm(u), p);
    const double rhs = p * pair + std::pow(l, p / 2) / std::pow(2.0, p - 1) * std::pow(e.norm(diff), p);
    const double scale = std::pow(e.norm(v), p) + std::pow(e.norm(u), p);
    EXPECT_GE(lhs - rhs, -1e-8 * scale);
  }
}

TEST(Embedding, MaxPropertiesAndFixture) {
  const auto& s = setup();
  const auto est = estimate_embedding_constant(s.model, s.params, 200, 7);
  EXPECT_NEAR(est.kappa, kEmbeddingSafety * est.max_ratio, 1e-15);
  // regression fixture for the default model
  EXPECT_NEAR(est.max_ratio, 0.32147, 5e-5);
  const DiscreteEnergy e(s.model, s.params);
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto u = random_smooth_profile(s.model, rng).values;
    EXPECT_LE(e.lebesgue_norm(u, 4.0) / e.norm(u), est.kappa);
  }
  double prev = 0.0;
  for (std::size_t n : {10, 20, 40, 80, 160}) {
    const double r = estimate_embedding_constant(s.model, s.params, n, 11).max_ratio;
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_THROW(estimate_embedding_constant(s.model, s.params, 9, 1), std::invalid_argument);
}

TEST(Thresholds, RhoStarHandValues) {
  ProblemParams p;
  EXPECT_NEAR(rho_star(p, 1.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(rho_star(p, 1.0, 0.25), 0.5, 1e-15);
  double prev = 1e300;
  for (double mu : {0.5, 1.0, 2.0, 8.0, 100.0}) {
    p.mu = mu;
    const double r = rho_star(p, 1.0, 1.0);
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_THROW(rho_star(p, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(rho_star(p, 1.0, 1.5), std::invalid_argument);
}

TEST(Thresholds, RhoZeroIsTheArgmax) {
  const auto& s = setup();
  const double k = s.th.kappa;
  const auto& an = s.th.alpha;
  const ProblemParams& pr = s.params;
  const double t0 = s.th.rho_zero;
  const double f0 = threshold_ratio(pr, k, an, t0);
  const double t_up = threshold_upper(pr, k);
  EXPECT_GT(f0, 0.0);
  for (int i = 1; i <= 1000; ++i) EXPECT_GE(f0, threshold_ratio(pr, k, an, t_up * i / 1001.0));
  const double h = 1e-5 * t0;
  const double deriv = (threshold_ratio(pr, k, an, t0 + h) - threshold_ratio(pr, k, an, t0 - h)) / (2 * h);
  EXPECT_LT(std::abs(deriv) * t0 / f0, 1e-6);
  ProblemParams twice = pr;
  twice.mu *= 2;
  EXPECT_LT(rho_zero(twice, k, an), t0);
}

TEST(Thresholds, LambdaStar) {
  const auto& s = setup();
  EXPECT_GT(s.th.lambda_star, 0.0);
  EXPECT_EQ(s.th.rho_mu, std::min(s.th.rho_star, s.th.rho_zero));
  if (s.th.rho_star >= s.th.rho_zero) {
    EXPECT_EQ(s.th.lambda_star, threshold_ratio(s.params, s.th.kappa, s.th.alpha, s.th.rho_zero));
  }
  double prev = 0.0;
  for (double mu : {1.0, 0.1, 0.01}) {
    ProblemParams pr = s.params;
    pr.mu = mu;
    const double l = lambda_star(pr, s.th.kappa, s.th.alpha, s.th.l_F);
    EXPECT_GT(l, prev);
    prev = l;
  }
}

TEST(TestFunction, ShapeAndValidation) {
  const auto& s = setup();
  const double R = 2.0, zeta = 0.5;
  const auto u = test_function(s.model, R, zeta, 0.75);
  EXPECT_EQ(u.values.front(), 0.75);
  const auto& g = s.model.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] >= R) {
      EXPECT_EQ(u.values[i], 0.0);
    } else if (g[i] > zeta) {
      EXPECT_NEAR(u.values[i], 0.75 * (R - g[i]) / (R - zeta), 1e-15);
    }
  }
  EXPECT_NEAR(interpolate(g, u.values, 0.5 * (zeta + R)), 0.375, 1e-12);
  for (double v : test_function(s.model, R, zeta, 0.0).values) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(sobolev_norm(s.model, s.params, u), 0.75 * sobolev_norm(s.model, s.params, test_function(s.model, R, zeta, 1.0)),
              1e-12);
  EXPECT_THROW(test_function(s.model, R, R * 0.7 / 1.3, 1.0), std::invalid_argument);
  EXPECT_THROW(test_function(s.model, 13.0, 0.5, 1.0), std::invalid_argument);
}

TEST(Witness, NegativeEnergyAndFailureAtZeroLambda) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  const double R = 1.0, zeta = default_witness_zeta(s.model, R);
  double prev_theta = 2.0;
  for (double f : {1.0, 0.1, 0.01}) {
    pr.lambda = f * s.th.lambda_star;
    const auto w = negativity_witness(s.model, pr, R, zeta);
    EXPECT_LT(w.energy.total, 0.0);
    EXPECT_LE(w.halvings, kMaxWitnessHalvings);
    EXPECT_LT(w.theta, prev_theta);
    prev_theta = w.theta;
  }
  pr.lambda = 0.0;
  EXPECT_THROW(negativity_witness(s.model, pr, R, zeta), std::runtime_error);
}

TEST(Solver, ZeroLambdaGivesZero) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.mu = 1e-3;
  pr.lambda = 0.0;
  const auto rep = minimize_in_ball(s.model, pr, 1.0, zero_profile(s.model));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.norm, 0.0);
  EXPECT_EQ(rep.energy.total, 0.0);
  EXPECT_FALSE(rep.nonzero);
}

TEST(Solver, DefaultConfigurationFindsInteriorMinimizer) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.lambda = 0.5 * s.th.lambda_star;
  const auto rep = solve(s.model, pr, s.th);
  EXPECT_TRUE(rep.converged);
  EXPECT_TRUE(rep.interior);
  EXPECT_TRUE(rep.nonzero);
  EXPECT_TRUE(rep.energy_monotone);
  EXPECT_LT(rep.energy.total, 0.0);
  EXPECT_LT(rep.norm, s.th.rho_mu);
  EXPECT_LE(rep.el_residual, rep.residual_tolerance);

  SolverOptions again;
  again.residual_abs_tol = rep.residual_tolerance;
  const auto rerun = minimize_in_ball(s.model, pr, s.th.rho_mu, rep.u_star, again);
  EXPECT_EQ(rerun.iterations, 0u);
  EXPECT_EQ(rerun.u_star.values, rep.u_star.values);
}

TEST(Solver, ProjectionKeepsIteratesInBall) {
  const auto& s = setup();
  ProblemParams pr = s.params;
  pr.lambda = 0.5 * s.th.lambda_star;
  // start far outside a tiny ball; the minimiser over it sits on the boundary
  auto init = test_function(s.model, 1.0, 0.2, 1.0);
  const double rho = 1e-4;
  SolverOptions opts;
  opts.max_iterations = 200;
  const auto rep = minimize_in_ball(s.model, pr, rho, init, opts);
  EXPECT_LE(rep.norm, rho * (1 + 1e-12));
  EXPECT_FALSE(rep.interior);
}

TEST(Sweep, RowsAscendAndZeroRowIsZero) {
  const auto& s = setup();
  const double ls = s.th.lambda_star;
  const auto rows = lambda_sweep(s.model, s.params, {0.9 * ls, 0.0, 0.1 * ls, 0.5 * ls, 0.3 * ls}, s.th);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i - 1].lambda, rows[i].lambda);
  EXPECT_EQ(rows[0].norm, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].converged);
    EXPECT_TRUE(rows[i].interior);
    EXPECT_TRUE(rows[i].nonzero);
    EXPECT_TRUE(rows[i].error.empty());
  }
  EXPECT_EQ(sweep_header().rfind("lambda,lambda_star,norm,energy_total,interior,nonzero,converged", 0), 0u);
}
