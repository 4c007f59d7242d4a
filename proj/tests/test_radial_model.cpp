#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "randers/minkowski.hpp"
#include "randers/radial_model.hpp"

using namespace randers;

namespace {

RadialModelSpec spec_with(int d, double kappa, double a, double S = 12.0, std::size_t cells = 512) {
  RadialModelSpec s;
  s.d = d;
  s.kappa = kappa;
  s.a = a;
  s.S_max = S;
  s.cells = cells;
  return s;
}

double reference(auto f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
}

}  // namespace

TEST(RadialModel, ValidatesFields) {
  EXPECT_THROW(RadialModel(spec_with(1, 1, 0.3)), std::invalid_argument);
  EXPECT_THROW(RadialModel(spec_with(4, 0, 0.3)), std::invalid_argument);
  EXPECT_THROW(RadialModel(spec_with(4, 1, 1.0)), std::invalid_argument);
  auto s = spec_with(4, 1, 0.5);
  s.rho_rev = 3.5;
  EXPECT_THROW(RadialModel{s}, std::invalid_argument);
  s.rho_rev = 0.5;
  EXPECT_NO_THROW(RadialModel{s});
  s.gamma = 1.0;
  EXPECT_THROW(RadialModel{s}, std::invalid_argument);
  EXPECT_THROW(RadialModel(spec_with(4, 1, 0.3), {0.0, 1.0, 0.5, 12.0}), std::invalid_argument);
  EXPECT_THROW(RadialModel(spec_with(4, 1, 0.3), {0.0, 1.0, 11.0}), std::invalid_argument);
}

TEST(RadialModel, DefaultGrid) {
  const RadialModel m;
  EXPECT_EQ(m.cells(), 512u);
  EXPECT_EQ(m.grid().front(), 0.0);
  EXPECT_DOUBLE_EQ(m.grid()[1], 12.0 * 1e-4);
  EXPECT_EQ(m.grid().back(), 12.0);
  EXPECT_NEAR(m.rho_rev(), 1.3 / 0.7, 1e-15);
  EXPECT_NEAR(m.kappa_eff(), 1.0 / 0.7, 1e-15);
}

TEST(VolumeDensity, LimitsAndFactorSeparation) {
  const RadialModel flat(spec_with(3, 1e-6, 0.0));
  for (double s : {0.1, 1.0, 5.0}) EXPECT_NEAR(volume_density(flat, s), 4 * std::numbers::pi * s * s, 1e-9 * s * s);
  EXPECT_EQ(volume_density(RadialModel(), 0.0), 0.0);
  EXPECT_THROW(volume_density(RadialModel(), -1.0), std::invalid_argument);
  const RadialModel m(spec_with(4, 1.0, 0.3));
  const RadialModel iso(spec_with(4, 1.0 / 0.7, 0.0));
  for (double s : {0.01, 0.5, 3.0, 11.0})
    EXPECT_NEAR(volume_density(m, s) / std::pow(1 - 0.09, 2.5), volume_density(iso, s), 1e-12 * volume_density(iso, s));
}

TEST(VolumeDensity, BallComparison) {
  // B_g(z/(1+a)) inside B_F(z) inside B_g(z/(1-a)), same density family
  const double a = 0.3;
  const RadialModel m(spec_with(4, 1.0, a));
  auto volume = [&](double z) {
    return reference([&](double s) { return volume_density(m, s); }, 0.0, z);
  };
  for (int k = 1; k <= 10; ++k) {
    const double z = 0.4 * k;
    EXPECT_LT(volume(z / (1 + a)), volume(z));
    EXPECT_LT(volume(z), volume(z / (1 - a)));
  }
}

TEST(AlphaWeight, CappedHeadAndMonotone) {
  const RadialModel m;
  EXPECT_EQ(alpha_weight(m, 0.5), alpha_weight(m, 1.0));
  EXPECT_EQ(alpha_weight(m, 0.0), alpha_weight(m, 1.0));
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    double s1 = rng.uniform(0, 12), s2 = rng.uniform(0, 12);
    if (s1 > s2) std::swap(s1, s2);
    EXPECT_GE(alpha_weight(m, s1), alpha_weight(m, s2));
  }
  // alpha_0 w = C kappa_eff^{1-d} s^{-gamma} beyond 1
  for (double s : {1.0, 2.5, 7.0})
    EXPECT_NEAR(alpha_weight(m, s) * volume_density(m, s), alpha_tail_coefficient(m) * std::pow(s, -2.0),
                1e-12 * alpha_tail_coefficient(m));
}

TEST(AlphaNorms, LayerCakeTotal) {
  const RadialModel m;
  const std::array<double, 1> one{1.0};
  const double total = alpha_lp_norms(m, one).front();
  const double head = reference([&](double s) { return alpha_weight(m, s) * volume_density(m, s); }, 0.0, 1.0);
  const double exact = head + alpha_tail_coefficient(m) / (m.gamma() - 1.0);
  EXPECT_NEAR(total, exact, 1e-4 * exact);
}

TEST(AlphaNorms, HigherExponentsAndConventions) {
  const RadialModel m;
  const std::array<double, 3> e{4.0, 1.6, std::numeric_limits<double>::infinity()};
  const auto n = alpha_lp_norms(m, e);
  for (int k = 0; k < 2; ++k) {
    const double ek = e[static_cast<std::size_t>(k)];
    const double ref = reference([&](double s) { return std::pow(alpha_weight(m, s), ek) * volume_density(m, s); }, 0.0, 40.0);
    EXPECT_NEAR(n[static_cast<std::size_t>(k)], std::pow(ref, 1 / ek), 1e-4 * n[static_cast<std::size_t>(k)]);
  }
  EXPECT_EQ(n[2], alpha_weight(m, 0.0));
  const std::array<double, 1> bad{0.5};
  EXPECT_THROW(alpha_lp_norms(m, bad), std::invalid_argument);
  // tail beyond S_max/2 for the exponents entering the thresholds
  EXPECT_LT(alpha_tail_fraction(m, 6.0, 4.0), 1e-4);
  EXPECT_LT(alpha_tail_fraction(m, 6.0, 1.6), 1e-4);
}

TEST(AlphaNorms, ShrinkingWeightShrinksNorms) {
  auto s1 = spec_with(4, 1.0, 0.3);
  auto s2 = s1;
  s2.gamma = 3.0;  // pointwise smaller alpha_0 for s > 1, equal head
  const std::array<double, 2> e{4.0, 1.6};
  const auto n1 = alpha_lp_norms(RadialModel(s1), e), n2 = alpha_lp_norms(RadialModel(s2), e);
  EXPECT_LE(n2[0], n1[0]);
  EXPECT_LE(n2[1], n1[1]);
}

TEST(RadialDualNorm, HandValuesAndShape) {
  const RadialModel m;
  EXPECT_EQ(radial_dual_norm_p(m, 1.0, 2.3), 1.0);
  EXPECT_EQ(radial_dual_norm_p(m, 0.0, 2.3), 0.0);
  EXPECT_THROW(radial_dual_norm_p(m, 1.0, 1.0), std::invalid_argument);
  const RadialModel half(spec_with(4, 1.0, 0.5));
  EXPECT_NEAR(radial_dual_norm_p(half, -1.0, 2.0), 9.0, 1e-13);
  // cross-check against the closed-form co-metric along -b
  const MinkowskiRanders flat(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.5, 0));
  const double minus = polar_norm(flat, Covector(Eigen::Vector2d(-1, 0)));
  const double plus = polar_norm(flat, Covector(Eigen::Vector2d(1, 0)));
  EXPECT_NEAR(minus / plus, half.rho_rev(), 1e-13);
  const RadialModel sym(spec_with(4, 1.0, 0.0));
  EXPECT_NEAR(radial_dual_norm_p(sym, -2.0, 3.0), 8.0, 1e-13);

  Rng rng(4);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(-5, 5), y = rng.uniform(-5, 5), p = rng.uniform(1.1, 4);
    const double mid = radial_dual_norm_p(m, 0.5 * (x + y), p);
    EXPECT_LE(mid, 0.5 * (radial_dual_norm_p(m, x, p) + radial_dual_norm_p(m, y, p)) * (1 + 1e-12));
    const double t = rng.uniform(0.1, 3);
    EXPECT_NEAR(radial_dual_norm_p(m, t * x, p), std::pow(t, p) * radial_dual_norm_p(m, x, p),
                1e-12 * std::pow(t, p) * radial_dual_norm_p(m, x, p));
  }
}

TEST(Integrate, ZeroAndReferenceQuadrature) {
  const RadialModel m(spec_with(3, 1.0, 0.0, 3.0, 512));
  const RadialProfile u = zero_profile(m);
  EXPECT_EQ(integrate(m, [](double, double, double) { return 0.0; }, u), 0.0);
  const double ours = integrate(m, [&](double s, double, double) { return volume_density(m, s); }, u,
                                QuadratureSpec{QuadratureRule::trapezoid, 32});
  const double ref = reference([&](double s) { return volume_density(m, s); }, 0.0, 3.0);
  // 4 pi int sinh^2 = pi (sinh(2S) - 2S)
  EXPECT_NEAR(ref, std::numbers::pi * (std::sinh(6.0) - 6.0), 1e-10 * ref);
  EXPECT_NEAR(ours, ref, 1e-6 * ref);
  EXPECT_THROW(integrate(m, [](double, double, double) { return 1.0; }, RadialProfile{{0.0, 0.0}}), std::invalid_argument);
}

TEST(Integrate, SecondOrderInCellWidth) {
  auto err = [](std::size_t cells) {
    RadialModelSpec s;
    s.d = 3;
    s.S_max = 3.0;
    const RadialModel m(s, uniform_grid(3.0, cells));
    const double ours = integrate(m, [&](double x, double, double) { return volume_density(m, x) * std::cos(x); },
                                  zero_profile(m), QuadratureSpec{QuadratureRule::trapezoid, 1});
    const double ref = reference([&](double x) { return volume_density(m, x) * std::cos(x); }, 0.0, 3.0);
    return std::abs(ours - ref);
  };
  const double ratio = err(100) / err(200);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(McKean, HandValuesLimitsAndMonotonicity) {
  EXPECT_DOUBLE_EQ(mckean_constant(2, 0.0, 1.0, 2.0), 0.2);
  EXPECT_NEAR(mckean_constant(4, 0.0, 1e8, 2.0), 1.0, 1e-12);
  EXPECT_THROW(mckean_constant(3, 0.0, 1.0, 1.0), std::invalid_argument);
  double prev = 1e300;
  for (int k = 0; k < 100; ++k) {
    const double c = mckean_constant(4, 0.99 * k / 99.0, 1.0, 2.0);
    EXPECT_LT(c, prev);
    prev = c;
  }
  EXPECT_DOUBLE_EQ(mckean_constant(RadialModel(), 2.0), mckean_constant(4, 0.3, 1.0, 2.0));
}

TEST(Serialization, ModelRoundTripAndProfileCsv) {
  const RadialModel m;
  const auto text = serialize_model(m);
  const RadialModel back = parse_model(text);
  EXPECT_EQ(serialize_model(back), text);
  EXPECT_EQ(back.grid(), m.grid());
  EXPECT_THROW(parse_model("bogus = 1\n"), std::invalid_argument);
  auto u = zero_profile(m);
  u.values[0] = 0.25;
  const auto csv = profile_csv(m, u);
  EXPECT_EQ(csv.substr(0, 4), "s,u\n");
  EXPECT_NE(csv.find("0,0.25\n"), std::string::npos);
  u.values.back() = 1.0;
  EXPECT_THROW(profile_csv(m, u), std::invalid_argument);
}
