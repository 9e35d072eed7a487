#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "spdelab/det_map.hpp"

using namespace spdelab;

namespace {

RandomField constant_field(const SpaceTimeGrid& g, double c) { return RandomField(g, c); }

double sup_abs_diff(const SliceArray& a, const SliceArray& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST(WeightedNorm, Examples) {
  SpaceTimeGrid g(1.0, 4, 4.0, 64);
  EXPECT_EQ(weighted_norm(RandomField(g), {0.5, 0.0}), 0.0);

  RandomField w(g);
  for (int k = 0; k <= 4; ++k)
    for (int i = 0; i < 64; ++i) w(k, static_cast<std::size_t>(i)) = 1.0 + std::pow(std::abs(g.x(i)), 0.5);
  EXPECT_NEAR(weighted_norm(w, {0.5, 0.0}), 1.0, 1e-12);

  RandomField z(g);
  for (int k = 0; k <= 4; ++k)
    for (int i = 0; i < 64; ++i) z(k, static_cast<std::size_t>(i)) = g.x(i);
  EXPECT_NEAR(weighted_norm(z, {1.0, 0.0}), 0.8, 1e-12);
  EXPECT_NEAR(weighted_distance(z, RandomField(g), {1.0, 0.0}), 0.8, 1e-12);
}

TEST(WeightedNorm, CheckRejectsLargeTheta) {
  EXPECT_THROW(check_weight({3.0, 0.0}, ReactionFn::allen_cahn()), std::invalid_argument);
  EXPECT_THROW(check_weight({0.0, 0.0}, ReactionFn::allen_cahn()), std::invalid_argument);
  EXPECT_NO_THROW(check_weight({0.5, 0.0}, ReactionFn::allen_cahn()));
}

TEST(ApplyM, ZeroReactionIsIdentity) {
  SpaceTimeGrid g(1.0, 64, 8.0, 64);
  const auto z = random_smooth_field(g, 5);
  const auto rep = apply_M(z, ReactionFn::linear(0.0));
  EXPECT_EQ(std::vector<double>(rep.solution.values().begin(), rep.solution.values().end()),
            std::vector<double>(z.values().begin(), z.values().end()));
  EXPECT_EQ(rep.residual, 0.0);
}

TEST(ApplyM, LinearReactionGrowsExponentially) {
  SpaceTimeGrid g(1.0, 512, 8.0, 32);
  const double kappa = 0.8, c = 1.5;
  const auto rep = apply_M(constant_field(g, c), ReactionFn::linear(kappa));
  for (int k = 0; k <= 512; k += 64) {
    const double exact = c * std::exp(kappa * g.t(k));
    EXPECT_NEAR(rep.solution(k, 7), exact, 1e-3 * exact) << "k = " << k;
  }
}

// Spatially constant input reduces M to the ODE m' = f(m), m(0) = 2.
TEST(ApplyM, AllenCahnMatchesRk4AndIsFirstOrder) {
  const auto f = ReactionFn::allen_cahn();
  const auto ode = oracle::rk4([](double, double m) { return m - m * m * m; }, 2.0, 1.0, 8192, 8);
  double err[2];
  int idx = 0;
  for (int n_t : {512, 1024}) {
    SpaceTimeGrid g(1.0, n_t, 8.0, 16);
    const auto rep = apply_M(constant_field(g, 2.0), f);
    double e = 0.0;
    for (int j = 0; j <= 8; ++j) e = std::max(e, std::abs(rep.solution(j * n_t / 8, 3) - ode[j]) / ode[j]);
    err[idx++] = e;
  }
  EXPECT_LT(err[0], 2e-3);
  EXPECT_NEAR(err[0] / err[1], 2.0, 0.2);
  EXPECT_NEAR(ode[8], 1.0, 0.1);
}

TEST(ApplyM, DefectCertificateHolds) {
  SpaceTimeGrid g(1.0, 128, 8.0, 64);
  const auto z = random_smooth_field(g, 9, 1.5);
  for (const auto& f : {ReactionFn::allen_cahn(), ReactionFn::exponential(), ReactionFn::damping()}) {
    const auto rep = apply_M(z, f);
    EXPECT_LE(rep.residual, rep.tolerance) << f.name();
    EXPECT_TRUE(rep.solution.all_finite());
  }
}

TEST(ApplyM, YosidaLadderAgreesWithSemiImplicit) {
  SpaceTimeGrid g(1.0, 256, 8.0, 64);
  const auto z = random_smooth_field(g, 2);
  const auto f = ReactionFn::allen_cahn();
  const auto direct = apply_M(z, f);
  MapSolveOptions opt;
  opt.scheme = DriftScheme::yosida_ladder;
  const auto ladder = apply_M(z, f, opt);
  EXPECT_EQ(ladder.ladder_lambdas.size(), 4u);
  EXPECT_LT(sup_abs_diff(ladder.solution, direct.solution), 5e-3);
  EXPECT_LT(sup_abs_diff(ladder.extrapolated, direct.solution), 5e-3);
  EXPECT_GE(ladder.richardson_gap, 0.0);
}

TEST(ApplyL, ZeroCoefficientIsIdentity) {
  SpaceTimeGrid g(1.0, 64, 8.0, 64);
  const auto z = random_smooth_field(g, 4);
  const auto rep = apply_L(z, RandomField(g), 0.0);
  EXPECT_LE(sup_abs_diff(rep.solution, z), 1e-14);
}

TEST(ApplyL, ConstantCoefficientGivesConstantProfile) {
  SpaceTimeGrid g(1.0, 512, 8.0, 32);
  const double kappa = 0.6;
  const auto rep = apply_L(constant_field(g, 1.0), constant_field(g, kappa), kappa);
  for (int k = 0; k <= 512; k += 128) {
    for (int i = 1; i < 32; ++i) EXPECT_NEAR(rep.solution(k, i), rep.solution(k, 0), 1e-12);
    EXPECT_NEAR(rep.solution(k, 0), std::exp(kappa * g.t(k)), 1e-3);
  }
}

TEST(ApplyL, IsLinear) {
  SpaceTimeGrid g(1.0, 64, 8.0, 64);
  const auto z1 = random_smooth_field(g, 1), z2 = random_smooth_field(g, 2);
  RandomField c(g), sum(g);
  for (std::size_t i = 0; i < c.values().size(); ++i) {
    c.values()[i] = -1.0 - std::sin(0.1 * static_cast<double>(i));
    sum.values()[i] = z1.values()[i] + z2.values()[i];
  }
  const auto a = apply_L(z1, c, 1.0).solution, b = apply_L(z2, c, 1.0).solution, ab = apply_L(sum, c, 1.0).solution;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    EXPECT_NEAR(ab.values()[i], a.values()[i] + b.values()[i], 1e-8);
}

TEST(ApplyL, RejectsCoefficientAboveKappa) {
  SpaceTimeGrid g(1.0, 8, 8.0, 16);
  EXPECT_THROW(apply_L(RandomField(g), constant_field(g, 2.0), 1.0), std::invalid_argument);
}

TEST(Lipschitz, ZeroReactionHasRatioOne) {
  SpaceTimeGrid g(1.0, 32, 8.0, 64);
  const auto est = estimate_lipschitz_M(ReactionFn::linear(0.0), g, 0.5, {-4.0, 0.0, 4.0}, 5, 3);
  for (double r : est.max_ratio) EXPECT_NEAR(r, 1.0, 1e-12);
}

TEST(Lipschitz, LinearReactionBoundedByExponential) {
  SpaceTimeGrid g(1.0, 128, 8.0, 64);
  const double kappa = 0.7;
  const auto est = estimate_lipschitz_M(ReactionFn::linear(kappa), g, 0.5, {0.0}, 10, 3);
  EXPECT_GT(est.overall_max, 1.0);
  EXPECT_LE(est.overall_max, std::exp(kappa * 1.0) * (1.0 + 1e-9));
}

TEST(Lipschitz, AllenCahnBelowFrozenBound) {
  SpaceTimeGrid g(1.0, 128, 8.0, 64);
  const auto est = estimate_lipschitz_M(ReactionFn::allen_cahn(), g, 0.5, {-4.0, 0.0, 4.0}, 8, 11);
  EXPECT_LT(est.overall_max, frozen_lipschitz_bound(0.5, 1.0, 1.0));
  EXPECT_LT(est.center_spread, 0.15);
  EXPECT_NEAR(frozen_lipschitz_bound(0.5, 1.0, 1.0), std::exp(2.25), 1e-12);
}

// Each semi-implicit drift step is a resolvent, which is 1-Lipschitz.
TEST(DriftStep, ResolventIsNonExpansive) {
  const auto f = ReactionFn::allen_cahn();
  for (double a = -4.0; a <= 4.0; a += 0.37)
    for (double b = -4.0; b <= 4.0; b += 0.53)
      EXPECT_LE(std::abs(resolvent(f, 0.01, a) - resolvent(f, 0.01, b)), std::abs(a - b) * (1.0 + 1e-9) + 1e-12);
}
