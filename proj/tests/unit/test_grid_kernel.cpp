#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/heat_kernel.hpp"

using namespace spdelab;

TEST(Grid, NodesAndIndices) {
  SpaceTimeGrid g(1.0, 512, 8.0, 256);
  EXPECT_DOUBLE_EQ(g.dt(), 1.0 / 512);
  EXPECT_DOUBLE_EQ(g.dx(), 16.0 / 256);
  EXPECT_DOUBLE_EQ(g.x(0), -8.0);
  EXPECT_EQ(g.space_index(0.0), 128);
  EXPECT_EQ(g.time_index(0.5), 256);
  EXPECT_EQ(g.time_index(0.5 + 1e-4), -1);
  EXPECT_EQ(g.space_index(0.01), -1);
  const auto h = g.with_steps(256);
  EXPECT_DOUBLE_EQ(h.t_max(), 0.5);
  EXPECT_DOUBLE_EQ(h.dt(), g.dt());
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(SpaceTimeGrid(0.0, 10, 1.0, 8), std::invalid_argument);
  EXPECT_THROW(SpaceTimeGrid(1.0, 10, 1.0, 12), std::invalid_argument);
  EXPECT_NO_THROW(SpaceTimeGrid(1.0, 10, 1.0, 12, 1, Boundary::truncated_absorbing));
}

TEST(Grid, RandomFieldShapeAndFiniteness) {
  SpaceTimeGrid g(1.0, 8, 4.0, 16);
  RandomField u(g);
  EXPECT_EQ(u.n_slices(), 9);
  EXPECT_EQ(u.slice_size(), 16u);
  EXPECT_TRUE(u.all_finite());
  u(3, 2) = std::nan("");
  EXPECT_FALSE(u.all_finite());
}

TEST(HeatKernel, StandardNormalAtZero) {
  EXPECT_NEAR(heat_kernel(1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(HeatKernel, MatchesLongDoubleOracle) {
  const double ref = static_cast<double>(oracle::gauss(0.5L, 1.0L));
  EXPECT_NEAR(heat_kernel(0.5, 1.0), ref, 1e-16);
}

TEST(HeatKernel, RejectsNonPositiveTime) {
  EXPECT_THROW(heat_kernel(0.0, 1.0), std::domain_error);
  EXPECT_THROW(heat_kernel(-1.0, 1.0), std::domain_error);
}

TEST(HeatKernel, MassConservationOverLogSweep) {
  for (double t = 1e-4; t <= 100.0; t *= 3.0) {
    const double L = 8.0 * std::sqrt(t);
    const int n = 2 * static_cast<int>(std::ceil(2 * L / (std::sqrt(t) / 8.0)));
    const double mass = oracle::simpson([&](double x) { return heat_kernel(t, x); }, -L, L, n);
    EXPECT_NEAR(mass, 1.0, 1e-6) << "t = " << t;
  }
}

TEST(Semigroup, ConstantIsPreservedAndZeroTimeIsIdentity) {
  SpaceTimeGrid g(1.0, 4, 8.0, 64);
  std::vector<double> c(64, 2.5);
  const auto out = semigroup_apply(c, 0.7, g);
  for (double v : out) EXPECT_NEAR(v, 2.5, 1e-13);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::vector<double> r(64);
  for (auto& v : r) v = n01(rng);
  EXPECT_EQ(semigroup_apply(r, 0.0, g), r);
}

TEST(Semigroup, GaussianBumpSpreads) {
  SpaceTimeGrid g(1.0, 4, 12.0, 512);
  const double s = 0.3, t = 0.45;
  std::vector<double> v(512);
  for (int i = 0; i < 512; ++i) v[static_cast<std::size_t>(i)] = oracle::normal_pdf(s, g.x(i));
  const auto out = semigroup_apply(v, t, g);
  for (int i = 0; i < 512; ++i) EXPECT_NEAR(out[static_cast<std::size_t>(i)], oracle::normal_pdf(s + t, g.x(i)), 1e-10);
}

TEST(Semigroup, SemigroupLaw) {
  SpaceTimeGrid g(1.0, 4, 8.0, 128);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  std::vector<double> v(128);
  for (auto& x : v) x = n01(rng);
  const auto a = semigroup_apply(semigroup_apply(v, 0.13, g), 0.29, g);
  const auto b = semigroup_apply(v, 0.42, g);
  double scale = 0.0;
  for (double x : b) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-8 * scale);
}

TEST(Semigroup, PositivityPreservedWhenResolved) {
  SpaceTimeGrid g(1.0, 4, 8.0, 128);
  const double dx2 = g.dx() * g.dx();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01;
  std::vector<double> v(128, 0.0);
  for (int k = 0; k < 10; ++k) v[rng() % 128] = u01(rng);
  const double vmax = *std::max_element(v.begin(), v.end());
  for (double t : {6 * dx2, 0.1, 1.0, 5.0}) {
    const auto out = semigroup_apply(v, t, g);
    for (double x : out) EXPECT_GE(x, -1e-13 * vmax) << "t = " << t;
  }
}

// Band-limited symbol: below sqrt(t) ~ dx the kernel rings (Gibbs lobes).
TEST(Semigroup, UnderResolvedKernelLobesAreBounded) {
  SpaceTimeGrid g(1.0, 4, 8.0, 256);
  HeatSemigroup S(g);
  const double dx2 = g.dx() * g.dx();
  for (auto [ratio, bound] : {std::pair{0.5, 5e-3}, {1.0, 5e-4}, {2.0, 5e-6}}) {
    const auto row = S.kernel_row(128, ratio * dx2);
    const double mn = *std::min_element(row.begin(), row.end());
    const double mx = *std::max_element(row.begin(), row.end());
    EXPECT_GE(mn / mx, -bound) << "t/dx^2 = " << ratio;
  }
}

TEST(Semigroup, BothBoundaryModesMatchContinuumAwayFromEdges) {
  SpaceTimeGrid gp(1.0, 4, 8.0, 256);
  SpaceTimeGrid gt(1.0, 4, 8.0, 256, 1, Boundary::truncated_absorbing);
  std::vector<double> v(256);
  for (int i = 0; i < 256; ++i) v[static_cast<std::size_t>(i)] = std::exp(-gp.x(i) * gp.x(i));
  const double t = 0.2;
  const auto a = semigroup_apply(v, t, gp);
  const auto b = semigroup_apply(v, t, gt);
  for (int i = 64; i < 192; ++i) {
    // exp(-x^2) = sqrt(pi) N(0, 1/2), so S(t) gives sqrt(pi) N(0, 1/2 + t).
    const double exact = std::sqrt(std::numbers::pi) * oracle::normal_pdf(0.5 + t, gp.x(i));
    EXPECT_NEAR(a[static_cast<std::size_t>(i)], exact, 1e-12);
    EXPECT_NEAR(b[static_cast<std::size_t>(i)], exact, 5e-4);  // cell-averaged kernel, O(dx^2)
  }
}

TEST(Semigroup, ShapeMismatchThrows) {
  SpaceTimeGrid g(1.0, 4, 8.0, 64);
  std::vector<double> v(32, 1.0);
  EXPECT_THROW(semigroup_apply(v, 0.1, g), std::invalid_argument);
}

TEST(WeightedConvolution, HalfNormalMeanAtCenter) {
  const double lhs = weighted_convolution_lhs(1.0, 1.0, 0.0, 0.0);
  EXPECT_NEAR(lhs, 1.0 + std::sqrt(2.0 / std::numbers::pi), 1e-8);
  const auto rep = weighted_convolution_bound_check(1.0, 1.0, 0.0);
  EXPECT_GE(rep.constant, (1.0 + std::sqrt(2.0 / std::numbers::pi)) / 2.0 - 1e-9);
  EXPECT_TRUE(std::isfinite(rep.constant));
}

TEST(WeightedConvolution, SecondMomentAtCenter) {
  EXPECT_NEAR(weighted_convolution_lhs(2.0, 1.0, 0.0, 0.0), 2.0, 1e-8);
}

TEST(WeightedConvolution, SmallThetaDegeneratesToTwo) {
  EXPECT_NEAR(weighted_convolution_lhs(1e-6, 1.0, 0.3, 0.0), 2.0, 1e-4);
}

// |y|^theta G(t, y) <= C t^{theta/2} G(2t, y) with C = sqrt(2) (2 theta / e)^{theta/2}.
TEST(KernelWeightAbsorption, HoldsWithDoubledTime) {
  for (double theta : {0.5, 1.0, 1.5}) {
    const double C = std::sqrt(2.0) * std::pow(2.0 * theta / std::numbers::e, theta / 2.0);
    for (double t = 1e-3; t <= 10.0; t *= 2.0)
      for (double y = -20.0; y <= 20.0; y += 0.05) {
        const double lhs = std::pow(std::abs(y), theta) * heat_kernel(t, y);
        const double rhs = C * std::pow(t, theta / 2.0) * heat_kernel(2.0 * t, y);
        EXPECT_LE(lhs, rhs * (1.0 + 1e-12) + 1e-300) << "theta " << theta << " t " << t << " y " << y;
      }
  }
}

// With G(t/2, y) on the right the ratio is unbounded in y: no finite constant exists.
TEST(KernelWeightAbsorption, HalvedTimeRatioIsUnbounded) {
  const double theta = 1.0, t = 1.0;
  auto ratio = [&](double y) { return std::pow(std::abs(y), theta) * heat_kernel(t, y) / heat_kernel(t / 2.0, y); };
  EXPECT_GT(ratio(4.0), 10.0 * ratio(2.0));
  EXPECT_GT(ratio(6.0), 1e5);
}
