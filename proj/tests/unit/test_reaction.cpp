#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "spdelab/reaction.hpp"

using namespace spdelab;

TEST(Reaction, CatalogueDecomposition) {
  const auto ac = ReactionFn::allen_cahn();
  const auto ex = ReactionFn::exponential();
  for (double u : {-3.0, -0.5, 0.0, 0.7, 2.0}) {
    EXPECT_NEAR(ac.phi(u), -u * u * u, 1e-12);
    EXPECT_NEAR(ex.phi(u), -std::exp(u), 1e-12);
    EXPECT_NEAR(ac.eval(u), -u * u * u + u, 1e-12);
  }
  const auto d = decompose(ac);
  EXPECT_EQ(d.kappa, 1.0);
  EXPECT_NEAR(d.phi(1.5), -3.375, 1e-12);
}

TEST(Reaction, ByNameAndZero) {
  EXPECT_EQ(ReactionFn::by_name("allen-cahn").kappa(), 1.0);
  EXPECT_TRUE(ReactionFn::by_name("zero").is_zero());
  EXPECT_EQ(ReactionFn::by_name("linear", 0.7).kappa(), 0.7);
  EXPECT_THROW(ReactionFn::by_name("logistic"), std::invalid_argument);
}

TEST(Reaction, RejectsDerivativeAboveKappa) {
  EXPECT_THROW(ReactionFn::custom("steep", [](double u) { return 2.0 * u; }, [](double) { return 2.0; }, 1.0, 3.0, 1.0),
               std::invalid_argument);
  EXPECT_NO_THROW(ReactionFn::custom("ok", [](double u) { return u; }, [](double) { return 1.0; }, 1.0, 3.0, 1.0));
}

TEST(Reaction, RejectsViolatedGrowthBound) {
  EXPECT_THROW(ReactionFn::custom("fast", [](double u) { return -std::exp(u * u); },
                                  [](double u) { return -2.0 * u * std::exp(u * u); }, 1e6, 1.0, 1.0),
               std::invalid_argument);
}

TEST(Resolvent, CubicMatchesBisection) {
  const auto ac = ReactionFn::allen_cahn();
  EXPECT_NEAR(resolvent(ac, 1.0, 2.0), 1.0, 1e-10);
  for (double lambda : {0.01, 0.3, 2.0})
    for (double u : {-7.0, -0.2, 0.0, 1.3, 9.0}) {
      const double ref = oracle::bisect([&](double v) { return v + lambda * v * v * v - u; }, -20.0, 20.0);
      EXPECT_NEAR(resolvent(ac, lambda, u), ref, 1e-9 * std::max(1.0, std::abs(u)));
    }
}

TEST(Resolvent, LinearDampingClosedForm) {
  EXPECT_NEAR(resolvent(ReactionFn::damping(), 0.5, 3.0), 2.0, 1e-12);
  EXPECT_EQ(resolvent(ReactionFn::linear(0.4), 0.5, 3.0), 3.0);
}

TEST(Resolvent, ExponentialResidual) {
  const auto ex = ReactionFn::exponential();
  for (double u : {-5.0, 0.0, 4.0}) {
    const double v = resolvent(ex, 0.25, u);
    EXPECT_LE(std::abs(v + 0.25 * std::exp(v) - u), 1e-10 * std::max(1.0, std::abs(u)));
  }
}

TEST(Yosida, ValuesAndSmallLambdaLimit) {
  const auto ac = ReactionFn::allen_cahn();
  EXPECT_NEAR(yosida_f(ac, 1.0, 2.0), 1.0, 1e-10);
  EXPECT_NEAR(yosida_f(ac, 1e-7, 2.0), -6.0, 1e-4);
  EXPECT_EQ(yosida_f(ac, 0.5, 0.0), 0.0);
}

TEST(Yosida, DerivativeMatchesCentralDifference) {
  const auto ac = ReactionFn::allen_cahn();
  for (double u : {-2.0, 0.3, 1.7}) {
    const double h = 1e-5;
    const double fd = (yosida_f(ac, 0.2, u + h) - yosida_f(ac, 0.2, u - h)) / (2 * h);
    EXPECT_NEAR(yosida_f_deriv(ac, 0.2, u), fd, 1e-6);
  }
}

TEST(Yosida, SuitePassesForExponential) {
  const auto rep = yosida_suite(ReactionFn::exponential(), {1.0, 0.5, 0.1, 0.01}, 20000, 3);
  for (const auto& c : rep.checks) EXPECT_EQ(c.violations, 0) << c.name;
  EXPECT_TRUE(rep.all_pass());
}

TEST(Yosida, SuiteOnAllenCahnFailsOnlyTheGrowthComparison) {
  const auto rep = yosida_suite(ReactionFn::allen_cahn(), {1.0, 0.5, 0.1, 0.01}, 20000, 3);
  for (const auto& c : rep.checks) {
    EXPECT_GT(c.evaluated, 0) << c.name;
    if (c.name != "f.ii") EXPECT_EQ(c.violations, 0) << c.name;
  }
  EXPECT_GT(rep.find("f.ii").violations, 0);
  EXPECT_FALSE(rep.all_pass());
}

// |f_l(u)| <= (1 + 2 kappa)|f(u)| cannot hold at a zero of f where f_l is nonzero.
TEST(Yosida, GrowthComparisonCounterexampleAtZeroOfF) {
  const auto ac = ReactionFn::allen_cahn();
  EXPECT_NEAR(ac.eval(1.0), 0.0, 1e-15);
  const double j = oracle::bisect([](double v) { return v + v * v * v - 1.0; }, 0.0, 1.0);
  EXPECT_NEAR(yosida_f(ac, 1.0, 1.0), j, 1e-9);
  EXPECT_GT(std::abs(yosida_f(ac, 1.0, 1.0)), 0.68);
}

TEST(Yosida, PhiLambdaIsDominatedAndNonIncreasing) {
  const auto ac = ReactionFn::allen_cahn();
  double prev = yosida_phi(ac, 0.3, -5.0);
  for (double u = -5.0; u <= 5.0; u += 0.01) {
    const double p = yosida_phi(ac, 0.3, u);
    EXPECT_LE(std::abs(p), std::abs(ac.phi(u)) + 1e-9);
    EXPECT_LE(p, prev + 1e-12);
    prev = p;
  }
}
