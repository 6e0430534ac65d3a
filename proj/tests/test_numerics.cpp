#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "robust_sp/numerics.hpp"

using namespace robust_sp::numerics;

TEST(LogFactorial, MatchesLgammaAcrossTableBoundary) {
  for (double k : {0.0, 1.0, 2.0, 10.0, 170.0, 4095.0, 4096.0, 10000.0})
    EXPECT_NEAR(log_factorial(k), std::lgamma(k + 1.0), 1e-9 * std::max(1.0, std::lgamma(k + 1.0))) << k;
}

TEST(NeumaierSum, RecoversCancelledTerms) {
  NeumaierSum s;
  for (double x : {1.0, 1e100, 1.0, -1e100}) s.add(x);
  EXPECT_EQ(s.value(), 2.0);
}

TEST(PairwiseSum, OrderFixedResult) {
  std::vector<double> xs(1000);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = 1.0 / static_cast<double>(i + 1);
  const double h = pairwise_sum(xs);
  EXPECT_NEAR(h, 7.4854708605503449, 1e-13);
  EXPECT_EQ(h, pairwise_sum(xs));
}

TEST(AdaptiveSimpson, SmoothAndPeakedIntegrands) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0), std::numbers::e - 1.0, 1e-10);
  const double sd = 1e-3;
  auto narrow = [sd](double x) { return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi)); };
  EXPECT_NEAR(adaptive_simpson(narrow, -10.0, 10.0, 1e-12), 1.0, 1e-9);
}

TEST(PoissonMoments, MatchHighPrecisionSeries) {
  // 40-digit reference sums over k < 400 at lambda = 3.7, power 1.5.
  const auto m = poisson_power_moments(3.7, 1.5);
  EXPECT_NEAR(m.f_power, 0.37578819718108588682, 1e-14);
  EXPECT_NEAR(m.f_power_u, -0.017758619170277540178, 1e-14);
  EXPECT_NEAR(m.f_power_du, -0.096764750813731985578, 1e-14);
  EXPECT_NEAR(m.f_power_uu, 0.068756701150981737328, 1e-14);
}

TEST(PoissonMoments, PowerOneGivesProbabilityIdentities) {
  for (double lam : {0.01, 1.0, 9.0, 250.0, 5000.0}) {
    const auto m = poisson_power_moments(lam, 1.0);
    // log-space pmf carries relative error proportional to lambda log lambda
    const double tol = 1e-12 + 1e-15 * lam * std::log1p(lam);
    EXPECT_NEAR(m.f_power, 1.0, tol) << lam;
    EXPECT_NEAR(m.f_power_u, 0.0, 10 * tol) << lam;
    EXPECT_NEAR(m.f_power_uu, 1.0 / lam, 1e-11 / lam) << lam;
    EXPECT_NEAR(m.f_power_du, -1.0 / lam, 1e-11 / lam) << lam;
  }
}

TEST(PoissonTruncation, CoversBulk) {
  EXPECT_EQ(poisson_truncation(1.0), 50U);
  EXPECT_GE(poisson_truncation(1e4), 10000U + 1200U);
}

TEST(PoissonMoments, HugeRateFailsFast) {
  EXPECT_THROW(poisson_power_moments(1e12, 1.5), robust_sp::numeric_error);
}
