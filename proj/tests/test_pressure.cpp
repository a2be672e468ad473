#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"
#include "cfdev/pressure.hpp"
#include "cfdev/rng.hpp"

using namespace cfdev;

namespace {

constexpr double kZeta3 = 1.2020569031595942;

// Sum over all q_n^{-2 theta} for digits in {1..A}^n, by direct recursion.
long double naive_sum(unsigned n, unsigned long A, long double theta, long double q_prev = 0,
                      long double q = 1) {
  if (n == 0) return std::pow(q, -2 * theta);
  long double total = 0;
  for (unsigned long a = 1; a <= A; ++a) total += naive_sum(n - 1, A, theta, q, a * q + q_prev);
  return total;
}

}  // namespace

TEST(Pressure, LevelOneAtOne) {
  const PressureEstimate e = pressure_partial(1.0L, 1, 1'000'000, PressureMethod::enumerate);
  const double pi2_6 = std::numbers::pi * std::numbers::pi / 6;
  EXPECT_TRUE(e.sum.contains(pi2_6));
  EXPECT_NEAR(static_cast<double>(e.upper), std::log(pi2_6), 1e-5);
  // Outward rounding may push the certified lower end a few ulps below 0.
  EXPECT_GE(e.lower, -1e-10L);
  EXPECT_LE(e.upper, std::log(2.0L));
}

TEST(Pressure, LevelOneZetaThree) {
  const PressureEstimate e = pressure_partial(1.5L, 1, 10'000, PressureMethod::enumerate);
  EXPECT_TRUE(e.sum.contains(kZeta3));
  EXPECT_LT(e.sum.width(), 1e-7L);
}

TEST(Pressure, EnumerationSumBracketsFullSum) {
  for (const long double theta : {0.75L, 1.0L, 1.6L}) {
    const PressureEstimate e = pressure_partial(theta, 3, 12, PressureMethod::enumerate);
    const PressureEstimate fine = pressure_partial(theta, 3, 40, PressureMethod::enumerate);
    EXPECT_GE(e.sum.upper, naive_sum(3, 12, theta));
    EXPECT_GE(fine.sum.upper, naive_sum(3, 40, theta));
    EXPECT_TRUE(e.sum.overlaps(fine.sum));
    EXPECT_LE(fine.sum.width(), e.sum.width());
  }
}

TEST(Pressure, RoutesAgree) {
  PressureConfig config;
  config.level = 4;
  config.truncation = 30;
  for (const long double theta : {0.8L, 1.0L, 1.4L}) {
    config.method = PressureMethod::enumerate;
    const PressureEstimate a = pressure_partial(theta, config);
    config.method = PressureMethod::transfer;
    const PressureEstimate b = pressure_partial(theta, config);
    EXPECT_TRUE(a.bracket().overlaps(b.bracket())) << "theta=" << static_cast<double>(theta);
    EXPECT_LE(a.lower, a.upper);
    EXPECT_LE(b.lower, b.upper);
  }
}

TEST(Pressure, AnchorAtOne) {
  const PressureEstimate e = pressure_partial(1.0L, 8, 40);
  EXPECT_TRUE(e.bracket().contains(0));
  EXPECT_LE(e.bracket().width(), std::log(2.0L) / 8);
}

TEST(Pressure, DecreasingInTheta) {
  PressureConfig config;
  config.level = 6;
  config.truncation = 30;
  long double previous = INFINITY;
  for (long double theta = 0.7L; theta < 3; theta += 0.3L) {
    const long double c = pressure_partial(theta, config).central();
    EXPECT_LT(c, previous);
    previous = c;
  }
}

TEST(Pressure, DomainAndBudget) {
  EXPECT_THROW(pressure_partial(0.5L, 2, 10), OutOfDomain);
  EXPECT_THROW(pressure_partial(0.2L, 2, 10), OutOfDomain);
  PressureConfig config;
  config.level = 6;
  config.truncation = 20;
  config.method = PressureMethod::enumerate;
  config.budget = 10;
  EXPECT_THROW(pressure_partial(1.0L, config), BudgetExceeded);
}

TEST(Expectation, ThetaZeroIsOne) {
  const CounterRng rng(1);
  for (unsigned n = 1; n <= 4; ++n) {
    EXPECT_TRUE(
        expectation_qn(0, n, ExpectationMethod::exact_cylinder, 0, rng).bracket().contains(1));
    EXPECT_NEAR(static_cast<double>(
                    expectation_qn(0, n, ExpectationMethod::monte_carlo, 1000, rng).estimate),
                1.0, 1e-12);
  }
}

TEST(Expectation, InverseDenominatorSeries) {
  const CounterRng rng(1);
  PressureConfig config;
  config.truncation = 100000;
  const auto e = expectation_qn(-0.5L, 1, ExpectationMethod::exact_cylinder, 0, rng, config);
  const double target = std::numbers::pi * std::numbers::pi / 6 - 1;
  EXPECT_TRUE(e.bracket().contains(target));
  EXPECT_LT(e.bracket().width(), 1e-6L);
}

TEST(Expectation, MonteCarloOverlapsExact) {
  const CounterRng rng(2024);
  PressureConfig config;
  config.level = 6;
  config.truncation = 20;
  const auto exact = expectation_qn(0.2L, 6, ExpectationMethod::exact_cylinder, 0, rng, config);
  const auto mc = expectation_qn(0.2L, 6, ExpectationMethod::monte_carlo, 100000, rng, config);
  EXPECT_TRUE(exact.bracket().overlaps(mc.bracket()))
      << static_cast<double>(exact.value_lower) << ".." << static_cast<double>(exact.value_upper)
      << " vs " << static_cast<double>(mc.value_lower) << ".."
      << static_cast<double>(mc.value_upper);
  EXPECT_THROW(expectation_qn(0.6L, 2, ExpectationMethod::exact_cylinder, 0, rng), OutOfDomain);
}

TEST(Slope, NearLyapunovConstant) {
  const SlopeEstimate s = pressure_slope_at_one(10, 60, 0.05L);
  EXPECT_NEAR(static_cast<double>(s.value), -2.3731382, 0.12);
  EXPECT_LT(std::fabs(s.value / constants().lyapunov + 1), 0.05L);
}

TEST(Slope, NegativeForCoarseSettings) {
  const SlopeEstimate wide = pressure_slope_at_one(10, 60, 0.25L);
  EXPECT_LT(wide.value, 0);
  const SlopeEstimate narrow = pressure_slope_at_one(10, 60, 0.05L);
  EXPECT_GT(wide.error, narrow.error);
  const SlopeEstimate small = pressure_slope_at_one(2, 60, 0.05L);
  EXPECT_LT(small.value, 0);
  EXPECT_GT(small.error, 0);
}

TEST(GoldenSection, FindsInteriorAndBoundaryMinima) {
  const Minimum m = golden_section([](long double x) { return (x - 0.3L) * (x - 0.3L); }, 0, 1,
                                   1e-9L);
  EXPECT_NEAR(static_cast<double>(m.x), 0.3, 1e-6);
  EXPECT_FALSE(m.at_lower || m.at_upper);
  const Minimum edge = golden_section([](long double x) { return x; }, 0, 1, 1e-9L);
  EXPECT_TRUE(edge.at_lower);
}

class TauTest : public ::testing::Test {
 protected:
  static PressureTable& table() {
    static PressureTable t([] {
      PressureConfig c;
      c.level = 10;
      c.truncation = 60;
      return c;
    }());
    return t;
  }
};

TEST_F(TauTest, MaximumAtLevyConstant) {
  const long double b = constants().levy;
  const SpectrumValue at_b = tau_spectrum(b, table());
  EXPECT_NEAR(static_cast<double>(at_b.tau), 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(at_b.minimizer_theta), 1.0, 0.1);
  EXPECT_LT(tau_spectrum(b - 0.3L, table()).tau, at_b.tau);
  EXPECT_LT(tau_spectrum(b + 0.3L, table()).tau, at_b.tau);
}

TEST_F(TauTest, LargeGammaBetweenHalfAndOne) {
  const SpectrumValue v = tau_spectrum(3.0L, table());
  EXPECT_GT(v.tau, 0.5L);
  EXPECT_LT(v.tau, 1.0L);
}

TEST_F(TauTest, InRangeAcrossGrid) {
  for (long double g = 0.6L; g < 4; g += 0.4L) {
    const SpectrumValue v = tau_spectrum(g, table());
    EXPECT_GE(v.tau, 0);
    EXPECT_LE(v.tau, 1 + 1e-3L);
  }
  EXPECT_THROW(tau_spectrum(0.3L, table()), OutOfDomain);
}
