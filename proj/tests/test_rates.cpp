#include <gtest/gtest.h>

#include <cmath>

#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"
#include "cfdev/rates.hpp"

using namespace cfdev;

namespace {

PressureTable& shared_table() {
  static PressureTable table([] {
    PressureConfig c;
    c.level = 10;
    c.truncation = 60;
    return c;
  }());
  return table;
}

}  // namespace

TEST(LowerBoundConstant, HandWorkedCases) {
  const LowerBoundConstant up = lower_bound_constant(0.1L, Side::upper);
  EXPECT_EQ(up.integer_constant, 4);
  EXPECT_NEAR(static_cast<double>(up.bound), -2 * std::log(4.0) - std::log(3.0), 1e-12);
  const LowerBoundConstant lo = lower_bound_constant(0.1L, Side::lower);
  EXPECT_EQ(lo.integer_constant, 1);
  EXPECT_NEAR(static_cast<double>(lo.bound), -std::log(3.0), 1e-12);
  EXPECT_THROW(lower_bound_constant(0.5L, Side::lower), OutOfDomain);
}

TEST(LowerBoundConstant, IntegerDefinitions) {
  const long double b = constants().levy;
  for (long double eps = 0.01L; eps < 2; eps += 0.07L) {
    const BigInt c = lower_bound_constant(eps, Side::upper).integer_constant;
    EXPECT_GE(c, 4);
    EXPECT_GE(c.get_d(), std::exp(static_cast<double>(b + eps)));
    EXPECT_LT(c.get_d() - 1, std::exp(static_cast<double>(b + eps)));
  }
  for (long double eps = 0.01L; eps < b - std::log(2.0L); eps += 0.05L) {
    const BigInt c = lower_bound_constant(eps, Side::lower).integer_constant;
    EXPECT_GE(c, 1);
    EXPECT_LE(c.get_d(), std::exp(static_cast<double>(b - eps)) - 1);
    EXPECT_GT(c.get_d() + 1, std::exp(static_cast<double>(b - eps)) - 1);
  }
}

TEST(Theta1, NegativeAndInRange) {
  const long double b = constants().levy;
  for (const long double eps : {0.1L, 0.2L, 0.5L, 0.8L}) {
    const RateResult r = theta1(eps, shared_table());
    EXPECT_LT(r.value, 0);
    EXPECT_GT(r.value, -(b + eps));
    EXPECT_TRUE(r.in_range && r.negative);
    EXPECT_GT(r.value, lower_bound_constant(eps, Side::upper).bound);
    EXPECT_GT(r.minimizer_t, 0);
  }
}

TEST(Theta1, SmallEpsilonNearZero) {
  const RateResult r = theta1(1e-3L, shared_table());
  EXPECT_LT(std::fabs(r.value), 0.01L);
}

TEST(Theta1, ObjectiveAtZeroIsPressureAtOne) {
  const RateResult r = theta1(0.5L, shared_table());
  EXPECT_NEAR(static_cast<double>(r.objective_at_zero), 0.0, 0.05);
  EXPECT_LT(r.value, r.objective_at_zero);
}

TEST(Theta2, NegativeAndInRange) {
  const long double b = constants().levy;
  for (const long double eps : {0.1L, 0.2L, 0.4L, 0.5L}) {
    const RateResult r = theta2(eps, shared_table());
    EXPECT_LT(r.value, 0);
    EXPECT_GE(r.value, -2 * (b - eps));
    EXPECT_TRUE(r.in_range);
  }
  EXPECT_LT(std::fabs(theta2(1e-3L, shared_table()).value), 0.01L);
  EXPECT_THROW(theta2(b + 0.01L, shared_table()), OutOfDomain);
}

TEST(Theta2, TightensWithEpsilon) {
  EXPECT_GT(theta2(0.1L, shared_table()).value, theta2(0.4L, shared_table()).value);
  EXPECT_GT(theta1(0.1L, shared_table()).value, theta1(0.4L, shared_table()).value);
}

TEST(ViaTau, AgreesWithDirect) {
  for (const long double eps : {0.5L, 0.2L}) {
    const RateAgreement a = compare_rate_methods(eps, Side::upper, shared_table());
    EXPECT_LE(std::fabs(a.difference), 2e-3L) << "eps=" << static_cast<double>(eps);
    EXPECT_TRUE(a.agree);
  }
  const RateAgreement small = compare_rate_methods(1e-3L, Side::upper, shared_table());
  EXPECT_LE(std::fabs(small.difference), 2e-3L);
  const RateAgreement lower = compare_rate_methods(0.2L, Side::lower, shared_table());
  EXPECT_LE(std::fabs(lower.difference), 2e-3L);
}

TEST(ViaTau, LowerTailDomain) {
  const long double eps = constants().levy - constants().golden_log + 0.01L;
  EXPECT_THROW(theta_via_tau(eps, Side::lower, shared_table()), OutOfDomain);
}
