#include <gtest/gtest.h>

#include <cmath>

#include "cfdev/constants.hpp"
#include "cfdev/deviation.hpp"
#include "cfdev/errors.hpp"
#include "cfdev/rng.hpp"

using namespace cfdev;

namespace {

// Lebesgue measure of {x : q_n(x) <= limit}, by walking every digit tuple
// with q_n <= limit. The last digit is summed in closed form: the children
// a = 1..m of a prefix with (q_{n-1}, q_{n-2}) = (q, r) cover
// [1/(q(q+r)) - 1/(q((m+1)q+r))].
Rational mass_q_at_most(unsigned n, const BigInt& limit) {
  Rational total = 0;
  const auto walk = [&](const auto& self, unsigned depth, const BigInt& r, const BigInt& q) -> void {
    if (depth + 1 == n) {
      if (q + r > limit) return;
      const BigInt m = (limit - r) / q;  // largest a with a q + r <= limit
      total += Rational(1) / (q * (q + r)) - Rational(1) / (q * ((m + 1) * q + r));
      return;
    }
    for (BigInt a = 1; a * q + r <= limit; ++a) self(self, depth + 1, q, a * q + r);
  };
  if (limit >= 1) walk(walk, 0, BigInt(0), BigInt(1));
  return total;
}

BigInt ceil_exp(long double x) { return BigInt(static_cast<double>(std::ceil(std::exp(x)))); }
BigInt floor_exp(long double x) { return BigInt(static_cast<double>(std::floor(std::exp(x)))); }

Rational oracle(unsigned n, long double eps, Side side) {
  const long double b = constants().levy;
  const Rational upper = 1 - mass_q_at_most(n, ceil_exp(n * (b + eps)) - 1);
  const Rational lower = mass_q_at_most(n, floor_exp(n * (b - eps)));
  if (side == Side::upper) return upper;
  if (side == Side::lower) return lower;
  return upper + lower;
}

Rational power(const Rational& base, unsigned n) {
  Rational r = 1;
  for (unsigned i = 0; i < n; ++i) r *= base;
  return r;
}

DeviationConfig exact_config() {
  DeviationConfig c;
  c.method = MeasureMethod::exact;
  return c;
}

}  // namespace

TEST(Thresholds, MatchDirectEvaluation) {
  const long double b = constants().levy;
  for (unsigned n = 1; n <= 12; ++n) {
    for (const long double eps : {0.1L, 0.3L, 0.5L}) {
      const DeviationThresholds t = deviation_thresholds(n, eps);
      EXPECT_EQ(t.upper, ceil_exp(n * (b + eps)));
      EXPECT_EQ(t.lower, floor_exp(n * (b - eps)));
    }
  }
  EXPECT_EQ(deviation_thresholds(3, b).lower, 1);
}

TEST(ExactMeasure, LevelOne) {
  EXPECT_EQ(*measure_upper_tail_exact(1, 0.1L).exact_value, Rational(1, 4));
  EXPECT_EQ(*measure_lower_tail_exact(1, 0.4L).exact_value, Rational(2, 3));
  EXPECT_EQ(*measure_lower_tail_exact(1, constants().levy).exact_value, Rational(1, 2));
  for (long double eps = 0.05L; eps < 3; eps += 0.15L) {
    EXPECT_LT(*measure_upper_tail_exact(1, eps).exact_value, Rational(1, 3));
  }
}

TEST(ExactMeasure, LevelTwoUpperAboveSandwich) {
  const DeviationMeasurement m = measure_upper_tail_exact(2, 0.1L);
  EXPECT_GE(*m.exact_value, Rational(1, 2304));
  EXPECT_EQ(*m.exact_value, oracle(2, 0.1L, Side::upper));
  EXPECT_EQ(m.constant, 4);
}

TEST(ExactMeasure, LevelThreeLower) {
  const DeviationMeasurement m = measure_lower_tail_exact(3, 0.4L);
  EXPECT_EQ(*m.exact_value, mass_q_at_most(3, 10));
}

TEST(ExactMeasure, MatchesBruteForce) {
  for (unsigned n = 1; n <= 4; ++n) {
    for (const long double eps : {0.1L, 0.3L, 0.5L}) {
      for (const Side side : {Side::upper, Side::lower, Side::two_sided}) {
        const DeviationMeasurement m = measure_exact(n, eps, side);
        ASSERT_TRUE(m.exact_value);
        EXPECT_EQ(*m.exact_value, oracle(n, eps, side))
            << "n=" << n << " eps=" << static_cast<double>(eps) << " side=" << to_string(side);
      }
    }
  }
}

TEST(ExactMeasure, TwoSidedDecomposes) {
  for (unsigned n = 1; n <= 5; ++n) {
    for (const long double eps : {0.3L, 0.5L}) {
      const Rational up = *measure_upper_tail_exact(n, eps).exact_value;
      const Rational lo = *measure_lower_tail_exact(n, eps).exact_value;
      const Rational both = *measure_two_sided_exact(n, eps).exact_value;
      EXPECT_EQ(both, up + lo);
      EXPECT_GE(both, 0);
      EXPECT_LE(both, 1);
    }
  }
}

TEST(ExactMeasure, SandwichLowerBounds) {
  for (unsigned n = 2; n <= 5; ++n) {
    const DeviationMeasurement up = measure_upper_tail_exact(n, 0.5L);
    EXPECT_GE(*up.exact_value, power(Rational(1) / (3 * up.constant * up.constant), n));
    const DeviationMeasurement lo = measure_lower_tail_exact(n, 0.3L);
    EXPECT_GE(*lo.exact_value, power(Rational(1) / (3 * lo.constant * lo.constant), n));
    EXPECT_GE(up.estimate, up.bound_lower);
  }
}

TEST(ExactMeasure, ThreadsGiveIdenticalResults) {
  SearchOptions parallel;
  parallel.threads = 3;
  for (const Side side : {Side::upper, Side::lower}) {
    const DeviationMeasurement a = measure_exact(5, 0.5L, side);
    const DeviationMeasurement b = measure_exact(5, 0.5L, side, parallel);
    EXPECT_EQ(*a.exact_value, *b.exact_value);
    EXPECT_EQ(a.nodes, b.nodes);
  }
}

TEST(ExactMeasure, DomainErrors) {
  EXPECT_THROW(measure_exact(0, 0.5L, Side::upper), InvalidInput);
  EXPECT_THROW(measure_exact(2, 0, Side::upper), OutOfDomain);
  EXPECT_THROW(measure_exact(2, constants().levy + 0.1L, Side::lower), OutOfDomain);
}

TEST(CertifiedMeasure, BracketsExactValue) {
  for (unsigned n = 2; n <= 5; ++n) {
    for (const Side side : {Side::upper, Side::lower}) {
      const Rational exact = *measure_exact(n, 0.5L, side).exact_value;
      const DeviationMeasurement c = measure_certified(n, 0.5L, side);
      EXPECT_TRUE(c.complete);
      EXPECT_LE(c.ci_lower, to_real(exact));
      EXPECT_GE(c.ci_upper, to_real(exact));
      EXPECT_LT(c.ci_upper - c.ci_lower, 1e-12L);
    }
  }
}

TEST(Budget, PartialBracketContainsValue) {
  const Rational exact = *measure_exact(5, 0.5L, Side::upper).exact_value;
  SearchOptions tight;
  tight.budget = 1000;
  try {
    measure_exact(5, 0.5L, Side::upper, tight);
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    EXPECT_LE(e.accounted(), exact);
    EXPECT_GE(e.accounted() + e.unexplored(), exact);
    EXPECT_EQ(e.nodes(), 1000u);
    const DeviationMeasurement m = partial_measurement(5, 0.5L, Side::upper, MeasureMethod::exact, e);
    EXPECT_FALSE(m.complete);
    EXPECT_LE(m.ci_lower, to_real(exact));
    EXPECT_GE(m.ci_upper, to_real(exact));
  }
}

TEST(Budget, AutomaticFallsBack) {
  DeviationConfig config;
  config.exact_budget = 1000;
  const DeviationMeasurement m = measure(5, 0.5L, Side::upper, config);
  EXPECT_EQ(m.method, MeasureMethod::certified);
  EXPECT_TRUE(m.complete);
  const long double exact = to_real(*measure_exact(5, 0.5L, Side::upper).exact_value);
  EXPECT_LE(m.ci_lower, exact);
  EXPECT_GE(m.ci_upper, exact);
  config.certified_budget = 1000;
  config.samples = 2000;
  EXPECT_EQ(measure(5, 0.5L, Side::upper, config).method, MeasureMethod::monte_carlo);
}

TEST(MonteCarlo, LevelOneUpper) {
  const DeviationMeasurement m = measure_mc(1, 0.1L, Side::upper, 100000, CounterRng(17));
  EXPECT_NEAR(static_cast<double>(m.estimate), 0.25, 0.01);
  EXPECT_LE(m.ci_lower, 0.25L);
  EXPECT_GE(m.ci_upper, 0.25L);
}

TEST(MonteCarlo, WilsonCoverage) {
  const long double exact = to_real(*measure_exact(2, 0.3L, Side::upper).exact_value);
  int covered = 0;
  const int runs = 40;
  for (int seed = 0; seed < runs; ++seed) {
    const DeviationMeasurement m = measure_mc(2, 0.3L, Side::upper, 2000, CounterRng(seed));
    covered += m.ci_lower <= exact && exact <= m.ci_upper;
  }
  EXPECT_GE(covered, 38);
}

TEST(MonteCarlo, DeterministicAcrossThreads) {
  const CounterRng rng(5);
  const DeviationMeasurement a = measure_mc(20, 0.3L, Side::two_sided, 3000, rng, 1);
  const DeviationMeasurement b = measure_mc(20, 0.3L, Side::two_sided, 3000, rng, 3);
  EXPECT_EQ(a.hits, b.hits);
}

TEST(MonteCarlo, FrequencyDecreasesWithLevel) {
  const CounterRng rng(8);
  const DeviationMeasurement short_run = measure_mc(100, 0.3L, Side::two_sided, 10000, rng);
  const DeviationMeasurement long_run = measure_mc(500, 0.3L, Side::two_sided, 10000, rng);
  EXPECT_LT(long_run.estimate, short_run.estimate);
  EXPECT_LT(long_run.estimate, 0.05L);
}

TEST(MonteCarlo, RejectsZeroSamples) {
  EXPECT_THROW(measure_mc(1, 0.1L, Side::upper, 0, CounterRng(1)), InvalidInput);
}

TEST(Markov, BoundDominatesExactValue) {
  PressureConfig pressure;
  pressure.level = 8;
  pressure.truncation = 40;
  for (const Side side : {Side::upper, Side::lower}) {
    const MarkovBound bound = markov_upper_bound(4, 0.5L, side, pressure);
    const long double exact = to_real(*measure_exact(4, 0.5L, side).exact_value);
    EXPECT_GE(bound.log_bound, std::log(exact));
    EXPECT_GT(bound.t, 0);
  }
}

TEST(Decay, NeedsThreeLevels) {
  EXPECT_THROW(decay_series(0.5L, Side::upper, {2, 3}, exact_config()), InvalidInput);
}

TEST(Decay, UpperTailSeries) {
  const DecaySeries s = decay_series(0.5L, Side::upper, {2, 3, 4, 5}, exact_config());
  const long double bound = lower_bound_constant(0.5L, Side::upper).bound;
  EXPECT_LT(s.fit.slope, 0);
  EXPECT_GE(s.fit.slope, bound - 0.05L);
  EXPECT_NEAR(static_cast<double>(s.rate_lower_bound), static_cast<double>(bound), 1e-12);
  for (const DeviationMeasurement& m : s.points) EXPECT_GE(m.rate(), bound);
  EXPECT_TRUE(s.excluded.empty());
}

TEST(Decay, ZeroEstimatesAreExcluded) {
  DeviationConfig config;
  config.method = MeasureMethod::monte_carlo;
  config.samples = 200;
  const DecaySeries s = decay_series(2.5L, Side::upper, {1, 2, 3, 40, 60}, config);
  EXPECT_FALSE(s.excluded.empty());
}

TEST(Envelopes, HoldAtEveryLevel) {
  const EnvelopeFit fit = fit_envelope_constants(0.5L, {2, 3, 4, 5}, exact_config());
  EXPECT_GT(fit.alpha(), 0);
  EXPECT_GT(fit.beta(), 0);
  EXPECT_GE(fit.beta(), fit.alpha());
  const DecaySeries s = decay_series(0.5L, Side::two_sided, {2, 3, 4, 5}, exact_config());
  for (const DeviationMeasurement& m : s.points) {
    EXPECT_TRUE(fit.holds(m)) << "n=" << m.n;
    EXPECT_LE(fit.B() * std::exp(-fit.beta() * m.n), m.estimate * (1 + 1e-12L));
    EXPECT_GE(fit.A() * std::exp(-fit.alpha() * m.n), m.estimate * (1 - 1e-12L));
  }
  EXPECT_LE(fit.alpha(), -s.points.back().rate() + 0.2L);
  const BigInt c = lower_bound_constant(0.5L, Side::upper).integer_constant;
  EXPECT_LE(fit.beta(), 2 * std::log(c.get_d()) + std::log(3.0) + 0.2);
}

TEST(Orbit, GoldenPoint) {
  const OrbitStatistics s = orbit_statistics(golden_point(), 50);
  const long double two_gamma = 2 * constants().golden_log;
  EXPECT_NEAR(static_cast<double>(s.lyapunov), static_cast<double>(two_gamma), 1e-6);
  EXPECT_NEAR(static_cast<double>(s.approx_rate), -static_cast<double>(two_gamma), 0.05);
  EXPECT_NEAR(static_cast<double>(s.cylinder_rate_lebesgue), -static_cast<double>(two_gamma), 0.05);
  EXPECT_LT(std::fabs(s.identity_gap), 1e-12L);
}

TEST(Orbit, SevenTenthsIsExact) {
  const OrbitStatistics s = orbit_statistics(PartialQuotients{1, 2, 3}, 2);
  ASSERT_TRUE(s.identity_exact);
  EXPECT_TRUE(*s.identity_exact);
  EXPECT_NEAR(static_cast<double>(s.lyapunov), -std::log(0.3), 1e-15);
  const DerivativeIdentity d = derivative_identity(Rational(7, 10), 2);
  EXPECT_EQ(d.orbit_product, Rational(3, 10));
  EXPECT_EQ(d.convergent_gap, Rational(3, 10));
}

TEST(Orbit, RandomSamplesNearLyapunovConstant) {
  const CounterRng rng(2024);
  long double lyapunov = 0, cylinder = 0;
  const int samples = 5;
  for (int i = 0; i < samples; ++i) {
    const OrbitStatistics s = orbit_statistics(lebesgue_point(rng.substream(i)), 2000);
    lyapunov += s.lyapunov / samples;
    cylinder += s.cylinder_rate_lebesgue / samples;
    EXPECT_GE(s.lyapunov, 2 * constants().golden_log - 1e-6L);
  }
  EXPECT_NEAR(static_cast<double>(lyapunov), 2.3731382, 0.1);
  EXPECT_NEAR(static_cast<double>(cylinder), -2.3731382, 0.1);
}

TEST(Orbit, ApproximationRateWithinConvergentBounds) {
  CounterRng rng(77);
  for (int i = 0; i < 200; ++i) {
    std::vector<BigInt> raw;
    const std::size_t len = 3 + rng() % 30;
    for (std::size_t k = 0; k < len; ++k) raw.emplace_back(1 + rng() % 40);
    const PartialQuotients digits(raw);
    const std::size_t n = 1 + rng() % (len - 2);
    const OrbitStatistics s = orbit_statistics(digits, n);
    const long double lq = log_of(s.q_n), lq_next = log_of(s.q_next);
    EXPECT_GE(s.approx_rate, -(std::log(2.0L) + 2 * lq_next) / n - 1e-15L);
    EXPECT_LE(s.approx_rate, -2 * lq / n + 1e-15L);
    ASSERT_TRUE(s.identity_exact);
    EXPECT_TRUE(*s.identity_exact);
  }
}

TEST(Orbit, DerivativeIdentityAgainstDirectIteration) {
  CounterRng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const unsigned long q = 3 + rng() % 1000000;
    const unsigned long p = 1 + rng() % (q - 1);
    Rational x(p, q);
    x.canonicalize();
    const PartialQuotients digits = expand_rational(x.get_num(), x.get_den());
    const std::size_t n = 1 + rng() % digits.size();
    Rational product = 1, y = x;
    for (std::size_t k = 0; k < n; ++k) {
      product *= y;
      const Rational inv = 1 / y;
      y = inv - BigInt(inv.get_num() / inv.get_den());
    }
    Rational gap = x;  // |q_0 x - p_0| for n = 1
    if (n > 1) {
      const Convergent c = convergents(digits)[n - 2];
      gap = abs(c.q * x - c.p);
    }
    const DerivativeIdentity d = derivative_identity(x, n);
    EXPECT_EQ(d.orbit_product, product);
    EXPECT_EQ(d.convergent_gap, gap);
    EXPECT_EQ(d.orbit_product, d.convergent_gap);
  }
}

TEST(Orbit, RejectsShortExpansions) {
  EXPECT_THROW(orbit_statistics(PartialQuotients{1, 2}, 2), InvalidInput);
  EXPECT_THROW(orbit_statistics(PrecisionReal::exact(Rational(1, 2)), 3), InvalidInput);
  EXPECT_THROW(derivative_identity(Rational(3, 2), 1), InvalidInput);
}
