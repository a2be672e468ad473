#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cfdev/cf_core.hpp"
#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"
#include "cfdev/rng.hpp"

using namespace cfdev;

namespace {

// Euclid on machine integers, used as an oracle for expand_rational.
std::vector<unsigned long> euclid(unsigned long p, unsigned long q) {
  std::vector<unsigned long> digits;
  while (p != 0) {
    digits.push_back(q / p);
    const unsigned long r = q % p;
    q = p;
    p = r;
  }
  return digits;
}

Rational evaluate(const PartialQuotients& digits) {
  Rational x = 0;
  for (std::size_t i = digits.size(); i-- > 0;) x = 1 / (Rational(digits[i]) + x);
  return x;
}

}  // namespace

TEST(ExpandRational, HandWorkedCases) {
  EXPECT_EQ(expand_rational(7, 10), (PartialQuotients{1, 2, 3}));
  EXPECT_TRUE(expand_rational(0, 1).empty());
  EXPECT_EQ(expand_rational(1, 2), (PartialQuotients{2}));
}

TEST(ExpandRational, RejectsBadInput) {
  EXPECT_THROW(expand_rational(1, 0), InvalidInput);
  EXPECT_THROW(expand_rational(3, 3), InvalidInput);
  EXPECT_THROW(expand_rational(10, 7), InvalidInput);
}

TEST(ExpandRational, MatchesEuclidAndInverts) {
  CounterRng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const unsigned long q = 2 + rng() % 100000;
    const unsigned long p = rng() % q;
    const PartialQuotients digits = expand_rational(p, q);
    const auto oracle = euclid(p, q);
    ASSERT_EQ(digits.size(), oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) EXPECT_EQ(digits[k], oracle[k]);
    Rational expected(p, q);
    expected.canonicalize();
    EXPECT_EQ(evaluate(digits), expected);
  }
}

TEST(ExpandRational, TruncationAndDepthGuard) {
  // F_201/F_202 has 200 digits.
  BigInt a = 1, b = 1;
  for (int i = 0; i < 200; ++i) {
    BigInt c = a + b;
    a = b;
    b = c;
  }
  EXPECT_EQ(expand_rational(a, b, 50).size(), 50u);
  EXPECT_EQ(expand_rational(a, b).size(), 200u);
  EXPECT_THROW(expand_rational(a, b, kDefaultMaxTerms + 1), InvalidInput);
  EXPECT_EQ(expand_rational(a, b, kDefaultMaxTerms + 1, true).size(), 200u);
}

TEST(ExpandReal, GoldenRatioGivesOnes) {
  const PartialQuotients digits = expand_real(golden_point(), 40);
  ASSERT_EQ(digits.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(digits[i], 1);
}

TEST(ExpandReal, RationalPoint) {
  EXPECT_EQ(expand_real(PrecisionReal::exact(Rational(7, 10)), 3), (PartialQuotients{1, 2, 3}));
}

TEST(ExpandReal, StraddlingIntervalIsExhausted) {
  const PrecisionReal x = PrecisionReal::enclosure(Rational(49, 100), Rational(51, 100));
  try {
    expand_real(x, 1);
    FAIL() << "expected PrecisionExhausted";
  } catch (const PrecisionExhausted& e) {
    EXPECT_EQ(e.certified_digits(), 0u);
  }
}

TEST(Convergents, Recursion) {
  const auto fib = convergents(PartialQuotients{1, 1, 1, 1, 1});
  const unsigned long expected[] = {1, 2, 3, 5, 8};
  ASSERT_EQ(fib.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(fib[i].q, expected[i]);
  const auto c = convergents(PartialQuotients{1, 2, 3});
  EXPECT_EQ(c.back().p, 7);
  EXPECT_EQ(c.back().q, 10);
  EXPECT_TRUE(convergents(PartialQuotients{}).empty());
}

TEST(Convergents, InvariantsOnRandomDigits) {
  CounterRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BigInt> raw;
    for (int k = 0; k < 30; ++k) raw.emplace_back(static_cast<unsigned long>(1 + rng() % 50));
    const PartialQuotients digits(raw);
    const auto c = convergents(digits);
    for (std::size_t k = 0; k < c.size(); ++k) {
      BigInt g;
      mpz_gcd(g.get_mpz_t(), c[k].p.get_mpz_t(), c[k].q.get_mpz_t());
      EXPECT_EQ(g, 1);
      if (k > 0) {
        EXPECT_GT(c[k].q, c[k - 1].q);
        // p_n q_{n-1} - p_{n-1} q_n = (-1)^{n-1}
        EXPECT_EQ(abs(c[k].p * c[k - 1].q - c[k - 1].p * c[k].q), 1);
      }
    }
    const Continuant last = continuant(digits);
    EXPECT_EQ(last.q, c.back().q);
    EXPECT_EQ(last.q_prev, c[c.size() - 2].q);
  }
}

TEST(GaussOrbit, HandWorkedCases) {
  const auto orbit = gauss_orbit(PrecisionReal::exact(Rational(7, 10)), 3);
  ASSERT_EQ(orbit.size(), 3u);
  EXPECT_EQ(orbit[0].value(), Rational(7, 10));
  EXPECT_EQ(orbit[1].value(), Rational(3, 7));
  EXPECT_EQ(orbit[2].value(), Rational(1, 3));
  for (const auto& y : gauss_orbit(PrecisionReal::exact(0), 5)) EXPECT_EQ(y.value(), 0);
}

TEST(GaussOrbit, GoldenIsFixed) {
  const auto orbit = gauss_orbit(golden_point(), 2);
  const long double g = (std::sqrt(5.0L) - 1) / 2;
  for (const auto& y : orbit) {
    EXPECT_LE(to_real(y.interval().lower), g + 1e-15L);
    EXPECT_GE(to_real(y.interval().upper), g - 1e-15L);
  }
}

TEST(Diophantine, SevenTenths) {
  const auto levels = verify_diophantine(PrecisionReal::exact(Rational(7, 10)), {1, 2, 3});
  ASSERT_GE(levels.size(), 2u);
  for (const auto& level : levels) EXPECT_TRUE(level.all()) << "level " << level.level;
}

TEST(Diophantine, GoldenThirtyDigits) {
  const PrecisionReal x = golden_point();
  const auto levels = verify_diophantine(x, expand_real(x, 30));
  EXPECT_GE(levels.size(), 28u);
  for (const auto& level : levels) EXPECT_TRUE(level.all()) << "level " << level.level;
}

TEST(Diophantine, NeedsNextDigit) {
  EXPECT_THROW(verify_diophantine(PrecisionReal::exact(Rational(1, 2)), {1}), InvalidInput);
}

TEST(Levy, SmallCases) {
  EXPECT_NEAR(static_cast<double>(levy_statistic({2}).value), std::log(2.0), 1e-15);
  EXPECT_THROW(levy_statistic({}), InvalidInput);
  std::vector<BigInt> ones(100, BigInt(1));
  const long double v = levy_statistic(PartialQuotients(ones)).value;
  EXPECT_NEAR(static_cast<double>(v), 0.47, 0.02);
  EXPECT_LE(v, constants().golden_log);
}

TEST(Levy, FibonacciLowerBound) {
  CounterRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<BigInt> raw;
    for (std::size_t k = 0; k < n; ++k) raw.emplace_back(static_cast<unsigned long>(1 + rng() % 9));
    std::vector<BigInt> ones(n, BigInt(1));
    EXPECT_GE(levy_statistic(PartialQuotients(raw)).value,
              levy_statistic(PartialQuotients(ones)).value - 1e-15L);
  }
}

TEST(PartialQuotientsText, RoundTrip) {
  const PartialQuotients d{3, 1, 4, 1, 5};
  EXPECT_EQ(d.to_string(), "3-1-4-1-5");
  EXPECT_EQ(PartialQuotients::parse("3-1-4-1-5"), d);
  EXPECT_THROW(PartialQuotients::parse("3-0-4"), InvalidInput);
}

TEST(DigitStreamTest, LebesguePointIsDeterministic) {
  const CounterRng rng(42);
  const PartialQuotients a = expand_real(lebesgue_point(rng), 30);
  const PartialQuotients b = expand_real(lebesgue_point(rng), 30);
  EXPECT_EQ(a, b);
}

TEST(Constants, Values) {
  const auto& c = constants();
  EXPECT_NEAR(static_cast<double>(c.levy), 1.1865691104156254, 1e-15);
  EXPECT_NEAR(static_cast<double>(c.golden_log), 0.48121182505960344, 1e-15);
  EXPECT_NEAR(static_cast<double>(c.lyapunov), 2.3731382208312508, 1e-15);
  const auto bounds = exp_levy_bounds(1, 0.1);
  EXPECT_EQ(bounds.floor, 3);
  EXPECT_EQ(bounds.ceil, 4);
}
