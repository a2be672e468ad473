#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace cfdev {

using BigInt = mpz_class;
using Rational = mpq_class;

/// Working precision (bits of relative accuracy) for logarithms and other
/// transcendental evaluations unless a caller asks for more.
inline constexpr unsigned kWorkingPrecision = 64;

// Conversions between GMP integers and native words. `from_u128` is used by
// the fast deviation search whose denominators fit in 128 bits.
BigInt from_u64(std::uint64_t value);
BigInt from_u128(unsigned __int128 value);
bool fits_u64(const BigInt& value);
std::uint64_t to_u64(const BigInt& value);

/// Natural logarithm of a positive integer or rational, rounded from an MPFR
/// evaluation at `bits` of precision.
long double log_of(const BigInt& value, unsigned bits = kWorkingPrecision);
long double log_of(const Rational& value, unsigned bits = kWorkingPrecision);

/// Nearest long double to an exact rational.
long double to_real(const Rational& value);

/// "num/den" (or "num" when the denominator is 1).
std::string to_string(const Rational& value);
Rational parse_rational(std::string_view text);

/// Shortest decimal that round-trips to the same double.
std::string format_real(double value);

/// A closed interval [lower, upper] of reals.
struct Bracket {
  long double lower = 0;
  long double upper = 0;

  long double width() const { return upper - lower; }
  long double mid() const { return 0.5L * (lower + upper); }
  bool contains(long double x) const { return lower <= x && x <= upper; }
  bool overlaps(const Bracket& other) const {
    return lower <= other.upper && other.lower <= upper;
  }
};

/// Neumaier (improved Kahan) summation in extended precision.
class CompensatedSum {
 public:
  void add(long double term) {
    const long double t = sum_ + term;
    if (fabsl(sum_) >= fabsl(term)) {
      compensation_ += (sum_ - t) + term;
    } else {
      compensation_ += (term - t) + sum_;
    }
    sum_ = t;
    ++count_;
  }

  CompensatedSum& operator+=(const CompensatedSum& other) {
    const std::uint64_t merged = count_ + other.count_;
    add(other.sum_);
    add(other.compensation_);
    count_ = merged;
    return *this;
  }

  long double value() const { return sum_ + compensation_; }
  std::uint64_t count() const { return count_; }

 private:
  static long double fabsl(long double x) { return x < 0 ? -x : x; }

  long double sum_ = 0;
  long double compensation_ = 0;
  std::uint64_t count_ = 0;
};

/// Exact rational accumulator. Terms are merged like a binary counter so that
/// operands of each addition have comparable size; the result does not depend
/// on the order of insertion.
class ExactSum {
 public:
  void add(const Rational& term);
  /// Adds 1/den.
  void add_unit(const BigInt& den);
  void add_unit(unsigned __int128 den);

  ExactSum& operator+=(const ExactSum& other);

  Rational total() const;
  std::uint64_t count() const { return count_; }

 private:
  void push(Rational value, int rank);

  std::vector<std::pair<Rational, int>> stack_;
  std::uint64_t count_ = 0;
};

/// Integer part of a / b for positive b, rounding toward minus infinity.
BigInt floor_div(const BigInt& a, const BigInt& b);
/// Smallest integer >= a / b for positive b.
BigInt ceil_div(const BigInt& a, const BigInt& b);

}  // namespace cfdev
