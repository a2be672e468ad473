#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfdev/numeric.hpp"
#include "cfdev/rng.hpp"

namespace cfdev {

/// Expansions deeper than this need `allow_deep`; integers grow linearly in
/// the number of digits and a typo in a depth argument should not eat memory.
inline constexpr std::size_t kDefaultMaxTerms = 10000;

/// Finite digit sequence (a_1, ..., a_n) with every a_i >= 1. The empty
/// sequence addresses the whole unit interval.
class PartialQuotients {
 public:
  PartialQuotients() = default;
  explicit PartialQuotients(std::vector<BigInt> digits);
  PartialQuotients(std::initializer_list<unsigned long> digits);

  std::size_t size() const { return digits_.size(); }
  bool empty() const { return digits_.empty(); }
  const BigInt& operator[](std::size_t i) const { return digits_[i]; }
  const std::vector<BigInt>& digits() const { return digits_; }

  void push_back(BigInt digit);
  PartialQuotients prefix(std::size_t length) const;

  /// Dash-separated digits, "1-2-3"; the empty sequence prints as "".
  std::string to_string() const;
  static PartialQuotients parse(std::string_view text);

  friend bool operator==(const PartialQuotients&, const PartialQuotients&) = default;

 private:
  std::vector<BigInt> digits_;
};

/// p_n / q_n in lowest terms.
struct Convergent {
  BigInt p;
  BigInt q;
  long index = 0;
};

/// The last two convergents of a digit sequence, (p_{n-1}, q_{n-1}) and
/// (p_n, q_n), seeded with p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1.
struct Continuant {
  BigInt p_prev{1};
  BigInt q_prev{0};
  BigInt p{0};
  BigInt q{1};

  void push(const BigInt& digit) {
    BigInt next_p = digit * p + p_prev;
    BigInt next_q = digit * q + q_prev;
    p_prev.swap(p);
    q_prev.swap(q);
    p.swap(next_p);
    q.swap(next_q);
  }
};

Continuant continuant(const PartialQuotients& digits);

/// Closed rational interval [lower, upper].
struct Interval {
  Rational lower;
  Rational upper;
};

/// A point of [0, 1): either an exact rational or a rational enclosure that
/// can optionally be narrowed on demand.
class PrecisionReal {
 public:
  /// Returns an enclosure of width at most 2^-bits (or as close as the
  /// source allows) nested in the original one.
  using Refiner = std::function<Interval(unsigned bits)>;

  static PrecisionReal exact(Rational value);
  static PrecisionReal enclosure(Rational lower, Rational upper, Refiner refine = {});

  bool is_rational() const { return rational_; }
  const Rational& value() const;
  const Interval& interval() const { return interval_; }
  bool refinable() const { return static_cast<bool>(refine_); }
  Interval refine(unsigned bits) const;

 private:
  PrecisionReal() = default;

  bool rational_ = true;
  Interval interval_;
  Refiner refine_;
};

/// (sqrt 5 - 1) / 2 as a refinable enclosure, starting at `bits` bits.
PrecisionReal golden_point(unsigned bits = 192);

/// A uniformly distributed point of [0, 1) whose binary digits are drawn from
/// `rng` as they are needed. The same generator always yields the same point.
PrecisionReal lebesgue_point(const CounterRng& rng);

/// Emits certified partial quotients of a PrecisionReal one at a time.
/// A digit is produced only when the whole current enclosure of T^k x maps to
/// the same integer part of 1/x; otherwise the point is refined.
class DigitStream {
 public:
  explicit DigitStream(PrecisionReal x, unsigned max_bits = 1u << 22);

  /// The next digit; std::nullopt once an exact rational is fully expanded.
  /// Throws PrecisionExhausted when refinement cannot decide the digit.
  std::optional<BigInt> next();

  std::size_t depth() const { return depth_; }
  const Continuant& convergents() const { return state_; }
  /// Enclosure of T^depth x (degenerate for exact input).
  Interval remainder() const;
  /// Current enclosure of x itself.
  const Interval& point() const { return enclosure_; }
  /// Narrows the enclosure of x until its width is at most `width`.
  void refine_to(const Rational& width);

 private:
  void recompute();
  bool refine();

  PrecisionReal x_;
  Interval enclosure_;
  unsigned bits_ = 0;
  unsigned max_bits_;
  std::size_t depth_ = 0;
  Continuant state_;
  // Enclosure of T^depth x as lo_num/lo_den <= hi_num/hi_den, denominators > 0.
  BigInt lo_num_, lo_den_, hi_num_, hi_den_;
};

PartialQuotients expand_rational(const BigInt& p, const BigInt& q,
                                 std::size_t max_terms = kDefaultMaxTerms,
                                 bool allow_deep = false);

PartialQuotients expand_real(const PrecisionReal& x, std::size_t n, bool allow_deep = false);

/// (p_1, q_1), ..., (p_n, q_n).
std::vector<Convergent> convergents(const PartialQuotients& digits);

/// (x, Tx, ..., T^{n-1} x); exact for rational x, certified enclosures otherwise.
std::vector<PrecisionReal> gauss_orbit(const PrecisionReal& x, std::size_t n);

/// Checks of 1/(2 q_{n+1}^2) <= 1/(2 q_n q_{n+1}) <= |x - p_n/q_n| <= 1/(q_n q_{n+1}) <= 1/q_n^2
/// at one level. For enclosures a check passes only if it holds on the whole
/// enclosure.
struct DiophantineLevel {
  std::size_t level = 0;
  bool outer_lower = false;  // 1/(2 q_{n+1}^2) <= 1/(2 q_n q_{n+1})
  bool inner_lower = false;  // 1/(2 q_n q_{n+1}) <= |x - p_n/q_n|
  bool inner_upper = false;  // |x - p_n/q_n| <= 1/(q_n q_{n+1})
  bool outer_upper = false;  // 1/(q_n q_{n+1}) <= 1/q_n^2

  bool all() const { return outer_lower && inner_lower && inner_upper && outer_upper; }
};

std::vector<DiophantineLevel> verify_diophantine(const PrecisionReal& x,
                                                 const PartialQuotients& digits);

/// log q_n / n at a finite level.
struct LevyStatistic {
  std::size_t level = 0;
  long double value = 0;
  unsigned precision_bits = kWorkingPrecision;
};

LevyStatistic levy_statistic(const PartialQuotients& digits,
                             unsigned precision_bits = kWorkingPrecision);

}  // namespace cfdev
