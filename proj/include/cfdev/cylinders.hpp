#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cfdev/cf_core.hpp"
#include "cfdev/csv.hpp"
#include "cfdev/numeric.hpp"
#include "cfdev/rng.hpp"

namespace cfdev {

/// Default node budget for enumerations and searches.
inline constexpr std::uint64_t kDefaultBudget = 100'000'000;

/// I(a_1, ..., a_n): the points whose first n digits are the prefix.
/// Endpoints are p_n/q_n and (p_n + p_{n-1})/(q_n + q_{n-1}), ordered so that
/// endpoint_a < endpoint_b.
struct Cylinder {
  PartialQuotients prefix;
  Continuant convergents;
  Rational endpoint_a;
  Rational endpoint_b;
  Rational length;
};

Cylinder cylinder(const PartialQuotients& prefix);

/// 1 / (q_n (q_n + q_{n-1})).
Rational cylinder_length(const Continuant& c);

/// |I(prefix, a)| / |I(prefix)| with the two-sided bound 1/(3a^2) <= ratio <= 2/a^2.
struct ChildRatio {
  Rational ratio;
  bool above_lower = false;  // ratio >= 1/(3a^2)
  bool below_upper = false;  // ratio <= 2/a^2
};

ChildRatio child_ratio(const PartialQuotients& prefix, const BigInt& a);

/// Lebesgue measure of the union of I(prefix, a) over a >= digit_floor.
struct TailMass {
  PartialQuotients prefix;
  BigInt digit_floor;
  Rational mass;
};

TailMass tail_mass(const PartialQuotients& prefix, const BigInt& digit_floor);

/// 1 / (q_n (M q_n + q_{n-1})): the tail for digit floor M >= 1.
Rational tail_mass(const Continuant& c, const BigInt& digit_floor);

struct EnumerationOptions {
  std::uint64_t budget = kDefaultBudget;  // emitted cylinders + tails
  unsigned threads = 1;                   // used only when no visitor is given
};

struct LevelSummary {
  Rational cylinder_mass;
  Rational tail_mass;
  std::uint64_t cylinders = 0;
  std::uint64_t tails = 0;

  Rational total() const { return cylinder_mass + tail_mass; }
};

using CylinderVisitor = std::function<void(const Cylinder&)>;
using TailVisitor = std::function<void(const TailMass&)>;

/// Depth-first walk of {1..A}^n in ascending digit order. Every node of depth
/// k < n also emits tail_mass(prefix, A + 1), so cylinder and tail masses sum
/// to exactly 1. Throws BudgetExceeded once more than options.budget items
/// would be emitted.
LevelSummary enumerate_level(unsigned n, unsigned long A, const CylinderVisitor& on_cylinder = {},
                             const TailVisitor& on_tail = {},
                             const EnumerationOptions& options = {});

/// Digits and convergents of one exactly Lebesgue-distributed point.
struct LebesgueSample {
  PartialQuotients digits;
  Continuant convergents;
};

/// First n digits of a uniform point of [0, 1). The point's binary expansion is
/// drawn lazily from `rng` and each digit is emitted only once it is certified,
/// so the digit law is exactly the Lebesgue law of (a_1(x), ..., a_n(x)).
LebesgueSample sample_lebesgue(std::size_t n, const CounterRng& rng);
PartialQuotients sample_digits_lebesgue(std::size_t n, const CounterRng& rng);

/// Gauss measure log((1 + b) / (1 + a)) / log 2 of [a, b].
long double gauss_measure(const Rational& a, const Rational& b,
                          unsigned precision_bits = kWorkingPrecision);
/// log mu([a, b]); stays finite for cylinders far below the long double range.
long double log_gauss_measure(const Rational& a, const Rational& b,
                              unsigned precision_bits = kWorkingPrecision);

/// Columns prefix, p, q, length_num, length_den.
CsvTable cylinders_to_csv(const std::vector<Cylinder>& cylinders);
/// Rebuilds cylinders from their prefixes and checks the stored p, q, length.
std::vector<Cylinder> cylinders_from_csv(const CsvTable& table);

}  // namespace cfdev
