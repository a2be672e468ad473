#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfdev/cf_core.hpp"
#include "cfdev/cylinders.hpp"
#include "cfdev/errors.hpp"
#include "cfdev/numeric.hpp"
#include "cfdev/pressure.hpp"
#include "cfdev/rates.hpp"
#include "cfdev/rng.hpp"

namespace cfdev {

enum class MeasureMethod {
  exact,        // pruned search, exact rational sum
  certified,    // same search, outward-rounded floating sum
  monte_carlo,  // exact Lebesgue sampling, 99% Wilson interval
  automatic,    // exact, then certified, then Monte Carlo as budgets run out
};

std::string to_string(MeasureMethod method);
MeasureMethod parse_measure_method(const std::string& text);

/// Lebesgue measure of {log q_n / n >= b + eps} (upper), {log q_n / n <= b - eps}
/// (lower) or their union (two-sided) at one level n.
struct DeviationMeasurement {
  unsigned n = 0;
  long double epsilon = 0;
  Side side = Side::upper;
  MeasureMethod method = MeasureMethod::exact;
  bool complete = true;  // false: budget ran out, [ci_lower, ci_upper] brackets the measure

  std::optional<Rational> exact_value;  // exact method only (accounted mass when partial)
  long double estimate = 0;
  long double ci_lower = 0;  // certified bracket or Wilson interval
  long double ci_upper = 0;

  std::uint64_t nodes = 0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;

  /// c = b_eps (upper, two-sided) or b*_eps (lower); zero when undefined.
  BigInt constant;
  /// (1 / (3 c^2))^n, or 0 when no constant applies.
  long double bound_lower = 0;
  /// Markov bound min_t E(q_n^{+-t}) e^{-+t n (b +- eps)}; 1 unless computed.
  long double bound_upper = 1;

  /// (1/n) log estimate; -inf for an empty set or zero frequency.
  long double rate() const;
};

/// Integer thresholds: q_n >= upper  <=>  log q_n / n >= b + eps, and
/// q_n <= lower  <=>  log q_n / n <= b - eps.
struct DeviationThresholds {
  BigInt upper;  // ceil(e^{n(b+eps)})
  BigInt lower;  // floor(e^{n(b-eps)}), meaningful for eps <= b
};

DeviationThresholds deviation_thresholds(unsigned n, long double epsilon);

struct SearchOptions {
  std::uint64_t budget = kDefaultBudget;  // visited nodes
  unsigned threads = 1;
};

/// Pruned depth-first search with closed-form tails. Exact rational result;
/// BudgetExceeded carries the accounted mass and an upper bound on the rest.
DeviationMeasurement measure_upper_tail_exact(unsigned n, long double epsilon,
                                              const SearchOptions& options = {});
DeviationMeasurement measure_lower_tail_exact(unsigned n, long double epsilon,
                                              const SearchOptions& options = {});
DeviationMeasurement measure_two_sided_exact(unsigned n, long double epsilon,
                                             const SearchOptions& options = {});
DeviationMeasurement measure_exact(unsigned n, long double epsilon, Side side,
                                   const SearchOptions& options = {});

/// The same search summed in floating point with a rigorous rounding bound;
/// ci_lower <= measure <= ci_upper. Needs thresholds below 2^62.
DeviationMeasurement measure_certified(unsigned n, long double epsilon, Side side,
                                       const SearchOptions& options = {});

DeviationMeasurement measure_mc(unsigned n, long double epsilon, Side side,
                                std::uint64_t samples, const CounterRng& rng,
                                unsigned threads = 1);

/// The bracket [accounted, accounted + unexplored] of an interrupted search.
DeviationMeasurement partial_measurement(unsigned n, long double epsilon, Side side,
                                         MeasureMethod method, const BudgetExceeded& error);

/// (1/n) log lambda <= log_bound / n, from Markov's inequality applied to
/// q_n^{+-t} with the upper end of the level-n expectation bracket.
struct MarkovBound {
  long double t = 0;
  long double log_bound = 0;
};

MarkovBound markov_upper_bound(unsigned n, long double epsilon, Side side,
                               const PressureConfig& config);

struct DeviationConfig {
  MeasureMethod method = MeasureMethod::automatic;
  std::uint64_t exact_budget = 20'000'000;
  std::uint64_t certified_budget = kDefaultBudget;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool markov_bounds = false;
  PressureConfig pressure;  // used for Markov bounds
};

DeviationMeasurement measure(unsigned n, long double epsilon, Side side,
                             const DeviationConfig& config);

enum class FitKind { regression, upper_envelope, lower_envelope };

std::string to_string(FitKind kind);

/// Line log lambda_n ~ intercept + slope * n.
struct DecayFit {
  FitKind kind = FitKind::regression;
  Side side = Side::upper;
  long double epsilon = 0;
  unsigned n_min = 0;
  unsigned n_max = 0;
  std::size_t points = 0;
  long double slope = 0;      // -alpha or -beta for the envelopes
  long double intercept = 0;  // log A or log B for the envelopes
  long double residual = 0;   // max |log lambda_n - line|
};

DecayFit fit_decay(const std::vector<DeviationMeasurement>& points);

struct DecaySeries {
  std::vector<DeviationMeasurement> points;
  std::vector<unsigned> excluded;  // levels dropped for a zero estimate
  DecayFit fit;
  /// -2 log c - log 3, the finite-n rate lower bound (NaN when undefined).
  long double rate_lower_bound = 0;
};

DecaySeries decay_series(long double epsilon, Side side, const std::vector<unsigned>& n_list,
                         const DeviationConfig& config);

/// Envelopes B e^{-beta n} <= lambda_n <= A e^{-alpha n} through every point:
/// alpha = beta = -(least-squares slope), A and B the extreme prefactors.
struct EnvelopeFit {
  DecayFit upper;
  DecayFit lower;

  long double alpha() const { return -upper.slope; }
  long double beta() const { return -lower.slope; }
  long double A() const;
  long double B() const;
  bool holds(const DeviationMeasurement& m) const;
};

EnvelopeFit fit_envelope_constants(const std::vector<DeviationMeasurement>& points);
EnvelopeFit fit_envelope_constants(long double epsilon, const std::vector<unsigned>& n_list,
                                   const DeviationConfig& config);

/// Level-n statistics along the orbit of x.
struct OrbitStatistics {
  std::size_t n = 0;
  long double lyapunov = 0;           // -(2/n) sum_{k<n} log T^k x
  long double lyapunov_identity = 0;  // -(2/n) log |q_{n-1} x - p_{n-1}|
  long double identity_gap = 0;       // relative difference of the two
  std::optional<bool> identity_exact; // rational x: exact equality of the products
  long double approx_rate = 0;        // (1/n) log |x - p_n/q_n|
  long double cylinder_rate_lebesgue = 0;  // (1/n) log |I_n(x)|
  long double cylinder_rate_gauss = 0;     // (1/n) log mu(I_n(x))
  BigInt q_n;
  BigInt q_next;  // q_{n+1}
};

OrbitStatistics orbit_statistics(const PrecisionReal& x, std::size_t n,
                                 unsigned precision_bits = kWorkingPrecision);
/// Statistics of the rational [a_1, ..., a_m] at level n < m.
OrbitStatistics orbit_statistics(const PartialQuotients& digits, std::size_t n,
                                 unsigned precision_bits = kWorkingPrecision);

/// prod_{k<n} T^k x and |q_{n-1} x - p_{n-1}| as exact rationals (n <= digits of x).
struct DerivativeIdentity {
  Rational orbit_product;
  Rational convergent_gap;
};

DerivativeIdentity derivative_identity(const Rational& x, std::size_t n);

}  // namespace cfdev
