#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>

#include "cfdev/cylinders.hpp"
#include "cfdev/numeric.hpp"
#include "cfdev/rng.hpp"

namespace cfdev {

enum class PressureMethod {
  automatic,  // enumerate when A^n <= enumeration_limit, otherwise transfer
  enumerate,  // walk {1..A}^n, bound the rest by supermultiplicativity of q
  transfer,   // iterate the cylinder-sum recursion on certified step envelopes
};

std::string to_string(PressureMethod method);
PressureMethod parse_pressure_method(const std::string& text);

struct PressureConfig {
  unsigned level = 10;                // n
  unsigned long truncation = 60;      // A
  PressureMethod method = PressureMethod::automatic;
  std::uint64_t enumeration_limit = 1'000'000;
  std::uint64_t budget = kDefaultBudget;
  unsigned cells = 4096;              // envelope grid of the transfer route
  unsigned threads = 1;
  unsigned precision_bits = kWorkingPrecision;

  // Minimisation settings shared by tau_spectrum and the rate functions.
  double search_tolerance = 1e-4;
  double theta_max = 8.0;
  double delta = 1e-3;
  double gamma_margin = 0.05;
  double t_max = 14.0;
};

/// Finite-level pressure at one theta.
///
/// Two level-n cylinder sums are bracketed, both over the full alphabet:
///   sum          S_n = sum q_n^{-2 theta}
///   expectation  E_n = sum q_n^{-2 theta} / (1 + q_{n-1}/q_n) = sum q_n^{2 - 2 theta} |I_n|
/// Since E_n <= S_n <= 2 E_n both have the same growth rate. The reported
/// bracket is [log E_n.lower / n, log S_n.upper / n]; at theta = 1, E_n = 1.
struct PressureEstimate {
  long double theta = 0;
  unsigned level_n = 0;
  unsigned long truncation_A = 0;
  PressureMethod method = PressureMethod::automatic;
  Bracket sum;
  Bracket expectation;
  long double lower = 0;
  long double upper = 0;
  std::uint64_t retained_terms = 0;
  unsigned precision_bits = kWorkingPrecision;
  unsigned threads = 1;

  /// (1/n) log S_n.
  Bracket sum_rate() const;
  /// (1/n) log E_n.
  Bracket expectation_rate() const;
  /// Point estimate used by minimisations: midpoint of expectation_rate().
  long double central() const { return expectation_rate().mid(); }
  Bracket bracket() const { return {lower, upper}; }
};

PressureEstimate pressure_partial(long double theta, const PressureConfig& config);
PressureEstimate pressure_partial(long double theta, unsigned n, unsigned long A,
                                  PressureMethod method = PressureMethod::automatic);

enum class ExpectationMethod { exact_cylinder, monte_carlo };

/// E(q_n^{2 theta}) under Lebesgue measure.
struct ExpectationEstimate {
  long double theta = 0;
  unsigned level_n = 0;
  long double value_lower = 0;
  long double value_upper = 0;
  long double estimate = 0;
  ExpectationMethod method = ExpectationMethod::exact_cylinder;
  std::uint64_t samples = 0;

  Bracket bracket() const { return {value_lower, value_upper}; }
};

/// Exact method: the cylinder sum sum q_n^{2 theta} |I_n| bracketed with full
/// tails (needs theta < 1/2). Monte Carlo: sample mean with a 99% normal interval.
ExpectationEstimate expectation_qn(long double theta, unsigned n, ExpectationMethod method,
                                   std::uint64_t mc_samples, const CounterRng& rng,
                                   const PressureConfig& config = {});

struct SlopeEstimate {
  long double value = 0;
  long double error = 0;
  long double h = 0;
  unsigned level_n = 0;
  unsigned long truncation_A = 0;
  PressureEstimate minus;  // at 1 - h
  PressureEstimate plus;   // at 1 + h
};

/// Central difference (P_n(1+h) - P_n(1-h)) / 2h of the central estimates. The
/// error adds the bracket widths divided by 2h and a step-halving estimate of
/// the O(h^2) truncation error.
SlopeEstimate pressure_slope_at_one(unsigned n, unsigned long A, long double h,
                                    const PressureConfig& config = {});

/// Memoised pressure estimates for one configuration; safe to share between
/// threads and between the direct and Legendre-form rate computations.
class PressureTable {
 public:
  explicit PressureTable(PressureConfig config) : config_(std::move(config)) {}

  PressureEstimate at(long double theta) const;
  long double central(long double theta) const { return at(theta).central(); }
  const PressureConfig& config() const { return config_; }
  std::size_t evaluations() const;

 private:
  PressureConfig config_;
  mutable std::mutex mutex_;
  mutable std::map<long double, PressureEstimate> cache_;
};

struct Minimum {
  long double x = 0;
  long double value = 0;
  bool at_lower = false;
  bool at_upper = false;
  unsigned evaluations = 0;
};

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
/// The endpoints are evaluated too; a minimum within 2*tol of an endpoint
/// whose endpoint value is no larger sets at_lower / at_upper.
Minimum golden_section(const std::function<long double(long double)>& f, long double lo,
                       long double hi, long double tol);

/// tau(gamma) = inf_theta (2 gamma theta + P(theta)) / (2 gamma).
struct SpectrumValue {
  long double gamma = 0;
  long double tau = 0;
  long double minimizer_theta = 0;
};

SpectrumValue tau_spectrum(long double gamma, const PressureTable& table);

}  // namespace cfdev
