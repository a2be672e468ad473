#pragma once

#include <string>

#include "cfdev/numeric.hpp"

namespace cfdev {

/// Named constants of the Gauss map, evaluated once with 128-bit MPFR
/// arithmetic. The decimal strings carry 36 significant digits and are copied
/// into reports verbatim.
struct LevyConstants {
  long double levy = 0;             // pi^2 / (12 log 2), a.e. limit of log q_n / n
  long double golden_log = 0;       // log((sqrt 5 + 1) / 2), infimum of the lower Levy constant
  long double levy_minus_log2 = 0;  // upper end of the lower-tail lower-bound domain
  long double lyapunov = 0;         // pi^2 / (6 log 2) = -P'(1)
  std::string levy_decimal;
  std::string golden_log_decimal;
  std::string levy_minus_log2_decimal;
  std::string lyapunov_decimal;
  unsigned precision_bits = 128;
};

const LevyConstants& constants();

struct IntegerBounds {
  BigInt floor;
  BigInt ceil;
};

/// Certified floor and ceiling of exp(level * (levy + offset)) - shift.
/// Evaluated with outward rounding; precision doubles from 128 bits until the
/// integer parts are decided, and PrecisionExhausted is thrown past 16384 bits.
IntegerBounds exp_levy_bounds(long level, double offset, long shift = 0);

}  // namespace cfdev
