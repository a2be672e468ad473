#pragma once

#include <string>

#include "cfdev/numeric.hpp"
#include "cfdev/pressure.hpp"

namespace cfdev {

enum class Side { upper, lower, two_sided };

std::string to_string(Side side);
Side parse_side(const std::string& text);

enum class RateMethod { direct_inf, via_tau };

std::string to_string(RateMethod method);

/// theta_1(eps) = inf_{0<t<1} { -t (b + eps) + P(1 - t/2) }            (upper tail)
/// theta_2(eps) = inf_{t>0}   {  t (b - eps) + P(1 + t/2) }            (lower tail)
/// evaluated on the central estimates of a pressure table.
struct RateResult {
  long double epsilon = 0;
  Side side = Side::upper;
  RateMethod method = RateMethod::direct_inf;
  long double value = 0;
  long double minimizer_t = 0;
  long double objective_at_zero = 0;  // P_n(1)
  long double objective_slope = 0;    // numeric derivative at the minimiser
  bool boundary_hit = false;          // minimiser on an edge of the search interval
  bool negative = false;              // value < 0
  bool in_range = false;              // upper: value > -(b+eps); lower: value >= -2(b-eps)
};

RateResult theta1(long double epsilon, const PressureTable& table);
RateResult theta2(long double epsilon, const PressureTable& table);

/// 2(b + eps)(tau(b + eps) - 1) or 2(b - eps)(tau(b - eps) - 1); the lower form
/// holds only for eps <= b - log golden ratio.
RateResult theta_via_tau(long double epsilon, Side side, const PressureTable& table);

/// Direct and Legendre-form values side by side. They are never averaged; a
/// disagreement points at the width of the pressure brackets.
struct RateAgreement {
  RateResult direct;
  RateResult via_tau;
  long double difference = 0;
  long double tolerance = 0;
  long double bracket_width = 0;  // widest expectation-rate bracket at the minimisers
  bool agree = false;
};

RateAgreement compare_rate_methods(long double epsilon, Side side, const PressureTable& table,
                                   long double tolerance = 2e-3L);

/// -2 log c - log 3 with c = ceil(e^{b+eps}) (upper) or floor(e^{b-eps} - 1) (lower).
struct LowerBoundConstant {
  long double epsilon = 0;
  Side side = Side::upper;
  BigInt integer_constant;
  long double bound = 0;
};

LowerBoundConstant lower_bound_constant(long double epsilon, Side side);

}  // namespace cfdev
