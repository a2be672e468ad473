#include "cfdev/rates.hpp"

#include <cmath>

#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"

namespace cfdev {

namespace {

constexpr long double kSlopeStep = 1e-3L;

void check_epsilon(long double epsilon) {
  if (!(epsilon > 0)) throw OutOfDomain("epsilon must be positive");
}

long double numeric_slope(const std::function<long double(long double)>& f, long double t,
                          long double lo, long double hi) {
  const long double a = std::max(lo, t - kSlopeStep);
  const long double b = std::min(hi, t + kSlopeStep);
  return (f(b) - f(a)) / (b - a);
}

RateResult finish(RateResult r, const PressureTable& table) {
  const long double b = constants().levy;
  r.objective_at_zero = table.central(1.0L);
  r.negative = r.value < 0;
  if (r.side == Side::upper) {
    r.in_range = r.value > -(b + r.epsilon) && r.negative;
  } else {
    r.in_range = r.value >= -2 * (b - r.epsilon) && r.negative;
  }
  return r;
}

}  // namespace

std::string to_string(Side side) {
  switch (side) {
    case Side::upper: return "upper";
    case Side::lower: return "lower";
    case Side::two_sided: return "two-sided";
  }
  return "upper";
}

Side parse_side(const std::string& text) {
  if (text == "upper" || text == "upper-tail") return Side::upper;
  if (text == "lower" || text == "lower-tail") return Side::lower;
  if (text == "two-sided" || text == "both") return Side::two_sided;
  throw InvalidInput("unknown side '" + text + "'");
}

std::string to_string(RateMethod method) {
  return method == RateMethod::direct_inf ? "direct-inf" : "via-tau";
}

RateResult theta1(long double epsilon, const PressureTable& table) {
  check_epsilon(epsilon);
  const PressureConfig& cfg = table.config();
  const long double gamma = constants().levy + epsilon;
  const auto objective = [&](long double t) { return -t * gamma + table.central(1 - t / 2); };
  const long double hi = 1.0L - cfg.delta;
  const Minimum m = golden_section(objective, 0.0L, hi, cfg.search_tolerance);
  RateResult r;
  r.epsilon = epsilon;
  r.side = Side::upper;
  r.value = m.value;
  r.minimizer_t = m.x;
  r.boundary_hit = m.at_upper;
  r.objective_slope = numeric_slope(objective, m.x, 0.0L, hi);
  return finish(r, table);
}

RateResult theta2(long double epsilon, const PressureTable& table) {
  check_epsilon(epsilon);
  const long double b = constants().levy;
  if (epsilon > b) throw OutOfDomain("theta_2 needs epsilon <= b");
  const PressureConfig& cfg = table.config();
  const long double gamma = b - epsilon;
  const auto objective = [&](long double t) { return t * gamma + table.central(1 + t / 2); };
  long double t_max = cfg.t_max;
  Minimum m = golden_section(objective, cfg.delta, t_max, cfg.search_tolerance);
  if (m.at_upper) {
    t_max *= 2;
    m = golden_section(objective, cfg.delta, t_max, cfg.search_tolerance);
    if (m.at_upper) {
      throw BoundaryHit("theta_2 minimiser reached t_max twice", static_cast<double>(m.x));
    }
  }
  RateResult r;
  r.epsilon = epsilon;
  r.side = Side::lower;
  r.value = m.value;
  r.minimizer_t = m.x;
  r.boundary_hit = m.at_lower;
  r.objective_slope = numeric_slope(objective, m.x, cfg.delta, t_max);
  return finish(r, table);
}

RateResult theta_via_tau(long double epsilon, Side side, const PressureTable& table) {
  check_epsilon(epsilon);
  const LevyConstants& k = constants();
  RateResult r;
  r.epsilon = epsilon;
  r.side = side;
  r.method = RateMethod::via_tau;
  if (side == Side::upper) {
    const long double gamma = k.levy + epsilon;
    const SpectrumValue s = tau_spectrum(gamma, table);
    r.value = 2 * gamma * (s.tau - 1);
    r.minimizer_t = 2 * (1 - s.minimizer_theta);
  } else if (side == Side::lower) {
    if (epsilon > k.levy - k.golden_log) {
      throw OutOfDomain("the tau identity for theta_2 holds only for eps <= b - log golden ratio");
    }
    const long double gamma = k.levy - epsilon;
    const SpectrumValue s = tau_spectrum(gamma, table);
    r.value = 2 * gamma * (s.tau - 1);
    r.minimizer_t = 2 * (s.minimizer_theta - 1);
  } else {
    throw InvalidInput("rate functions are defined per tail");
  }
  return finish(r, table);
}

RateAgreement compare_rate_methods(long double epsilon, Side side, const PressureTable& table,
                                   long double tolerance) {
  RateAgreement out;
  out.direct = side == Side::upper ? theta1(epsilon, table) : theta2(epsilon, table);
  out.via_tau = theta_via_tau(epsilon, side, table);
  out.difference = std::fabs(out.direct.value - out.via_tau.value);
  out.tolerance = tolerance;
  const auto theta_of = [side](long double t) { return side == Side::upper ? 1 - t / 2 : 1 + t / 2; };
  out.bracket_width =
      std::max(table.at(theta_of(out.direct.minimizer_t)).expectation_rate().width(),
               table.at(theta_of(out.via_tau.minimizer_t)).expectation_rate().width());
  out.agree = out.difference <= tolerance;
  return out;
}

LowerBoundConstant lower_bound_constant(long double epsilon, Side side) {
  check_epsilon(epsilon);
  const LevyConstants& k = constants();
  LowerBoundConstant out;
  out.epsilon = epsilon;
  out.side = side;
  if (side == Side::upper) {
    out.integer_constant = exp_levy_bounds(1, static_cast<double>(epsilon)).ceil;
  } else if (side == Side::lower) {
    if (epsilon > k.levy_minus_log2) {
      throw OutOfDomain("the lower-tail constant needs eps <= b - log 2");
    }
    out.integer_constant = exp_levy_bounds(1, -static_cast<double>(epsilon), 1).floor;
  } else {
    throw InvalidInput("lower-bound constants are defined per tail");
  }
  out.bound = -2 * log_of(out.integer_constant) - std::log(3.0L);
  return out;
}

}  // namespace cfdev
