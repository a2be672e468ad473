#include "cfdev/deviation.hpp"

#include <algorithm>
#include <atomic>
#include <cfloat>
#include <cmath>
#include <limits>
#include <thread>

#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"
#include "mpfr_value.hpp"

namespace cfdev {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Native search is used while every integer met stays below this.
constexpr u64 kNativeLimit = u64{1} << 62;
constexpr u64 kAllowanceChunk = 1 << 16;
constexpr long double kWilsonZ = 2.5758293035489004L;  // 99% two-sided
constexpr long double kUnitRoundoff = LDBL_EPSILON / 2;

BigInt big(const BigInt& v) { return v; }
BigInt big(u64 v) { return from_u64(v); }
BigInt big(u128 v) { return from_u128(v); }

u128 wide_mul(u64 a, u64 b) { return static_cast<u128>(a) * b; }
BigInt wide_mul(const BigInt& a, const BigInt& b) { return a * b; }

u64 ceil_quotient(u64 a, u64 b) { return (a + b - 1) / b; }
BigInt ceil_quotient(const BigInt& a, const BigInt& b) { return ceil_div(a, b); }

Rational fraction(const BigInt& num, const BigInt& den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// Exact value of a finite long double.
Rational exact_rational(long double v) {
  if (v == 0) return Rational(0);
  int exponent = 0;
  const long double mantissa = std::frexp(v, &exponent);
  const u64 bits = static_cast<u64>(std::ldexp(mantissa, 64));
  Rational r(from_u64(bits));
  exponent -= 64;
  if (exponent >= 0) {
    mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(exponent));
  } else {
    mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-exponent));
  }
  return r;
}

// The four kinds of mass the search adds, for a node with convergent
// denominators q = q_k, qp = q_{k-1}:
//   cylinder  |I|                                  1 / (q (q + qp))
//   tail      children a >= M                      1 / (q (M q + qp))
//   block     children 1..m                        m / ((q + qp) ((m + 1) q + qp))
//   range     children a1..a2                      (a2 + 1 - a1) / ((a1 q + qp) ((a2 + 1) q + qp))
struct ExactAcc {
  ExactSum sum;

  template <class Num>
  void cylinder(const Num& q, const Num& qp) {
    sum.add_unit(wide_mul(q, Num(q + qp)));
  }
  template <class Num>
  void tail(const Num& q, const Num& qp, const Num& m) {
    sum.add_unit(wide_mul(q, Num(m * q + qp)));
  }
  template <class Num>
  void block(const Num& q, const Num& qp, const Num& m) {
    sum.add(fraction(big(m), big(wide_mul(Num(q + qp), Num((m + 1) * q + qp)))));
  }
  template <class Num>
  void range(const Num& q, const Num& qp, const Num& a1, const Num& a2) {
    sum.add(fraction(big(Num(a2 + 1 - a1)), big(wide_mul(Num(a1 * q + qp), Num((a2 + 1) * q + qp)))));
  }
  void merge(const ExactAcc& other) { sum += other.sum; }
};

// Plain summation of positive terms, each within 2 roundings of its true
// value; the bracket allows (terms + 4) roundings per unit of the total,
// doubled for second-order terms.
struct FloatAcc {
  long double sum = 0;
  u64 terms = 0;

  void cylinder(u64 q, u64 qp) { add(1.0L / (static_cast<long double>(q) * (q + qp))); }
  void tail(u64 q, u64 qp, u64 m) { add(1.0L / (static_cast<long double>(q) * (m * q + qp))); }
  void block(u64 q, u64 qp, u64 m) {
    add(static_cast<long double>(m) /
        (static_cast<long double>(q + qp) * static_cast<long double>((m + 1) * q + qp)));
  }
  void range(u64 q, u64 qp, u64 a1, u64 a2) {
    add(static_cast<long double>(a2 + 1 - a1) /
        (static_cast<long double>(a1 * q + qp) * static_cast<long double>((a2 + 1) * q + qp)));
  }
  void merge(const FloatAcc& other) {
    sum += other.sum;
    terms += other.terms + 1;
  }
  void add(long double term) {
    sum += term;
    ++terms;
  }
  long double slack() const { return 2 * (terms + 4) * 2 * kUnitRoundoff * sum; }
  long double lower() const { return sum - slack(); }
  long double upper() const { return sum + slack(); }
};

class NodePool {
 public:
  explicit NodePool(u64 budget) : remaining_(budget) {}

  u64 take(u64 want) {
    u64 current = remaining_.load(std::memory_order_relaxed);
    while (current != 0) {
      const u64 granted = std::min(current, want);
      if (remaining_.compare_exchange_weak(current, current - granted)) return granted;
    }
    return 0;
  }

 private:
  std::atomic<u64> remaining_;
};

struct Stop {};

template <class Num, class Acc>
class Search {
 public:
  Search(unsigned n, bool upper, bool lower, Num ceil_t, Num floor_t, NodePool& pool)
      : n_(n), upper_(upper), lower_(lower), ceil_t_(ceil_t), floor_t_(floor_t), pool_(pool) {}

  Acc accounted;
  Acc unexplored;
  u64 nodes = 0;

  // Charges one node against the budget; on failure the whole cylinder is unexplored.
  void charge(const Num& q, const Num& qp, u64 chunk = kAllowanceChunk) {
    if (allowance_ == 0 && (allowance_ = pool_.take(chunk)) == 0) {
      unexplored.cylinder(q, qp);
      throw Stop{};
    }
    --allowance_;
    ++nodes;
  }

  // Adds the closed-form parts of a node at depth k and returns the largest
  // child digit that still has to be searched (0 for none).
  Num settle(unsigned k, const Num& q, const Num& qp) {
    if (upper_ && q >= ceil_t_) {
      accounted.cylinder(q, qp);
      return Num(0);
    }
    Num last(0);
    if (upper_) {
      const Num m = ceil_quotient(Num(ceil_t_ - qp), q);
      accounted.tail(q, qp, m);
      last = m - 1;
    }
    Num lower_last(0);
    if (lower_ && floor_t_ >= q + qp) lower_last = (floor_t_ - qp) / q;
    if (k + 1 == n_) {
      if (lower_last >= 1) accounted.block(q, qp, lower_last);
      return Num(0);
    }
    return upper_ ? last : lower_last;
  }

  void visit(unsigned k, const Num& q, const Num& qp) {
    charge(q, qp);
    const Num last = settle(k, q, qp);
    for (Num a(1); a <= last; ++a) {
      try {
        visit(k + 1, Num(a * q + qp), q);
      } catch (const Stop&) {
        if (a < last) unexplored.range(q, qp, Num(a + 1), last);
        throw;
      }
    }
  }

 private:
  unsigned n_;
  bool upper_;
  bool lower_;
  Num ceil_t_;
  Num floor_t_;
  NodePool& pool_;
  u64 allowance_ = 0;
};

template <class Acc>
struct SearchOutcome {
  Acc accounted;
  Acc unexplored;
  u64 nodes = 0;
  bool stopped = false;
};

// Root node inline, then one job per first digit, dealt round-robin to the
// workers and merged in worker order.
template <class Num, class Acc>
SearchOutcome<Acc> run_search(unsigned n, bool upper, bool lower, const Num& ceil_t,
                              const Num& floor_t, const SearchOptions& options) {
  NodePool pool(options.budget);
  SearchOutcome<Acc> out;
  Search<Num, Acc> root(n, upper, lower, ceil_t, floor_t, pool);
  Num last(0);
  try {
    root.charge(Num(1), Num(0), 1);
    last = root.settle(0, Num(1), Num(0));
  } catch (const Stop&) {
    out.stopped = true;
  }
  out.accounted = root.accounted;
  out.unexplored = root.unexplored;
  out.nodes = root.nodes;
  if (out.stopped || last < 1) return out;

  const unsigned workers = std::max(1u, options.threads);
  std::vector<Search<Num, Acc>> searches;
  searches.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) searches.emplace_back(n, upper, lower, ceil_t, floor_t, pool);
  std::vector<char> stopped(workers, 0);
  const auto work = [&](unsigned w) {
    Search<Num, Acc>& s = searches[w];
    for (Num a(1 + w); a <= last; a += workers) {
      try {
        s.visit(1, a, Num(1));
      } catch (const Stop&) {
        stopped[w] = 1;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool_threads;
    for (unsigned w = 0; w < workers; ++w) pool_threads.emplace_back(work, w);
    for (auto& t : pool_threads) t.join();
  }
  for (unsigned w = 0; w < workers; ++w) {
    out.accounted.merge(searches[w].accounted);
    out.unexplored.merge(searches[w].unexplored);
    out.nodes += searches[w].nodes;
    out.stopped = out.stopped || stopped[w];
  }
  return out;
}

struct Plan {
  bool upper = false;
  bool lower = false;
  DeviationThresholds thresholds;
  bool native = false;
};

Plan make_plan(unsigned n, long double epsilon, Side side) {
  if (n < 1) throw InvalidInput("deviation measure needs n >= 1");
  if (!(epsilon > 0)) throw OutOfDomain("epsilon must be positive");
  if (side == Side::lower && epsilon > constants().levy) {
    throw OutOfDomain("the lower tail needs epsilon <= b");
  }
  Plan plan;
  plan.upper = side != Side::lower;
  plan.lower = side != Side::upper;
  plan.thresholds = deviation_thresholds(n, epsilon);
  plan.native = (!plan.upper || plan.thresholds.upper < from_u64(kNativeLimit)) &&
                (!plan.lower || plan.thresholds.lower < from_u64(kNativeLimit));
  return plan;
}

void attach_bounds(DeviationMeasurement& m) {
  const Side tail = m.side == Side::lower ? Side::lower : Side::upper;
  try {
    const LowerBoundConstant c = lower_bound_constant(m.epsilon, tail);
    m.constant = c.integer_constant;
    m.bound_lower = std::exp(m.n * c.bound);
  } catch (const OutOfDomain&) {
    m.constant = 0;
    m.bound_lower = 0;
  }
}

DeviationMeasurement base_measurement(unsigned n, long double epsilon, Side side,
                                      MeasureMethod method) {
  DeviationMeasurement m;
  m.n = n;
  m.epsilon = epsilon;
  m.side = side;
  m.method = method;
  attach_bounds(m);
  return m;
}

std::string search_name(Side side, unsigned n) {
  return to_string(side) + " deviation search at n = " + std::to_string(n);
}

// Wilson score interval.
Bracket wilson(u64 hits, u64 samples) {
  const long double N = static_cast<long double>(samples);
  const long double p = hits / N;
  const long double z2 = kWilsonZ * kWilsonZ;
  const long double denom = 1 + z2 / N;
  const long double centre = (p + z2 / (2 * N)) / denom;
  const long double half = kWilsonZ * std::sqrt(p * (1 - p) / N + z2 / (4 * N * N)) / denom;
  return {std::max(0.0L, centre - half), std::min(1.0L, centre + half)};
}

}  // namespace

std::string to_string(MeasureMethod method) {
  switch (method) {
    case MeasureMethod::exact: return "exact";
    case MeasureMethod::certified: return "certified";
    case MeasureMethod::monte_carlo: return "mc";
    case MeasureMethod::automatic: return "auto";
  }
  return "auto";
}

MeasureMethod parse_measure_method(const std::string& text) {
  if (text == "exact") return MeasureMethod::exact;
  if (text == "certified") return MeasureMethod::certified;
  if (text == "mc" || text == "monte-carlo") return MeasureMethod::monte_carlo;
  if (text == "auto") return MeasureMethod::automatic;
  throw InvalidInput("unknown measure method '" + text + "'");
}

std::string to_string(FitKind kind) {
  switch (kind) {
    case FitKind::regression: return "regression";
    case FitKind::upper_envelope: return "upper-envelope";
    case FitKind::lower_envelope: return "lower-envelope";
  }
  return "regression";
}

long double DeviationMeasurement::rate() const {
  if (!(estimate > 0)) return -std::numeric_limits<long double>::infinity();
  return std::log(estimate) / n;
}

DeviationThresholds deviation_thresholds(unsigned n, long double epsilon) {
  DeviationThresholds t;
  t.upper = exp_levy_bounds(n, static_cast<double>(epsilon)).ceil;
  // eps == b stands for the exact constant: e^0 = 1.
  t.lower = epsilon == constants().levy ? BigInt(1)
                                        : exp_levy_bounds(n, -static_cast<double>(epsilon)).floor;
  return t;
}

DeviationMeasurement measure_exact(unsigned n, long double epsilon, Side side,
                                   const SearchOptions& options) {
  const Plan plan = make_plan(n, epsilon, side);
  DeviationMeasurement m = base_measurement(n, epsilon, side, MeasureMethod::exact);
  const auto finish = [&](auto outcome) {
    if (outcome.stopped) {
      throw BudgetExceeded(search_name(side, n) + " exceeded its node budget",
                           outcome.accounted.sum.total(), outcome.unexplored.sum.total(),
                           outcome.nodes);
    }
    m.exact_value = outcome.accounted.sum.total();
    m.estimate = to_real(*m.exact_value);
    m.ci_lower = m.ci_upper = m.estimate;
    m.nodes = outcome.nodes;
  };
  if (plan.native) {
    finish(run_search<u64, ExactAcc>(n, plan.upper, plan.lower,
                                     plan.upper ? to_u64(plan.thresholds.upper) : 0,
                                     plan.lower ? to_u64(plan.thresholds.lower) : 0, options));
  } else {
    finish(run_search<BigInt, ExactAcc>(n, plan.upper, plan.lower, plan.thresholds.upper,
                                        plan.thresholds.lower, options));
  }
  return m;
}

DeviationMeasurement measure_upper_tail_exact(unsigned n, long double epsilon,
                                              const SearchOptions& options) {
  return measure_exact(n, epsilon, Side::upper, options);
}

DeviationMeasurement measure_lower_tail_exact(unsigned n, long double epsilon,
                                              const SearchOptions& options) {
  return measure_exact(n, epsilon, Side::lower, options);
}

DeviationMeasurement measure_two_sided_exact(unsigned n, long double epsilon,
                                             const SearchOptions& options) {
  return measure_exact(n, epsilon, Side::two_sided, options);
}

DeviationMeasurement measure_certified(unsigned n, long double epsilon, Side side,
                                       const SearchOptions& options) {
  const Plan plan = make_plan(n, epsilon, side);
  if (!plan.native) throw InvalidInput("certified search needs thresholds below 2^62");
  const auto outcome = run_search<u64, FloatAcc>(
      n, plan.upper, plan.lower, plan.upper ? to_u64(plan.thresholds.upper) : 0,
      plan.lower ? to_u64(plan.thresholds.lower) : 0, options);
  if (outcome.stopped) {
    const long double lo = std::max(0.0L, outcome.accounted.lower());
    const long double rest = outcome.unexplored.upper() + outcome.accounted.slack() * 2;
    throw BudgetExceeded(search_name(side, n) + " exceeded its node budget", exact_rational(lo),
                         exact_rational(rest), outcome.nodes);
  }
  DeviationMeasurement m = base_measurement(n, epsilon, side, MeasureMethod::certified);
  m.estimate = outcome.accounted.sum;
  m.ci_lower = std::max(0.0L, outcome.accounted.lower());
  m.ci_upper = outcome.accounted.upper();
  m.nodes = outcome.nodes;
  return m;
}

DeviationMeasurement partial_measurement(unsigned n, long double epsilon, Side side,
                                         MeasureMethod method, const BudgetExceeded& error) {
  DeviationMeasurement m = base_measurement(n, epsilon, side, method);
  m.complete = false;
  if (method == MeasureMethod::exact) m.exact_value = error.accounted();
  m.ci_lower = to_real(error.accounted());
  m.ci_upper = std::min(1.0L, to_real(Rational(error.accounted() + error.unexplored())));
  m.estimate = m.ci_lower;
  m.nodes = error.nodes();
  return m;
}

DeviationMeasurement measure_mc(unsigned n, long double epsilon, Side side, u64 samples,
                                const CounterRng& rng, unsigned threads) {
  if (samples == 0) throw InvalidInput("Monte Carlo measure needs at least one sample");
  const Plan plan = make_plan(n, epsilon, side);
  const unsigned workers = std::max(1u, threads);
  std::vector<u64> hits(workers, 0);
  const auto work = [&](unsigned w) {
    for (u64 i = w; i < samples; i += workers) {
      const LebesgueSample s = sample_lebesgue(n, rng.substream(i));
      const BigInt& q = s.convergents.q;
      if ((plan.upper && q >= plan.thresholds.upper) || (plan.lower && q <= plan.thresholds.lower)) {
        ++hits[w];
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  DeviationMeasurement m = base_measurement(n, epsilon, side, MeasureMethod::monte_carlo);
  m.samples = samples;
  for (const u64 h : hits) m.hits += h;
  m.estimate = static_cast<long double>(m.hits) / samples;
  const Bracket ci = wilson(m.hits, samples);
  m.ci_lower = ci.lower;
  m.ci_upper = ci.upper;
  return m;
}

MarkovBound markov_upper_bound(unsigned n, long double epsilon, Side side,
                               const PressureConfig& config) {
  if (n < 1) throw InvalidInput("Markov bound needs n >= 1");
  if (!(epsilon > 0)) throw OutOfDomain("epsilon must be positive");
  const long double b = constants().levy;
  PressureConfig cfg = config;
  cfg.level = n;
  const auto log_expectation = [&](long double theta) {
    return std::log(pressure_partial(theta, cfg).expectation.upper);
  };
  MarkovBound out;
  if (side == Side::upper) {
    const auto f = [&](long double t) { return log_expectation(1 - t / 2) - t * n * (b + epsilon); };
    const Minimum m = golden_section(f, 0.0L, 1.0L - cfg.delta, cfg.search_tolerance);
    out.t = m.x;
    out.log_bound = std::min(0.0L, m.value);
  } else if (side == Side::lower) {
    if (epsilon >= b) {
      out.log_bound = -std::numeric_limits<long double>::infinity();
      return out;
    }
    const auto f = [&](long double t) { return log_expectation(1 + t / 2) + t * n * (b - epsilon); };
    const Minimum m = golden_section(f, 0.0L, cfg.t_max, cfg.search_tolerance);
    out.t = m.x;
    out.log_bound = std::min(0.0L, m.value);
  } else {
    const MarkovBound up = markov_upper_bound(n, epsilon, Side::upper, config);
    const MarkovBound lo = markov_upper_bound(n, epsilon, Side::lower, config);
    out.t = up.t;
    out.log_bound = std::min(0.0L, std::log(std::exp(up.log_bound) + std::exp(lo.log_bound)));
  }
  return out;
}

DeviationMeasurement measure(unsigned n, long double epsilon, Side side,
                             const DeviationConfig& config) {
  const SearchOptions exact_options{config.exact_budget, config.threads};
  const SearchOptions certified_options{config.certified_budget, config.threads};
  const auto mc = [&] {
    const CounterRng rng = CounterRng(config.seed).named("deviation-" + to_string(side)).substream(n);
    return measure_mc(n, epsilon, side, config.samples, rng, config.threads);
  };
  DeviationMeasurement m;
  switch (config.method) {
    case MeasureMethod::exact: m = measure_exact(n, epsilon, side, exact_options); break;
    case MeasureMethod::certified: m = measure_certified(n, epsilon, side, certified_options); break;
    case MeasureMethod::monte_carlo: m = mc(); break;
    case MeasureMethod::automatic:
      try {
        m = measure_exact(n, epsilon, side, exact_options);
      } catch (const BudgetExceeded&) {
        try {
          m = measure_certified(n, epsilon, side, certified_options);
        } catch (const BudgetExceeded&) {
          m = mc();
        } catch (const InvalidInput&) {
          m = mc();
        }
      }
      break;
  }
  if (config.markov_bounds) {
    m.bound_upper = std::exp(markov_upper_bound(n, epsilon, side, config.pressure).log_bound);
  }
  return m;
}

DecayFit fit_decay(const std::vector<DeviationMeasurement>& points) {
  std::vector<std::pair<long double, long double>> xy;
  for (const auto& m : points) {
    if (m.estimate > 0) xy.emplace_back(m.n, std::log(m.estimate));
  }
  if (xy.size() < 3) throw InvalidInput("a decay fit needs at least 3 positive measurements");
  long double sx = 0, sy = 0;
  for (const auto& [x, y] : xy) {
    sx += x;
    sy += y;
  }
  const long double mx = sx / xy.size();
  const long double my = sy / xy.size();
  long double sxx = 0, sxy = 0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0) throw InvalidInput("a decay fit needs at least two distinct levels");
  DecayFit fit;
  fit.side = points.front().side;
  fit.epsilon = points.front().epsilon;
  fit.points = xy.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_min = fit.n_max = static_cast<unsigned>(xy.front().first);
  for (const auto& [x, y] : xy) {
    fit.n_min = std::min(fit.n_min, static_cast<unsigned>(x));
    fit.n_max = std::max(fit.n_max, static_cast<unsigned>(x));
    fit.residual = std::max(fit.residual, std::fabs(y - (fit.intercept + fit.slope * x)));
  }
  return fit;
}

DecaySeries decay_series(long double epsilon, Side side, const std::vector<unsigned>& n_list,
                         const DeviationConfig& config) {
  if (n_list.size() < 3) throw InvalidInput("a decay series needs at least 3 levels");
  DecaySeries out;
  for (const unsigned n : n_list) {
    out.points.push_back(measure(n, epsilon, side, config));
    if (!(out.points.back().estimate > 0)) out.excluded.push_back(n);
  }
  out.fit = fit_decay(out.points);
  try {
    out.rate_lower_bound =
        lower_bound_constant(epsilon, side == Side::lower ? Side::lower : Side::upper).bound;
  } catch (const OutOfDomain&) {
    out.rate_lower_bound = std::numeric_limits<long double>::quiet_NaN();
  }
  return out;
}

long double EnvelopeFit::A() const { return std::exp(upper.intercept); }
long double EnvelopeFit::B() const { return std::exp(lower.intercept); }

bool EnvelopeFit::holds(const DeviationMeasurement& m) const {
  if (!(m.estimate > 0)) return false;
  const long double y = std::log(m.estimate);
  const long double slack = 1e-12L * (1 + std::fabs(y));
  return y <= upper.intercept + upper.slope * m.n + slack &&
         y >= lower.intercept + lower.slope * m.n - slack;
}

EnvelopeFit fit_envelope_constants(const std::vector<DeviationMeasurement>& points) {
  const DecayFit base = fit_decay(points);
  EnvelopeFit out;
  out.upper = out.lower = base;
  out.upper.kind = FitKind::upper_envelope;
  out.lower.kind = FitKind::lower_envelope;
  out.upper.intercept = -std::numeric_limits<long double>::infinity();
  out.lower.intercept = std::numeric_limits<long double>::infinity();
  for (const auto& m : points) {
    if (!(m.estimate > 0)) continue;
    const long double shifted = std::log(m.estimate) - base.slope * m.n;
    out.upper.intercept = std::max(out.upper.intercept, shifted);
    out.lower.intercept = std::min(out.lower.intercept, shifted);
  }
  out.upper.residual = out.upper.intercept - base.intercept;
  out.lower.residual = base.intercept - out.lower.intercept;
  return out;
}

EnvelopeFit fit_envelope_constants(long double epsilon, const std::vector<unsigned>& n_list,
                                   const DeviationConfig& config) {
  return fit_envelope_constants(decay_series(epsilon, Side::two_sided, n_list, config).points);
}

namespace {

// Convergents indexed from -1: p[k + 1] = p_k.
struct ConvergentTable {
  std::vector<BigInt> p{1, 0};
  std::vector<BigInt> q{0, 1};

  void push(const BigInt& digit) {
    const std::size_t k = p.size();
    p.push_back(digit * p[k - 1] + p[k - 2]);
    q.push_back(digit * q[k - 1] + q[k - 2]);
  }
  const BigInt& P(long k) const { return p[static_cast<std::size_t>(k + 1)]; }
  const BigInt& Q(long k) const { return q[static_cast<std::size_t>(k + 1)]; }
};

class LogSum {
 public:
  explicit LogSum(unsigned bits) : bits_(bits), total_(bits), term_(bits) {
    mpfr_set_zero(total_.get(), 1);
  }
  void add_log(const BigInt& v, int sign) {
    mpfr_set_z(term_.get(), v.get_mpz_t(), MPFR_RNDN);
    mpfr_log(term_.get(), term_.get(), MPFR_RNDN);
    if (sign > 0) {
      mpfr_add(total_.get(), total_.get(), term_.get(), MPFR_RNDN);
    } else {
      mpfr_sub(total_.get(), total_.get(), term_.get(), MPFR_RNDN);
    }
  }
  // Adds log(num / den), rounding the quotient first.
  void add_log_ratio(const BigInt& num, const BigInt& den) {
    detail::MpfrValue d(bits_);
    mpfr_set_z(term_.get(), num.get_mpz_t(), MPFR_RNDN);
    mpfr_set_z(d.get(), den.get_mpz_t(), MPFR_RNDN);
    mpfr_div(term_.get(), term_.get(), d.get(), MPFR_RNDN);
    mpfr_log(term_.get(), term_.get(), MPFR_RNDN);
    mpfr_add(total_.get(), total_.get(), term_.get(), MPFR_RNDN);
  }
  long double value() const { return mpfr_get_ld(total_.get(), MPFR_RNDN); }

 private:
  unsigned bits_;
  detail::MpfrValue total_;
  detail::MpfrValue term_;
};

// x lies in the closed level-(n+1) cylinder described by `c`.
OrbitStatistics orbit_core(const Rational& x, const ConvergentTable& c, std::size_t n,
                           unsigned precision_bits, bool exact_product) {
  const unsigned bits = std::max(precision_bits, kWorkingPrecision) + 32;
  const BigInt& N = x.get_num();
  const BigInt& D = x.get_den();
  const long ln = static_cast<long>(n);
  OrbitStatistics s;
  s.n = n;
  s.q_n = c.Q(ln);
  s.q_next = c.Q(ln + 1);

  // T^k x = |p_k D - q_k N| / |q_{k-1} N - p_{k-1} D|.
  LogSum orbit(bits);
  Rational product(1);
  for (long k = 0; k < ln; ++k) {
    const BigInt num = abs(BigInt(c.P(k) * D - c.Q(k) * N));
    const BigInt den = abs(BigInt(c.Q(k - 1) * N - c.P(k - 1) * D));
    if (sgn(num) == 0) throw InvalidInput("orbit reaches 0 before level n");
    orbit.add_log_ratio(num, den);
    if (exact_product) product *= fraction(num, den);
  }
  const BigInt gap_num = abs(BigInt(c.Q(ln - 1) * N - c.P(ln - 1) * D));
  LogSum identity(bits);
  identity.add_log(gap_num, +1);
  identity.add_log(D, -1);
  const long double scale = -2.0L / n;
  s.lyapunov = scale * orbit.value();
  s.lyapunov_identity = scale * identity.value();
  s.identity_gap = std::fabs(s.lyapunov - s.lyapunov_identity) / std::fabs(s.lyapunov_identity);
  if (exact_product) s.identity_exact = product == fraction(gap_num, D);

  const BigInt approx_num = abs(BigInt(c.Q(ln) * N - c.P(ln) * D));
  if (sgn(approx_num) == 0) throw InvalidInput("x equals its level-n convergent");
  LogSum approx(bits);
  approx.add_log(approx_num, +1);
  approx.add_log(BigInt(c.Q(ln) * D), -1);
  s.approx_rate = approx.value() / n;

  LogSum lebesgue(bits);
  lebesgue.add_log(BigInt(c.Q(ln) * (c.Q(ln) + c.Q(ln - 1))), -1);
  s.cylinder_rate_lebesgue = lebesgue.value() / n;

  Rational a = fraction(c.P(ln), c.Q(ln));
  Rational b = fraction(BigInt(c.P(ln) + c.P(ln - 1)), BigInt(c.Q(ln) + c.Q(ln - 1)));
  if (b < a) std::swap(a, b);
  s.cylinder_rate_gauss = log_gauss_measure(a, b, bits) / n;
  return s;
}

}  // namespace

OrbitStatistics orbit_statistics(const PrecisionReal& x, std::size_t n, unsigned precision_bits) {
  if (n < 1) throw InvalidInput("orbit statistics need n >= 1");
  DigitStream stream(x);
  ConvergentTable table;
  for (std::size_t k = 0; k <= n; ++k) {
    auto digit = stream.next();
    if (!digit) throw InvalidInput("x has fewer than n + 1 partial quotients");
    table.push(*digit);
  }
  if (x.is_rational()) return orbit_core(x.value(), table, n, precision_bits, true);
  // A rational representative close enough that every orbit point keeps
  // about 60 correct bits.
  const BigInt& q_next = table.Q(static_cast<long>(n) + 1);
  BigInt den = q_next * q_next;
  mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), 64 + precision_bits);
  stream.refine_to(fraction(BigInt(1), den));
  return orbit_core(stream.point().lower, table, n, precision_bits, false);
}

OrbitStatistics orbit_statistics(const PartialQuotients& digits, std::size_t n,
                                 unsigned precision_bits) {
  if (n < 1) throw InvalidInput("orbit statistics need n >= 1");
  if (digits.size() < n + 1) throw InvalidInput("orbit statistics need n + 1 partial quotients");
  ConvergentTable table;
  for (const BigInt& d : digits.digits()) table.push(d);
  const long m = static_cast<long>(digits.size());
  return orbit_core(fraction(table.P(m), table.Q(m)), table, n, precision_bits,
                    digits.size() <= 4096);
}

DerivativeIdentity derivative_identity(const Rational& x, std::size_t n) {
  if (n < 1) throw InvalidInput("derivative identity needs n >= 1");
  if (sgn(x) <= 0 || x >= 1) throw InvalidInput("derivative identity needs 0 < x < 1");
  const PartialQuotients digits = expand_rational(x.get_num(), x.get_den());
  if (digits.size() < n) throw InvalidInput("x has fewer than n partial quotients");
  DerivativeIdentity out;
  out.orbit_product = 1;
  Rational y = x;
  for (std::size_t k = 0; k < n; ++k) {
    out.orbit_product *= y;
    const Rational inv = 1 / y;
    y = inv - Rational(floor_div(inv.get_num(), inv.get_den()));
  }
  Continuant c;
  for (std::size_t k = 0; k + 1 < n; ++k) c.push(digits[k]);
  out.convergent_gap = abs(Rational(c.q * x - c.p));
  return out;
}

}  // namespace cfdev
