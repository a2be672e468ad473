#include "cfdev/pressure.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "cfdev/constants.hpp"
#include "cfdev/errors.hpp"

namespace cfdev {

namespace {

constexpr long double kZ99 = 2.5758293035489004L;

// Relative outward slack per recursion step: covers powl and the rounding of
// at most A + 1 positive additions.
long double step_slack(unsigned long A) {
  return (static_cast<long double>(A) + 64.0L) * 4.0L * LDBL_EPSILON;
}

void check_pressure_args(long double theta, unsigned n, unsigned long A) {
  if (!(theta > 0.5L)) throw OutOfDomain("pressure is defined only for theta > 1/2");
  if (n < 1) throw InvalidInput("pressure needs level n >= 1");
  if (A < 2) throw InvalidInput("pressure needs truncation A >= 2");
}

long double pow_count(unsigned long A, unsigned n) {
  return std::pow(static_cast<long double>(A), static_cast<long double>(n));
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------- enumeration

struct EnumerationSums {
  std::vector<CompensatedSum> level;  // level[k] = sum of q_k^{-2 theta}, k = 1..n
  CompensatedSum expectation;
  std::uint64_t leaves = 0;
};

void enumerate_subtree(long double theta, unsigned n, unsigned long A, unsigned depth,
                       long double q, long double q_prev, EnumerationSums& out) {
  const long double w = std::pow(q, -2.0L * theta);
  out.level[depth].add(w);
  if (depth == n) {
    out.expectation.add(w / (1.0L + q_prev / q));
    ++out.leaves;
    return;
  }
  for (unsigned long a = 1; a <= A; ++a) {
    enumerate_subtree(theta, n, A, depth + 1, static_cast<long double>(a) * q + q_prev, q, out);
  }
}

void pressure_enumerate(PressureEstimate& est, const PressureConfig& cfg) {
  const long double theta = est.theta;
  const unsigned n = est.level_n;
  const unsigned long A = est.truncation_A;
  if (pow_count(A, n) > static_cast<long double>(cfg.budget)) {
    throw BudgetExceeded("pressure enumeration needs A^n leaves beyond the budget", Rational(0),
                         Rational(1), 0);
  }
  std::vector<EnumerationSums> parts(A);
  for (auto& p : parts) p.level.resize(n + 1);
  parallel_for(A, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      enumerate_subtree(theta, n, A, 1, static_cast<long double>(i + 1), 1.0L, parts[i]);
    }
  });

  std::vector<long double> W(n + 1, 0.0L);
  W[0] = 1.0L;
  CompensatedSum expectation;
  std::vector<CompensatedSum> levels(n + 1);
  for (const auto& p : parts) {
    for (unsigned k = 1; k <= n; ++k) levels[k] += p.level[k];
    expectation += p.expectation;
    est.retained_terms += p.leaves;
  }
  for (unsigned k = 1; k <= n; ++k) W[k] = levels[k].value();

  // Every sequence with a digit above A factors at its first such digit:
  // q(w a v) >= q(w) a q(v), so sum_{a > A} contributes at most Z W_{k-1} U_{m-k}.
  const long double Z = std::pow(static_cast<long double>(A), 1.0L - 2.0L * theta) /
                        (2.0L * theta - 1.0L);
  std::vector<long double> U(n + 1, 0.0L);
  U[0] = 1.0L;
  for (unsigned m = 1; m <= n; ++m) {
    long double acc = 0;
    for (unsigned k = 1; k <= m; ++k) acc += W[k - 1] * U[m - k];
    U[m] = W[m] + Z * acc;
  }
  // Lower tail: last digit a > A after a retained prefix (q, q'), using
  // a q + q' <= (a + 1) q, 1 + q/q_n <= (A + 2)/(A + 1) and the integral test.
  const long double leaf_tail = W[n - 1] *
                                std::pow(static_cast<long double>(A) + 2, 1.0L - 2.0L * theta) /
                                (2.0L * theta - 1.0L);
  const long double leaf_share = (static_cast<long double>(A) + 1) / (static_cast<long double>(A) + 2);
  const long double slack = step_slack(A) * n;
  est.sum = {(W[n] + leaf_tail) * (1 - slack), U[n] * (1 + slack)};
  const long double e = expectation.value();
  est.expectation = {(e + leaf_tail * leaf_share) * (1 - slack), (e + (U[n] - W[n])) * (1 + slack)};
}

// ------------------------------------------------------------------- transfer

// Lower and upper step envelopes of the two iterated functions (sum and
// expectation) on M equal cells of [0, 1].
struct Envelopes {
  std::vector<long double> s_lo, s_hi, e_lo, e_hi;

  explicit Envelopes(std::size_t m) : s_lo(m), s_hi(m), e_lo(m), e_hi(m) {}
};

// Cells met by the image 1/(a + [J/M, (J+1)/M]) of cell J under branch a.
struct BranchRanges {
  std::vector<std::uint32_t> first;  // index J * A + (a - 1)
  std::vector<std::uint32_t> last;
};

constexpr long double kRangeCacheLimit = 8.0e6L;

std::size_t first_cell(long double u0, unsigned M) {
  const long double x = std::ceil(u0 * M - 1e-9L) - 1.0L;
  return x <= 0 ? 0 : std::min<std::size_t>(M - 1, static_cast<std::size_t>(x));
}

std::size_t last_cell(long double u1, unsigned M) {
  const long double x = std::floor(u1 * M + 1e-9L);
  return x <= 0 ? 0 : std::min<std::size_t>(M - 1, static_cast<std::size_t>(x));
}

std::shared_ptr<const BranchRanges> branch_ranges(unsigned long A, unsigned M) {
  static std::mutex mutex;
  static std::map<std::pair<unsigned long, unsigned>, std::shared_ptr<const BranchRanges>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(A, M);
  if (const auto it = cache.find(key); it != cache.end()) return it->second;
  auto r = std::make_shared<BranchRanges>();
  r->first.resize(static_cast<std::size_t>(M) * A);
  r->last.resize(static_cast<std::size_t>(M) * A);
  for (std::size_t J = 0; J < M; ++J) {
    const long double y0 = static_cast<long double>(J) / M;
    const long double y1 = static_cast<long double>(J + 1) / M;
    for (unsigned long a = 1; a <= A; ++a) {
      r->first[J * A + a - 1] = static_cast<std::uint32_t>(first_cell(1.0L / (a + y1), M));
      r->last[J * A + a - 1] = static_cast<std::uint32_t>(last_cell(1.0L / (a + y0), M));
    }
  }
  if (cache.size() >= 8) cache.clear();
  cache.emplace(key, r);
  return r;
}

class TransferRoute {
 public:
  TransferRoute(long double theta, unsigned long A, unsigned cells, unsigned threads)
      : theta_(theta), A_(A), M_(cells), threads_(threads), slack_(step_slack(A)) {}

  // (L^n f)(0) for f = 1 and f = 1/(1 + y), where
  // (L g)(y) = sum_a (a + y)^{-2 theta} g(1/(a + y)).
  void run(unsigned n, Bracket& sum, Bracket& expectation) {
    if (n == 1) {
      point_exact(sum, expectation);
      return;
    }
    const bool cached = static_cast<long double>(M_ + 1) * A_ <= kRangeCacheLimit;
    if (cached) {
      ranges_ = branch_ranges(A_, M_);
      weights_.resize(static_cast<std::size_t>(M_ + 1) * A_);
      parallel_for(M_ + 1, threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const long double y = static_cast<long double>(j) / M_;
          for (unsigned long a = 1; a <= A_; ++a) {
            weights_[j * A_ + (a - 1)] = std::pow(a + y, -2.0L * theta_);
          }
        }
      });
    }
    Envelopes g(M_);
    for (unsigned j = 0; j < M_; ++j) {
      g.s_lo[j] = g.s_hi[j] = 1.0L;
      g.e_lo[j] = 1.0L / (1.0L + static_cast<long double>(j + 1) / M_);
      g.e_hi[j] = 1.0L / (1.0L + static_cast<long double>(j) / M_);
    }
    for (unsigned step = 1; step < n; ++step) g = apply(g);
    point(g, sum, expectation);
  }

 private:
  long double weight(unsigned long a, std::size_t j) const {
    if (!weights_.empty()) return weights_[j * A_ + (a - 1)];
    return std::pow(a + static_cast<long double>(j) / M_, -2.0L * theta_);
  }

  // Sum over a > A of (a + y)^{-2 theta}, bracketed by integrals.
  long double tail_lower(long double y) const {
    return std::pow(A_ + 1 + y, 1.0L - 2.0L * theta_) / (2.0L * theta_ - 1.0L);
  }
  long double tail_upper(long double y) const {
    return std::pow(A_ + y, 1.0L - 2.0L * theta_) / (2.0L * theta_ - 1.0L);
  }

  // Envelope extremes over the cells meeting [0, 1/(A+1)], where all tail
  // arguments lie.
  struct Extremes {
    long double s_min, s_max, e_min, e_max;
  };

  Extremes scan(const Envelopes& g, std::size_t j0, std::size_t j1) const {
    Extremes x{g.s_lo[j0], g.s_hi[j0], g.e_lo[j0], g.e_hi[j0]};
    for (std::size_t j = j0 + 1; j <= j1; ++j) {
      x.s_min = std::min(x.s_min, g.s_lo[j]);
      x.s_max = std::max(x.s_max, g.s_hi[j]);
      x.e_min = std::min(x.e_min, g.e_lo[j]);
      x.e_max = std::max(x.e_max, g.e_hi[j]);
    }
    return x;
  }

  Envelopes apply(const Envelopes& g) const {
    Envelopes out(M_);
    const Extremes tail = scan(g, 0, last_cell(1.0L / (A_ + 1), M_));
    const BranchRanges* ranges = ranges_.get();
    parallel_for(M_, threads_, [&](std::size_t begin, std::size_t end) {
      for (std::size_t J = begin; J < end; ++J) {
        const long double y0 = static_cast<long double>(J) / M_;
        const long double y1 = static_cast<long double>(J + 1) / M_;
        long double s_lo = 0, s_hi = 0, e_lo = 0, e_hi = 0;
        for (unsigned long a = 1; a <= A_; ++a) {
          std::size_t j0, j1;
          if (ranges) {
            j0 = ranges->first[J * A_ + a - 1];
            j1 = ranges->last[J * A_ + a - 1];
          } else {
            j0 = first_cell(1.0L / (a + y1), M_);
            j1 = last_cell(1.0L / (a + y0), M_);
          }
          const Extremes x = scan(g, j0, j1);
          const long double w_lo = weight(a, J + 1);
          const long double w_hi = weight(a, J);
          s_lo += w_lo * x.s_min;
          s_hi += w_hi * x.s_max;
          e_lo += w_lo * x.e_min;
          e_hi += w_hi * x.e_max;
        }
        const long double t_lo = tail_lower(y1);
        const long double t_hi = tail_upper(y0);
        out.s_lo[J] = (s_lo + t_lo * tail.s_min) * (1 - slack_);
        out.s_hi[J] = (s_hi + t_hi * tail.s_max) * (1 + slack_);
        out.e_lo[J] = (e_lo + t_lo * tail.e_min) * (1 - slack_);
        out.e_hi[J] = (e_hi + t_hi * tail.e_max) * (1 + slack_);
      }
    });
    return out;
  }

  void point(const Envelopes& g, Bracket& sum, Bracket& expectation) const {
    CompensatedSum s_lo, s_hi, e_lo, e_hi;
    for (unsigned long a = 1; a <= A_; ++a) {
      const long double u = 1.0L / a;
      const Extremes x = scan(g, first_cell(u, M_), last_cell(u, M_));
      const long double w = std::pow(static_cast<long double>(a), -2.0L * theta_);
      s_lo.add(w * x.s_min);
      s_hi.add(w * x.s_max);
      e_lo.add(w * x.e_min);
      e_hi.add(w * x.e_max);
    }
    const Extremes tail = scan(g, 0, last_cell(1.0L / (A_ + 1), M_));
    s_lo.add(tail_lower(0) * tail.s_min);
    s_hi.add(tail_upper(0) * tail.s_max);
    e_lo.add(tail_lower(0) * tail.e_min);
    e_hi.add(tail_upper(0) * tail.e_max);
    sum = {s_lo.value() * (1 - slack_), s_hi.value() * (1 + slack_)};
    expectation = {e_lo.value() * (1 - slack_), e_hi.value() * (1 + slack_)};
  }

  // Level one: f is known exactly at every point 1/a.
  void point_exact(Bracket& sum, Bracket& expectation) const {
    CompensatedSum s;
    CompensatedSum e;
    for (unsigned long a = 1; a <= A_; ++a) {
      const long double w = std::pow(static_cast<long double>(a), -2.0L * theta_);
      s.add(w);
      e.add(w * a / (a + 1));
    }
    const long double e_tail_min = static_cast<long double>(A_ + 1) / (A_ + 2);
    sum = {(s.value() + tail_lower(0)) * (1 - slack_), (s.value() + tail_upper(0)) * (1 + slack_)};
    expectation = {(e.value() + tail_lower(0) * e_tail_min) * (1 - slack_),
                   (e.value() + tail_upper(0)) * (1 + slack_)};
  }

  long double theta_;
  unsigned long A_;
  unsigned M_;
  unsigned threads_;
  long double slack_;
  std::shared_ptr<const BranchRanges> ranges_;
  std::vector<long double> weights_;
};

void pressure_transfer(PressureEstimate& est, const PressureConfig& cfg) {
  if (cfg.cells < 16) throw InvalidInput("transfer route needs at least 16 cells");
  TransferRoute route(est.theta, est.truncation_A, cfg.cells, cfg.threads);
  route.run(est.level_n, est.sum, est.expectation);
  est.retained_terms = static_cast<std::uint64_t>(est.level_n) * cfg.cells * est.truncation_A;
}

Bracket log_rate(const Bracket& b, unsigned n) {
  const long double inv = 1.0L / n;
  return {std::log(b.lower) * inv, std::log(b.upper) * inv};
}

}  // namespace

std::string to_string(PressureMethod method) {
  switch (method) {
    case PressureMethod::automatic: return "auto";
    case PressureMethod::enumerate: return "enumerate";
    case PressureMethod::transfer: return "transfer";
  }
  return "auto";
}

PressureMethod parse_pressure_method(const std::string& text) {
  if (text == "auto") return PressureMethod::automatic;
  if (text == "enumerate") return PressureMethod::enumerate;
  if (text == "transfer") return PressureMethod::transfer;
  throw InvalidInput("unknown pressure method '" + text + "'");
}

Bracket PressureEstimate::sum_rate() const { return log_rate(sum, level_n); }
Bracket PressureEstimate::expectation_rate() const { return log_rate(expectation, level_n); }

PressureEstimate pressure_partial(long double theta, const PressureConfig& config) {
  check_pressure_args(theta, config.level, config.truncation);
  PressureEstimate est;
  est.theta = theta;
  est.level_n = config.level;
  est.truncation_A = config.truncation;
  est.precision_bits = config.precision_bits;
  est.threads = config.threads;
  est.method = config.method;
  if (est.method == PressureMethod::automatic) {
    est.method = pow_count(config.truncation, config.level) <=
                         static_cast<long double>(config.enumeration_limit)
                     ? PressureMethod::enumerate
                     : PressureMethod::transfer;
  }
  if (est.method == PressureMethod::enumerate) {
    pressure_enumerate(est, config);
  } else {
    pressure_transfer(est, config);
  }
  est.lower = est.expectation_rate().lower;
  est.upper = est.sum_rate().upper;
  return est;
}

PressureEstimate pressure_partial(long double theta, unsigned n, unsigned long A,
                                  PressureMethod method) {
  PressureConfig cfg;
  cfg.level = n;
  cfg.truncation = A;
  cfg.method = method;
  return pressure_partial(theta, cfg);
}

ExpectationEstimate expectation_qn(long double theta, unsigned n, ExpectationMethod method,
                                   std::uint64_t mc_samples, const CounterRng& rng,
                                   const PressureConfig& config) {
  if (!(theta < 0.5L)) throw OutOfDomain("E(q_n^{2 theta}) is finite only for theta < 1/2");
  if (n < 1) throw InvalidInput("expectation needs n >= 1");
  ExpectationEstimate out;
  out.theta = theta;
  out.level_n = n;
  out.method = method;
  if (method == ExpectationMethod::exact_cylinder) {
    PressureConfig cfg = config;
    cfg.level = n;
    const PressureEstimate p = pressure_partial(1.0L - theta, cfg);
    out.value_lower = p.expectation.lower;
    out.value_upper = p.expectation.upper;
    out.estimate = p.expectation.mid();
    return out;
  }
  if (mc_samples < 2) throw InvalidInput("Monte Carlo expectation needs at least 2 samples");
  std::vector<long double> values(mc_samples);
  parallel_for(mc_samples, config.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const LebesgueSample s = sample_lebesgue(n, rng.substream(i));
      values[i] = std::exp(2.0L * theta * log_of(s.convergents.q, config.precision_bits));
    }
  });
  CompensatedSum sum;
  for (const long double v : values) sum.add(v);
  const long double mean = sum.value() / mc_samples;
  CompensatedSum sq;
  for (const long double v : values) sq.add((v - mean) * (v - mean));
  const long double sd = std::sqrt(sq.value() / (mc_samples - 1));
  const long double half = kZ99 * sd / std::sqrt(static_cast<long double>(mc_samples));
  out.estimate = mean;
  out.value_lower = mean - half;
  out.value_upper = mean + half;
  out.samples = mc_samples;
  return out;
}

SlopeEstimate pressure_slope_at_one(unsigned n, unsigned long A, long double h,
                                    const PressureConfig& config) {
  if (!(h > 0) || h > 0.25L) throw InvalidInput("slope step h must lie in (0, 1/4]");
  PressureConfig cfg = config;
  cfg.level = n;
  cfg.truncation = A;
  SlopeEstimate out;
  out.h = h;
  out.level_n = n;
  out.truncation_A = A;
  out.minus = pressure_partial(1.0L - h, cfg);
  out.plus = pressure_partial(1.0L + h, cfg);
  const PressureEstimate half_minus = pressure_partial(1.0L - h / 2, cfg);
  const PressureEstimate half_plus = pressure_partial(1.0L + h / 2, cfg);
  const long double d_h = (out.plus.central() - out.minus.central()) / (2 * h);
  const long double d_half = (half_plus.central() - half_minus.central()) / h;
  const long double width =
      (out.plus.expectation_rate().width() + out.minus.expectation_rate().width()) / 2;
  out.value = d_h;
  out.error = width / (2 * h) + std::fabs(d_h - d_half) * 4.0L / 3.0L;
  return out;
}

PressureEstimate PressureTable::at(long double theta) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = cache_.find(theta);
  if (it != cache_.end()) return it->second;
  PressureEstimate est = pressure_partial(theta, config_);
  cache_.emplace(theta, est);
  return est;
}

std::size_t PressureTable::evaluations() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

Minimum golden_section(const std::function<long double(long double)>& f, long double lo,
                       long double hi, long double tol) {
  if (!(lo < hi)) throw InvalidInput("golden_section needs lo < hi");
  const long double inv_phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  Minimum out;
  long double a = lo;
  long double b = hi;
  long double c = b - inv_phi * (b - a);
  long double d = a + inv_phi * (b - a);
  long double fc = f(c);
  long double fd = f(d);
  out.evaluations = 2;
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
  }
  out.x = fc < fd ? c : d;
  out.value = std::min(fc, fd);
  const long double f_lo = f(lo);
  const long double f_hi = f(hi);
  out.evaluations += 2;
  if (f_lo <= out.value) {
    out.x = lo;
    out.value = f_lo;
  }
  if (f_hi < out.value) {
    out.x = hi;
    out.value = f_hi;
  }
  out.at_lower = out.x - lo <= 2 * tol;
  out.at_upper = hi - out.x <= 2 * tol;
  return out;
}

SpectrumValue tau_spectrum(long double gamma, const PressureTable& table) {
  const PressureConfig& cfg = table.config();
  const long double floor = constants().golden_log + cfg.gamma_margin;
  if (gamma < floor) {
    throw OutOfDomain("tau is evaluated only for gamma >= log golden ratio + margin");
  }
  const auto objective = [&](long double theta) {
    return 2 * gamma * theta + table.central(theta);
  };
  const Minimum m = golden_section(objective, 0.5L + cfg.delta, cfg.theta_max,
                                   cfg.search_tolerance);
  if (m.at_upper) {
    throw BoundaryHit("tau minimiser reached theta_max; enlarge theta_max",
                      static_cast<double>(m.x));
  }
  SpectrumValue out;
  out.gamma = gamma;
  out.tau = m.value / (2 * gamma);
  out.minimizer_theta = m.x;
  return out;
}

}  // namespace cfdev
