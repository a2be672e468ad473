#include "cfdev/cf_core.hpp"

#include <algorithm>
#include <utility>

#include "cfdev/errors.hpp"

namespace cfdev {

namespace {

Rational make_rational(const BigInt& num, const BigInt& den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

Rational gauss_map(const Rational& x) {
  if (sgn(x) == 0) return Rational(0);
  const BigInt a = floor_div(x.get_den(), x.get_num());
  return make_rational(x.get_den() - a * x.get_num(), x.get_num());
}

void check_depth(std::size_t n, bool allow_deep) {
  if (n > kDefaultMaxTerms && !allow_deep) {
    throw InvalidInput("expansion depth " + std::to_string(n) + " exceeds " +
                       std::to_string(kDefaultMaxTerms) + " without allow_deep");
  }
}

}  // namespace

PartialQuotients::PartialQuotients(std::vector<BigInt> digits) : digits_(std::move(digits)) {
  for (const auto& d : digits_) {
    if (d < 1) throw InvalidInput("partial quotients must be >= 1");
  }
}

PartialQuotients::PartialQuotients(std::initializer_list<unsigned long> digits) {
  digits_.reserve(digits.size());
  for (const unsigned long d : digits) push_back(BigInt(d));
}

void PartialQuotients::push_back(BigInt digit) {
  if (digit < 1) throw InvalidInput("partial quotients must be >= 1");
  digits_.push_back(std::move(digit));
}

PartialQuotients PartialQuotients::prefix(std::size_t length) const {
  if (length > digits_.size()) throw InvalidInput("prefix longer than sequence");
  PartialQuotients out;
  out.digits_.assign(digits_.begin(), digits_.begin() + static_cast<std::ptrdiff_t>(length));
  return out;
}

std::string PartialQuotients::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < digits_.size(); ++i) {
    if (i) out += '-';
    out += digits_[i].get_str();
  }
  return out;
}

PartialQuotients PartialQuotients::parse(std::string_view text) {
  PartialQuotients out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find_first_of("-, ", start), text.size());
    const std::string token(text.substr(start, end - start));
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
      throw InvalidInput("malformed digit sequence '" + std::string(text) + "'");
    }
    out.push_back(BigInt(token));
    start = end + 1;
  }
  return out;
}

Continuant continuant(const PartialQuotients& digits) {
  Continuant c;
  for (const auto& a : digits.digits()) c.push(a);
  return c;
}

PrecisionReal PrecisionReal::exact(Rational value) {
  value.canonicalize();
  if (sgn(value) < 0 || value >= 1) throw InvalidInput("point must lie in [0, 1)");
  PrecisionReal x;
  x.rational_ = true;
  x.interval_ = {value, value};
  return x;
}

PrecisionReal PrecisionReal::enclosure(Rational lower, Rational upper, Refiner refine) {
  lower.canonicalize();
  upper.canonicalize();
  if (sgn(lower) < 0 || upper > 1) throw InvalidInput("enclosure must lie in [0, 1]");
  if (!(lower < upper)) throw InvalidInput("enclosure needs lower < upper");
  PrecisionReal x;
  x.rational_ = false;
  x.interval_ = {std::move(lower), std::move(upper)};
  x.refine_ = std::move(refine);
  return x;
}

const Rational& PrecisionReal::value() const {
  if (!rational_) throw InvalidInput("point is not an exact rational");
  return interval_.lower;
}

Interval PrecisionReal::refine(unsigned bits) const {
  if (!refine_) throw PrecisionExhausted("point has no refinement source", 0);
  return refine_(bits);
}

PrecisionReal golden_point(unsigned bits) {
  auto refiner = [](unsigned b) {
    BigInt scale = 1;
    scale <<= b;
    BigInt s;
    const BigInt five_scaled = BigInt(5) * scale * scale;
    mpz_sqrt(s.get_mpz_t(), five_scaled.get_mpz_t());
    const BigInt den = 2 * scale;
    return Interval{make_rational(s - scale, den), make_rational(s + 1 - scale, den)};
  };
  const Interval start = refiner(bits);
  return PrecisionReal::enclosure(start.lower, start.upper, refiner);
}

PrecisionReal lebesgue_point(const CounterRng& rng) {
  auto refiner = [rng](unsigned b) {
    const std::size_t words = std::max<std::size_t>(1, (b + 63) / 64);
    std::vector<std::uint64_t> buf(words);
    for (std::size_t i = 0; i < words; ++i) buf[i] = rng.at(i);
    BigInt n;
    mpz_import(n.get_mpz_t(), words, 1, sizeof(std::uint64_t), 0, 0, buf.data());
    BigInt den = 1;
    den <<= static_cast<mp_bitcnt_t>(64 * words);
    return Interval{make_rational(n, den), make_rational(n + 1, den)};
  };
  const Interval start = refiner(64);
  return PrecisionReal::enclosure(start.lower, start.upper, refiner);
}

DigitStream::DigitStream(PrecisionReal x, unsigned max_bits)
    : x_(std::move(x)), enclosure_(x_.interval()), max_bits_(max_bits) {
  recompute();
}

void DigitStream::recompute() {
  // t(u) = (p_k - q_k u) / (q_{k-1} u - p_{k-1}) maps the cylinder onto [0, 1].
  const auto image = [this](const Rational& u, BigInt& num, BigInt& den) {
    num = state_.p * u.get_den() - state_.q * u.get_num();
    den = state_.q_prev * u.get_num() - state_.p_prev * u.get_den();
    if (sgn(den) < 0) {
      num = -num;
      den = -den;
    }
  };
  image(enclosure_.lower, lo_num_, lo_den_);
  if (x_.is_rational()) {
    hi_num_ = lo_num_;
    hi_den_ = lo_den_;
    return;
  }
  image(enclosure_.upper, hi_num_, hi_den_);
  if (lo_num_ * hi_den_ > hi_num_ * lo_den_) {
    lo_num_.swap(hi_num_);
    lo_den_.swap(hi_den_);
  }
}

bool DigitStream::refine() {
  if (!x_.refinable() || bits_ >= max_bits_) return false;
  bits_ = bits_ == 0 ? 64 : bits_ + std::max(64u, bits_ / 2);
  bits_ = std::min(bits_, max_bits_);
  const Interval e = x_.refine(bits_);
  if (e.lower > enclosure_.lower) enclosure_.lower = e.lower;
  if (e.upper < enclosure_.upper) enclosure_.upper = e.upper;
  if (!(enclosure_.lower < enclosure_.upper)) {
    throw InvalidInput("refinement left the original enclosure");
  }
  recompute();
  return true;
}

std::optional<BigInt> DigitStream::next() {
  if (x_.is_rational()) {
    if (sgn(lo_num_) == 0) return std::nullopt;
    BigInt a = floor_div(lo_den_, lo_num_);
    BigInt rest = lo_den_ - a * lo_num_;
    lo_den_ = lo_num_;
    lo_num_ = std::move(rest);
    hi_num_ = lo_num_;
    hi_den_ = lo_den_;
    state_.push(a);
    ++depth_;
    return a;
  }
  for (;;) {
    if (sgn(lo_num_) > 0) {
      BigInt m = floor_div(hi_den_, hi_num_);
      // Every t in [lo, hi] has floor(1/t) = m iff lo > 1/(m+1).
      if (lo_num_ * (m + 1) > lo_den_) {
        BigInt next_lo_num = hi_den_ - m * hi_num_;
        BigInt next_hi_num = lo_den_ - m * lo_num_;
        lo_den_.swap(hi_num_);
        hi_den_ = lo_num_;
        lo_num_ = std::move(next_lo_num);
        hi_num_ = std::move(next_hi_num);
        state_.push(m);
        ++depth_;
        return m;
      }
    }
    if (!refine()) {
      throw PrecisionExhausted("enclosure straddles a digit boundary after " +
                                   std::to_string(depth_) + " certified digits",
                               depth_);
    }
  }
}

Interval DigitStream::remainder() const {
  return {make_rational(lo_num_, lo_den_), make_rational(hi_num_, hi_den_)};
}

void DigitStream::refine_to(const Rational& width) {
  while (enclosure_.upper - enclosure_.lower > width) {
    if (!refine()) {
      throw PrecisionExhausted("cannot narrow the enclosure further", depth_);
    }
  }
}

PartialQuotients expand_rational(const BigInt& p, const BigInt& q, std::size_t max_terms,
                                 bool allow_deep) {
  if (sgn(q) <= 0) throw InvalidInput("denominator must be positive");
  if (sgn(p) < 0 || p >= q) throw InvalidInput("expand_rational needs 0 <= p < q");
  check_depth(max_terms, allow_deep);
  PartialQuotients out;
  BigInt num = p;
  BigInt den = q;
  while (sgn(num) != 0 && out.size() < max_terms) {
    BigInt a = floor_div(den, num);
    BigInt rest = den - a * num;
    den.swap(num);
    num.swap(rest);
    out.push_back(std::move(a));
  }
  return out;
}

PartialQuotients expand_real(const PrecisionReal& x, std::size_t n, bool allow_deep) {
  check_depth(n, allow_deep);
  if (x.is_rational()) {
    const Rational& v = x.value();
    return expand_rational(v.get_num(), v.get_den(), n, true);
  }
  DigitStream stream(x);
  PartialQuotients out;
  while (out.size() < n) {
    auto digit = stream.next();
    if (!digit) break;
    out.push_back(std::move(*digit));
  }
  return out;
}

std::vector<Convergent> convergents(const PartialQuotients& digits) {
  std::vector<Convergent> out;
  out.reserve(digits.size());
  Continuant c;
  long index = 0;
  for (const auto& a : digits.digits()) {
    c.push(a);
    out.push_back({c.p, c.q, ++index});
  }
  return out;
}

std::vector<PrecisionReal> gauss_orbit(const PrecisionReal& x, std::size_t n) {
  std::vector<PrecisionReal> out;
  out.reserve(n);
  if (n == 0) return out;
  if (x.is_rational()) {
    Rational v = x.value();
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(PrecisionReal::exact(v));
      v = gauss_map(v);
    }
    return out;
  }
  out.push_back(x);
  DigitStream stream(x);
  for (std::size_t k = 1; k < n; ++k) {
    stream.next();
    const Interval r = stream.remainder();
    out.push_back(PrecisionReal::enclosure(r.lower, r.upper));
  }
  return out;
}

std::vector<DiophantineLevel> verify_diophantine(const PrecisionReal& x,
                                                 const PartialQuotients& digits) {
  if (digits.size() < 2) throw InvalidInput("verify_diophantine needs at least two digits");
  const Continuant full = continuant(digits);
  Rational a = make_rational(full.p, full.q);
  Rational b = make_rational(full.p + full.p_prev, full.q + full.q_prev);
  if (b < a) std::swap(a, b);
  const Interval& e = x.interval();
  if (e.lower < a || e.upper > b) {
    throw InvalidInput("digits " + digits.to_string() + " are not the expansion of the point");
  }

  const auto conv = convergents(digits);
  std::vector<DiophantineLevel> out;
  for (std::size_t n = 1; n < digits.size(); ++n) {
    const BigInt& qn = conv[n - 1].q;
    const BigInt& qn1 = conv[n].q;
    const Rational pn_qn = make_rational(conv[n - 1].p, qn);
    // x - p_n/q_n keeps one sign on the cylinder of level n + 1.
    Rational d_lo = abs(e.lower - pn_qn);
    Rational d_hi = abs(e.upper - pn_qn);
    if (d_hi < d_lo) std::swap(d_lo, d_hi);
    const Rational outer_lo = make_rational(1, 2 * qn1 * qn1);
    const Rational inner_lo = make_rational(1, 2 * qn * qn1);
    const Rational inner_hi = make_rational(1, qn * qn1);
    const Rational outer_hi = make_rational(1, qn * qn);
    DiophantineLevel level;
    level.level = n;
    level.outer_lower = outer_lo <= inner_lo;
    level.inner_lower = inner_lo <= d_lo;
    level.inner_upper = d_hi <= inner_hi;
    level.outer_upper = inner_hi <= outer_hi;
    out.push_back(level);
  }
  return out;
}

LevyStatistic levy_statistic(const PartialQuotients& digits, unsigned precision_bits) {
  if (digits.empty()) throw InvalidInput("levy_statistic needs at least one digit");
  const Continuant c = continuant(digits);
  LevyStatistic s;
  s.level = digits.size();
  s.precision_bits = precision_bits;
  s.value = log_of(c.q, precision_bits) / static_cast<long double>(digits.size());
  return s;
}

}  // namespace cfdev
