#include "cfdev/numeric.hpp"

#include <charconv>
#include <string>

#include "cfdev/errors.hpp"
#include "mpfr_value.hpp"

namespace cfdev {

BigInt from_u64(std::uint64_t value) {
  BigInt r;
  mpz_import(r.get_mpz_t(), 1, -1, sizeof(value), 0, 0, &value);
  return r;
}

BigInt from_u128(unsigned __int128 value) {
  const std::uint64_t words[2] = {static_cast<std::uint64_t>(value),
                                  static_cast<std::uint64_t>(value >> 64)};
  BigInt r;
  mpz_import(r.get_mpz_t(), 2, -1, sizeof(std::uint64_t), 0, 0, words);
  return r;
}

bool fits_u64(const BigInt& value) {
  return sgn(value) >= 0 && mpz_sizeinbase(value.get_mpz_t(), 2) <= 64;
}

std::uint64_t to_u64(const BigInt& value) {
  if (!fits_u64(value)) throw InvalidInput("integer does not fit in 64 bits");
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, value.get_mpz_t());
  return out;
}

long double log_of(const BigInt& value, unsigned bits) {
  if (sgn(value) <= 0) throw InvalidInput("log_of: argument must be positive");
  detail::MpfrValue x(bits);
  mpfr_set_z(x.get(), value.get_mpz_t(), MPFR_RNDN);
  mpfr_log(x.get(), x.get(), MPFR_RNDN);
  return mpfr_get_ld(x.get(), MPFR_RNDN);
}

long double log_of(const Rational& value, unsigned bits) {
  if (sgn(value) <= 0) throw InvalidInput("log_of: argument must be positive");
  detail::MpfrValue x(bits);
  mpfr_set_q(x.get(), value.get_mpq_t(), MPFR_RNDN);
  mpfr_log(x.get(), x.get(), MPFR_RNDN);
  return mpfr_get_ld(x.get(), MPFR_RNDN);
}

long double to_real(const Rational& value) {
  detail::MpfrValue x(64);
  mpfr_set_q(x.get(), value.get_mpq_t(), MPFR_RNDN);
  return mpfr_get_ld(x.get(), MPFR_RNDN);
}

std::string to_string(const Rational& value) {
  if (value.get_den() == 1) return value.get_num().get_str();
  return value.get_num().get_str() + "/" + value.get_den().get_str();
}

Rational parse_rational(std::string_view text) {
  std::string s(text);
  const auto trim = [](std::string& t) {
    const auto b = t.find_first_not_of(" \t");
    const auto e = t.find_last_not_of(" \t");
    t = b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
  };
  trim(s);
  if (s.empty()) throw InvalidInput("empty rational literal");
  try {
    if (const auto slash = s.find('/'); slash != std::string::npos) {
      BigInt num(s.substr(0, slash));
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw InvalidInput("zero denominator in '" + s + "'");
      Rational r(num, den);
      r.canonicalize();
      return r;
    }
    if (const auto dot = s.find('.'); dot != std::string::npos) {
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      const std::size_t scale = s.size() - dot - 1;
      BigInt den;
      mpz_ui_pow_ui(den.get_mpz_t(), 10, scale);
      Rational r(BigInt(digits.empty() || digits == "-" ? "0" : digits), den);
      r.canonicalize();
      return r;
    }
    return Rational(BigInt(s));
  } catch (const std::invalid_argument&) {
    throw InvalidInput("malformed rational literal '" + s + "'");
  }
}

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void ExactSum::push(Rational value, int rank) {
  stack_.emplace_back(std::move(value), rank);
  while (stack_.size() >= 2 && stack_[stack_.size() - 1].second == stack_[stack_.size() - 2].second) {
    auto top = std::move(stack_.back());
    stack_.pop_back();
    stack_.back().first += top.first;
    ++stack_.back().second;
  }
}

void ExactSum::add(const Rational& term) {
  ++count_;
  push(term, 0);
}

void ExactSum::add_unit(const BigInt& den) {
  ++count_;
  Rational r;
  mpz_set_ui(mpq_numref(r.get_mpq_t()), 1);
  mpz_set(mpq_denref(r.get_mpq_t()), den.get_mpz_t());
  push(std::move(r), 0);
}

void ExactSum::add_unit(unsigned __int128 den) { add_unit(from_u128(den)); }

ExactSum& ExactSum::operator+=(const ExactSum& other) {
  const Rational t = other.total();
  const auto n = count_ + other.count_;
  push(t, 0);
  count_ = n;
  return *this;
}

Rational ExactSum::total() const {
  Rational s = 0;
  for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) s += it->first;
  return s;
}

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_fdiv_q(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

BigInt ceil_div(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

}  // namespace cfdev
