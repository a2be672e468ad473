#include "cfdev/constants.hpp"

#include <memory>

#include "cfdev/errors.hpp"
#include "mpfr_value.hpp"

namespace cfdev {
namespace {

std::string decimal(mpfr_srcptr x, std::size_t digits) {
  mpfr_exp_t exponent = 0;
  std::unique_ptr<char, void (*)(char*)> text(
      mpfr_get_str(nullptr, &exponent, 10, digits, x, MPFR_RNDN), mpfr_free_str);
  std::string s = text.get();
  // x is positive and of order one for every constant here
  if (exponent <= 0) return "0." + std::string(static_cast<std::size_t>(-exponent), '0') + s;
  return s.substr(0, static_cast<std::size_t>(exponent)) + "." +
         s.substr(static_cast<std::size_t>(exponent));
}

// levy = pi^2 / (12 log 2) rounded in direction `rnd`.
void levy_rounded(mpfr_ptr out, mpfr_rnd_t rnd, mpfr_prec_t prec) {
  const mpfr_rnd_t opposite = rnd == MPFR_RNDD ? MPFR_RNDU : MPFR_RNDD;
  detail::MpfrValue pi(static_cast<unsigned>(prec)), log2(static_cast<unsigned>(prec));
  mpfr_const_pi(pi.get(), rnd);
  mpfr_sqr(pi.get(), pi.get(), rnd);
  mpfr_const_log2(log2.get(), opposite);
  mpfr_mul_ui(log2.get(), log2.get(), 12, opposite);
  mpfr_div(out, pi.get(), log2.get(), rnd);
}

LevyConstants compute() {
  constexpr unsigned bits = 128;
  LevyConstants c;
  c.precision_bits = bits;
  detail::MpfrValue b(bits), g(bits), t(bits), l(bits);
  levy_rounded(b.get(), MPFR_RNDN, bits);

  mpfr_sqrt_ui(g.get(), 5, MPFR_RNDN);
  mpfr_add_ui(g.get(), g.get(), 1, MPFR_RNDN);
  mpfr_div_ui(g.get(), g.get(), 2, MPFR_RNDN);
  mpfr_log(g.get(), g.get(), MPFR_RNDN);

  mpfr_const_log2(t.get(), MPFR_RNDN);
  mpfr_sub(t.get(), b.get(), t.get(), MPFR_RNDN);

  mpfr_mul_ui(l.get(), b.get(), 2, MPFR_RNDN);

  c.levy = mpfr_get_ld(b.get(), MPFR_RNDN);
  c.golden_log = mpfr_get_ld(g.get(), MPFR_RNDN);
  c.levy_minus_log2 = mpfr_get_ld(t.get(), MPFR_RNDN);
  c.lyapunov = mpfr_get_ld(l.get(), MPFR_RNDN);
  c.levy_decimal = decimal(b.get(), 36);
  c.golden_log_decimal = decimal(g.get(), 36);
  c.levy_minus_log2_decimal = decimal(t.get(), 36);
  c.lyapunov_decimal = decimal(l.get(), 36);
  return c;
}

}  // namespace

const LevyConstants& constants() {
  static const LevyConstants c = compute();
  return c;
}

IntegerBounds exp_levy_bounds(long level, double offset, long shift) {
  if (level <= 0) throw InvalidInput("exp_levy_bounds: level must be positive");
  for (mpfr_prec_t prec = 128; prec <= 16384; prec *= 2) {
    const auto p = static_cast<unsigned>(prec);
    detail::MpfrValue lo(p), hi(p), eps(p);
    mpfr_set_d(eps.get(), offset, MPFR_RNDN);  // exact: a double has 53 bits
    levy_rounded(lo.get(), MPFR_RNDD, prec);
    levy_rounded(hi.get(), MPFR_RNDU, prec);
    mpfr_add(lo.get(), lo.get(), eps.get(), MPFR_RNDD);
    mpfr_add(hi.get(), hi.get(), eps.get(), MPFR_RNDU);
    mpfr_mul_si(lo.get(), lo.get(), level, MPFR_RNDD);
    mpfr_mul_si(hi.get(), hi.get(), level, MPFR_RNDU);
    mpfr_exp(lo.get(), lo.get(), MPFR_RNDD);
    mpfr_exp(hi.get(), hi.get(), MPFR_RNDU);
    mpfr_sub_si(lo.get(), lo.get(), shift, MPFR_RNDD);
    mpfr_sub_si(hi.get(), hi.get(), shift, MPFR_RNDU);

    BigInt f_lo, f_hi;
    mpfr_get_z(f_lo.get_mpz_t(), lo.get(), MPFR_RNDD);
    mpfr_get_z(f_hi.get_mpz_t(), hi.get(), MPFR_RNDD);
    if (f_lo != f_hi) continue;
    // The enclosure [lo, hi] sits inside [f, f + 1); the value is an integer
    // only if lo == f, which we cannot rule out at this precision.
    if (mpfr_integer_p(lo.get())) continue;
    return {f_lo, f_lo + 1};
  }
  throw PrecisionExhausted("exp_levy_bounds: threshold too close to an integer", 0);
}

}  // namespace cfdev
