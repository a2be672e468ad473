#pragma once

#include <gmp.h>
#include <mpfr.h>

namespace cfdev::detail {

// Owning handle for one mpfr_t.
class MpfrValue {
 public:
  explicit MpfrValue(unsigned bits) { mpfr_init2(value_, static_cast<mpfr_prec_t>(bits)); }
  ~MpfrValue() { mpfr_clear(value_); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }

 private:
  mpfr_t value_;
};

}  // namespace cfdev::detail
