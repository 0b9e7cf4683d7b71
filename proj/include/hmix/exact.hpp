#pragma once

// Exact integer / rational helpers on top of GMP, plus a small RAII wrapper
// around MPFR used for directed-rounding interval evaluation.

#include <gmpxx.h>
#include <mpfr.h>

#include <cctype>
#include <climits>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "hmix/error.hpp"

namespace hmix {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(const Integer& num, const Integer& den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// ---------------------------------------------------------------------------
// Parsing and formatting
// ---------------------------------------------------------------------------

inline Integer parse_integer(std::string_view text) {
  std::string s(text);
  bool ok = !s.empty();
  for (std::size_t i = 0; i < s.size() && ok; ++i) {
    ok = std::isdigit(static_cast<unsigned char>(s[i])) ||
         (i == 0 && s[i] == '-' && s.size() > 1);
  }
  if (!ok) fail(ErrorCode::kParseError, "not a decimal integer: '" + s + "'");
  return Integer(s, 10);
}

// Accepts "a/b", "a" and plain decimals such as "1.1" or "-0.25".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Integer num = parse_integer(s.substr(0, slash));
    Integer den = parse_integer(s.substr(slash + 1));
    if (den == 0) fail(ErrorCode::kParseError, "zero denominator in '" + s + "'");
    Rational q(num, den);
    q.canonicalize();
    return q;
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    bool negative = !whole.empty() && whole[0] == '-';
    if (negative) whole.erase(0, 1);
    if (whole.empty()) whole = "0";
    if (frac.empty()) fail(ErrorCode::kParseError, "malformed decimal '" + s + "'");
    Integer num = parse_integer(whole + frac);
    if (frac[0] == '-') fail(ErrorCode::kParseError, "malformed decimal '" + s + "'");
    Integer den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
    Rational q(negative ? Integer(-num) : num, den);
    q.canonicalize();
    return q;
  }
  return Rational(parse_integer(s));
}

inline std::string to_string(const Integer& z) { return z.get_str(10); }

// Always "num/den", also for integral values.
inline std::string to_string(const Rational& q) {
  return q.get_num().get_str(10) + "/" + q.get_den().get_str(10);
}

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(const Integer& z) { return z.get_d(); }

inline std::int64_t to_int64(const Integer& z, std::string_view what) {
  if (!mpz_fits_slong_p(z.get_mpz_t()) || sizeof(long) < 8) {
    fail(ErrorCode::kSizeCap, std::string(what) + " does not fit in 64 bits");
  }
  return z.get_si();
}

inline unsigned long to_ulong(const Integer& z, std::string_view what) {
  if (z < 0 || !mpz_fits_ulong_p(z.get_mpz_t())) {
    fail(ErrorCode::kSizeCap, std::string(what) + " exceeds machine word");
  }
  return z.get_ui();
}

// ---------------------------------------------------------------------------
// Powers and roots
// ---------------------------------------------------------------------------

inline Integer pow(const Integer& base, unsigned long exponent) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), exponent);
  return r;
}

inline Rational pow(const Rational& base, unsigned long exponent) {
  Rational r(pow(base.get_num(), exponent), pow(base.get_den(), exponent));
  r.canonicalize();
  return r;
}

inline Integer pow2(unsigned long exponent) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, exponent);
  return r;
}

// floor(x^(1/k)) for x >= 0.
inline Integer root_floor(const Integer& x, unsigned long k) {
  Integer r;
  mpz_root(r.get_mpz_t(), x.get_mpz_t(), k);
  return r;
}

// ceil(x^(1/k)) for x >= 0.
inline Integer root_ceil(const Integer& x, unsigned long k) {
  Integer r;
  int exact = mpz_root(r.get_mpz_t(), x.get_mpz_t(), k);
  if (!exact) r += 1;
  return r;
}

inline Integer floor(const Rational& q) {
  Integer r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

inline Integer ceil(const Rational& q) {
  Integer r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

// Numerator and denominator of a positive rational exponent as machine words.
struct ExponentParts {
  unsigned long num;
  unsigned long den;
};

inline ExponentParts exponent_parts(const Rational& p) {
  if (p <= 0) fail(ErrorCode::kInvalidExponent, "exponent must be positive");
  if (!mpz_fits_ulong_p(p.get_num_mpz_t()) || !mpz_fits_ulong_p(p.get_den_mpz_t())) {
    fail(ErrorCode::kInvalidExponent, "exponent " + to_string(p) + " has oversized terms");
  }
  return {p.get_num().get_ui(), p.get_den().get_ui()};
}

// lhs >= base^p for positive integers and rational p = a/b, via lhs^b >= base^a.
inline bool at_least_power(const Integer& lhs, const Integer& base, const Rational& p) {
  auto [a, b] = exponent_parts(p);
  return pow(lhs, b) >= pow(base, a);
}

// Smallest integer m with m >= base^p.
inline Integer ceil_power(const Integer& base, const Rational& p) {
  auto [a, b] = exponent_parts(p);
  return root_ceil(pow(base, a), b);
}

// Largest integer m with m <= base^p.
inline Integer floor_power(const Integer& base, const Rational& p) {
  auto [a, b] = exponent_parts(p);
  return root_floor(pow(base, a), b);
}

// sum_{j=1}^{m} j^2 = m(m+1)(2m+1)/6, zero for m <= 0.
inline Integer sum_of_squares(const Integer& m) {
  if (m <= 0) return 0;
  Integer r = m * (m + 1) * (2 * m + 1);
  return r / 6;
}

// ---------------------------------------------------------------------------
// MPFR wrapper
// ---------------------------------------------------------------------------

class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t precision) { mpfr_init2(value_, precision); }
  ~BigFloat() { mpfr_clear(value_); }
  BigFloat(const BigFloat&) = delete;
  BigFloat& operator=(const BigFloat&) = delete;
  BigFloat(BigFloat&& other) noexcept {
    mpfr_init2(value_, mpfr_get_prec(other.value_));
    mpfr_swap(value_, other.value_);
  }

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }

  Integer floor() const {
    Integer z;
    mpfr_get_z(z.get_mpz_t(), value_, MPFR_RNDD);
    return z;
  }

  bool is_integer() const { return mpfr_integer_p(value_) != 0; }

 private:
  mpfr_t value_;
};

// Closed interval [lo, hi] of MPFR values at a common precision.
struct FloatInterval {
  explicit FloatInterval(mpfr_prec_t precision) : lo(precision), hi(precision) {}
  BigFloat lo;
  BigFloat hi;
};

inline void set_interval(FloatInterval& out, const Rational& q) {
  mpfr_set_q(out.lo.get(), q.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(out.hi.get(), q.get_mpq_t(), MPFR_RNDU);
}

inline void set_interval(FloatInterval& out, const Integer& z) {
  mpfr_set_z(out.lo.get(), z.get_mpz_t(), MPFR_RNDD);
  mpfr_set_z(out.hi.get(), z.get_mpz_t(), MPFR_RNDU);
}

// The unique floor of every point in [lo, hi], if there is one.
inline bool interval_floor(const FloatInterval& x, Integer& out) {
  Integer a = x.lo.floor();
  Integer b = x.hi.floor();
  if (a != b) return false;
  out = a;
  return true;
}

}  // namespace hmix
