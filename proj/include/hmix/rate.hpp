#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmix/error.hpp"
#include "hmix/exact.hpp"

namespace hmix {

// Knobs for the adaptive interval evaluations that cannot be done exactly.
struct PrecisionPolicy {
  mpfr_prec_t initial_bits = 128;
  mpfr_prec_t max_bits = 1 << 16;
  // Largest power of two materialized by the exact exponential paths.
  unsigned long max_power_bits = 1ul << 28;
};

enum class RateKind { kPower, kLogarithmic, kExponential, kTable };

// A positive sequence r_N, N >= 1, evaluable at arbitrarily large N:
//   power:        c * N^a
//   logarithmic:  c * (1 + log2 N)^a
//   exponential:  c * 2^(a N)
//   table:        explicit values r_1..r_T
class Rate {
 public:
  static Rate power(Rational coeff, Rational exponent) {
    return Rate(RateKind::kPower, std::move(coeff), std::move(exponent));
  }
  static Rate logarithmic(Rational coeff, Rational exponent) {
    return Rate(RateKind::kLogarithmic, std::move(coeff), std::move(exponent));
  }
  static Rate exponential(Rational coeff, Rational exponent) {
    return Rate(RateKind::kExponential, std::move(coeff), std::move(exponent));
  }
  static Rate table(std::vector<Rational> values) {
    if (values.empty()) fail(ErrorCode::kInvalidArgument, "rate table is empty");
    for (const auto& v : values) {
      if (v <= 0) fail(ErrorCode::kInvalidArgument, "rate table values must be positive");
    }
    Rate r(RateKind::kTable, 1, 0);
    r.table_ = std::move(values);
    return r;
  }

  // Grammar: "power:C:A" | "log:C:A" | "exp:C:A" | "table:v1,v2,..." or one
  // of the aliases N, sqrtN, 1/N, 1/N^2, 2^-N, logN.
  static Rate parse(std::string_view text) {
    std::string s(text);
    if (s == "N") return power(1, 1);
    if (s == "sqrtN") return power(1, Rational(1, 2));
    if (s == "1/N") return power(1, -1);
    if (s == "1/N^2") return power(1, -2);
    if (s == "2^-N") return exponential(1, -1);
    if (s == "logN") return logarithmic(1, 1);
    auto colon = s.find(':');
    if (colon == std::string::npos) fail(ErrorCode::kParseError, "unknown rate '" + s + "'");
    std::string head = s.substr(0, colon);
    std::string rest = s.substr(colon + 1);
    if (head == "table") {
      std::vector<Rational> values;
      std::stringstream ss(rest);
      std::string item;
      while (std::getline(ss, item, ',')) values.push_back(parse_rational(item));
      return table(std::move(values));
    }
    auto colon2 = rest.find(':');
    if (colon2 == std::string::npos) fail(ErrorCode::kParseError, "rate '" + s + "' needs C:A");
    Rational c = parse_rational(rest.substr(0, colon2));
    Rational a = parse_rational(rest.substr(colon2 + 1));
    if (head == "power") return power(c, a);
    if (head == "log") return logarithmic(c, a);
    if (head == "exp") return exponential(c, a);
    fail(ErrorCode::kParseError, "unknown rate family '" + head + "'");
  }

  std::string describe() const {
    switch (kind_) {
      case RateKind::kPower: return "power:" + to_string(coeff_) + ":" + to_string(exponent_);
      case RateKind::kLogarithmic: return "log:" + to_string(coeff_) + ":" + to_string(exponent_);
      case RateKind::kExponential: return "exp:" + to_string(coeff_) + ":" + to_string(exponent_);
      case RateKind::kTable: {
        std::string out = "table:";
        for (std::size_t i = 0; i < table_.size(); ++i) {
          if (i) out += ",";
          out += to_string(table_[i]);
        }
        return out;
      }
    }
    return {};
  }

  RateKind kind() const { return kind_; }
  const Rational& coeff() const { return coeff_; }
  const Rational& exponent() const { return exponent_; }
  const std::vector<Rational>& values() const { return table_; }

  bool nonincreasing() const {
    if (kind_ == RateKind::kTable) {
      return std::is_sorted(table_.rbegin(), table_.rend());
    }
    return exponent_ <= 0;
  }

  bool nondecreasing() const {
    if (kind_ == RateKind::kTable) return std::is_sorted(table_.begin(), table_.end());
    return exponent_ >= 0;
  }

  // rate(n) >= x.
  bool at_least(const Integer& n, const Rational& x, const PrecisionPolicy& policy = {}) const {
    check_index(n);
    if (x <= 0) return true;
    switch (kind_) {
      case RateKind::kTable:
        return table_[n.get_ui() - 1] >= x;
      case RateKind::kPower: {
        // (c n^(s/t))^t >= x^t  <=>  c^t n^s >= x^t
        auto t = den_ui();
        return pow(coeff_, t) * power_of(Rational(n), exponent_.get_num()) >= pow(x, t);
      }
      case RateKind::kExponential: {
        auto t = den_ui();
        return pow(coeff_, t) * two_power(exponent_.get_num() * n, policy) >= pow(x, t);
      }
      case RateKind::kLogarithmic:
        break;
    }
    for (mpfr_prec_t bits = policy.initial_bits; bits <= policy.max_bits; bits *= 2) {
      FloatInterval v = interval(n, bits);
      FloatInterval target(bits);
      set_interval(target, x);
      if (mpfr_cmp(v.lo.get(), target.hi.get()) >= 0) return true;
      if (mpfr_cmp(v.hi.get(), target.lo.get()) < 0) return false;
    }
    fail(ErrorCode::kPrecisionExhausted,
         "cannot decide " + describe() + " at N=" + to_string(n) + " >= " + to_string(x));
  }

  // floor(scale / rate(n)).
  Integer floor_scaled_inverse(const Integer& n, const Integer& scale,
                               const PrecisionPolicy& policy = {}) const {
    check_index(n);
    switch (kind_) {
      case RateKind::kTable:
        return floor(Rational(scale) / table_[n.get_ui() - 1]);
      case RateKind::kPower: {
        // X = scale / (c n^(s/t)),  X^t = (scale/c)^t n^(-s)
        auto t = den_ui();
        Rational xt = pow(Rational(scale) / coeff_, t) *
                      power_of(Rational(n), -exponent_.get_num());
        return root_floor(floor(xt), t);
      }
      case RateKind::kExponential: {
        auto t = den_ui();
        Rational xt = pow(Rational(scale) / coeff_, t) *
                      two_power(-exponent_.get_num() * n, policy);
        return root_floor(floor(xt), t);
      }
      case RateKind::kLogarithmic:
        break;
    }
    // 1/rate(n) = (1/c) (1 + log2 n)^(-a), evaluated as a rate of its own so
    // exactly representable cases stay exact.
    Rate inverse = logarithmic(1 / coeff_, -exponent_);
    for (mpfr_prec_t bits = policy.initial_bits; bits <= policy.max_bits; bits *= 2) {
      FloatInterval q = inverse.interval(n, bits);
      FloatInterval s(bits);
      set_interval(s, scale);
      mpfr_mul(q.lo.get(), q.lo.get(), s.lo.get(), MPFR_RNDD);
      mpfr_mul(q.hi.get(), q.hi.get(), s.hi.get(), MPFR_RNDU);
      Integer out;
      if (interval_floor(q, out)) return out;
    }
    fail(ErrorCode::kPrecisionExhausted,
         "cannot pin floor of " + to_string(scale) + "/" + describe() + " at N=" + to_string(n));
  }

  // rate(n)^2 when it is rational.
  std::optional<Rational> exact_square(const Integer& n) const {
    check_index(n);
    switch (kind_) {
      case RateKind::kTable: {
        const Rational& v = table_[n.get_ui() - 1];
        return Rational(v * v);
      }
      case RateKind::kPower:
      case RateKind::kExponential: {
        Integer twice = 2 * exponent_.get_num();
        if (!mpz_divisible_p(twice.get_mpz_t(), exponent_.get_den_mpz_t())) return std::nullopt;
        Integer e = twice / exponent_.get_den();
        Rational c2 = coeff_ * coeff_;
        if (kind_ == RateKind::kPower) return Rational(c2 * power_of(Rational(n), e));
        return Rational(c2 * two_power(e * n, PrecisionPolicy{}));
      }
      case RateKind::kLogarithmic:
        return std::nullopt;
    }
    return std::nullopt;
  }

  double value(const Integer& n) const {
    check_index(n);
    if (kind_ == RateKind::kTable) return to_double(table_[n.get_ui() - 1]);
    FloatInterval v = interval(n, 64);
    return mpfr_get_d(v.lo.get(), MPFR_RNDN);
  }

  // Enclosure of rate(n) for the three closed-form families.
  FloatInterval interval(const Integer& n, mpfr_prec_t bits) const {
    FloatInterval out(bits);
    FloatInterval a(bits);
    set_interval(a, exponent_);
    switch (kind_) {
      case RateKind::kPower:
      case RateKind::kLogarithmic: {
        FloatInterval base(bits);
        set_interval(base, n);
        if (kind_ == RateKind::kLogarithmic) {
          mpfr_log2(base.lo.get(), base.lo.get(), MPFR_RNDD);
          mpfr_log2(base.hi.get(), base.hi.get(), MPFR_RNDU);
          mpfr_add_ui(base.lo.get(), base.lo.get(), 1, MPFR_RNDD);
          mpfr_add_ui(base.hi.get(), base.hi.get(), 1, MPFR_RNDU);
        }
        // base >= 1: x^a is increasing in a; increasing in x iff a >= 0.
        if (exponent_ >= 0) {
          mpfr_pow(out.lo.get(), base.lo.get(), a.lo.get(), MPFR_RNDD);
          mpfr_pow(out.hi.get(), base.hi.get(), a.hi.get(), MPFR_RNDU);
        } else {
          mpfr_pow(out.lo.get(), base.hi.get(), a.lo.get(), MPFR_RNDD);
          mpfr_pow(out.hi.get(), base.lo.get(), a.hi.get(), MPFR_RNDU);
        }
        break;
      }
      case RateKind::kExponential: {
        FloatInterval nn(bits);
        set_interval(nn, n);
        // n > 0, so the extreme products pair each end of a with the end of
        // n matching its sign.
        mpfr_mul(out.lo.get(), a.lo.get(),
                 mpfr_sgn(a.lo.get()) >= 0 ? nn.lo.get() : nn.hi.get(), MPFR_RNDD);
        mpfr_mul(out.hi.get(), a.hi.get(),
                 mpfr_sgn(a.hi.get()) >= 0 ? nn.hi.get() : nn.lo.get(), MPFR_RNDU);
        mpfr_exp2(out.lo.get(), out.lo.get(), MPFR_RNDD);
        mpfr_exp2(out.hi.get(), out.hi.get(), MPFR_RNDU);
        break;
      }
      case RateKind::kTable:
        set_interval(out, table_.at(n.get_ui() - 1));
        return out;
    }
    FloatInterval c(bits);
    set_interval(c, coeff_);
    mpfr_mul(out.lo.get(), out.lo.get(), c.lo.get(), MPFR_RNDD);
    mpfr_mul(out.hi.get(), out.hi.get(), c.hi.get(), MPFR_RNDU);
    return out;
  }

 private:
  Rate(RateKind kind, Rational coeff, Rational exponent)
      : kind_(kind), coeff_(std::move(coeff)), exponent_(std::move(exponent)) {
    coeff_.canonicalize();
    exponent_.canonicalize();
    if (kind_ != RateKind::kTable && coeff_ <= 0) {
      fail(ErrorCode::kInvalidArgument, "rate coefficient must be positive");
    }
    if (kind_ != RateKind::kTable) exponent_parts_check();
  }

  void exponent_parts_check() const {
    if (!mpz_fits_ulong_p(exponent_.get_den_mpz_t()) ||
        !mpz_fits_slong_p(exponent_.get_num_mpz_t())) {
      fail(ErrorCode::kInvalidExponent, "rate exponent " + to_string(exponent_) + " too large");
    }
  }

  unsigned long den_ui() const { return exponent_.get_den().get_ui(); }

  void check_index(const Integer& n) const {
    if (n < 1) fail(ErrorCode::kOutOfRange, "rate index must be >= 1");
    if (kind_ == RateKind::kTable && n > static_cast<unsigned long>(table_.size())) {
      fail(ErrorCode::kOutOfRange,
           "rate table has " + std::to_string(table_.size()) + " entries, queried N=" + to_string(n));
    }
  }

  // base^e for a signed integer e.
  static Rational power_of(const Rational& base, const Integer& e) {
    unsigned long mag = to_ulong(abs(e), "rate exponent magnitude");
    Rational r = pow(base, mag);
    if (e < 0) r = 1 / r;
    return r;
  }

  static Rational two_power(const Integer& e, const PrecisionPolicy& policy) {
    Integer mag = abs(e);
    if (mag > policy.max_power_bits) {
      fail(ErrorCode::kSizeCap, "2^" + to_string(e) + " exceeds the configured size cap");
    }
    Rational r(pow2(mag.get_ui()));
    if (e < 0) r = 1 / r;
    return r;
  }

  RateKind kind_;
  Rational coeff_;
  Rational exponent_;
  std::vector<Rational> table_;
};

}  // namespace hmix
