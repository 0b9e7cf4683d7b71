#pragma once

// Block sequences (n_k), the ternary noise law and the process description.
//
// The process is f = sum_k f_k e_k with f_k = sum_{i=0}^{n_k-1} xi_k(-i),
// where xi_k(j) are independent ternary variables with
// P(+1) = P(-1) = u_k/2, P(0) = 1 - u_k and u_k = n_k^{-2}. Time evolution is
// index translation on the noise, so f_k at time t reads xi_k(t-n_k+1..t).

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmix/error.hpp"
#include "hmix/exact.hpp"
#include "hmix/rate.hpp"

namespace hmix {

enum class Origin { kClosedFormA, kRecursiveA, kTheoremAPrime, kExplicit };

constexpr std::string_view origin_name(Origin origin) {
  switch (origin) {
    case Origin::kClosedFormA: return "closed_form_A";
    case Origin::kRecursiveA: return "recursive_A";
    case Origin::kTheoremAPrime: return "theorem_A_prime";
    case Origin::kExplicit: return "explicit";
  }
  return "explicit";
}

inline Origin parse_origin(std::string_view name) {
  for (Origin o : {Origin::kClosedFormA, Origin::kRecursiveA, Origin::kTheoremAPrime,
                   Origin::kExplicit}) {
    if (origin_name(o) == name) return o;
  }
  fail(ErrorCode::kParseError, "unknown sequence origin '" + std::string(name) + "'");
}

// Per-step outcome of the growth check n_{k+1} >= n_k^p.
struct ConditionCReport {
  Rational exponent;
  // 1-based k for which n_{k+1} < n_k^p.
  std::vector<std::size_t> failures;

  bool passed() const { return failures.empty(); }
};

inline ConditionCReport validate_condition_c(const std::vector<Integer>& terms,
                                             const Rational& p) {
  ConditionCReport report{p, {}};
  if (p <= 1) {
    // Not a growth witness at all; every step is reported.
    for (std::size_t k = 1; k < terms.size(); ++k) report.failures.push_back(k);
    return report;
  }
  for (std::size_t k = 0; k + 1 < terms.size(); ++k) {
    if (!at_least_power(terms[k + 1], terms[k], p)) report.failures.push_back(k + 1);
  }
  return report;
}

// Increasing integers n_1 < ... < n_K with n_1 >= 2 and n_{k+1} >= n_k^p.
// Immutable once constructed.
class BlockSequence {
 public:
  BlockSequence(std::vector<Integer> terms, Rational exponent, Origin origin)
      : terms_(std::move(terms)), exponent_(std::move(exponent)), origin_(origin) {
    exponent_.canonicalize();
    if (exponent_ <= 1) {
      fail(ErrorCode::kInvalidExponent,
           "growth condition (C) needs p > 1, got p=" + to_string(exponent_));
    }
    if (terms_.empty()) fail(ErrorCode::kInvalidArgument, "sequence has no terms");
    if (terms_.front() < 2) {
      fail(ErrorCode::kInvalidArgument,
           "n_1 must be >= 2 so that u_1 = n_1^-2 < 1, got " + to_string(terms_.front()));
    }
    for (std::size_t k = 0; k + 1 < terms_.size(); ++k) {
      if (terms_[k + 1] <= terms_[k]) {
        fail(ErrorCode::kNonIncreasing,
             "terms must be strictly increasing: n_" + std::to_string(k + 2) + " = " +
                 to_string(terms_[k + 1]) + " <= n_" + std::to_string(k + 1) + " = " +
                 to_string(terms_[k]));
      }
    }
    ConditionCReport c = validate_condition_c(terms_, exponent_);
    if (!c.passed()) {
      std::size_t k = c.failures.front();
      fail(ErrorCode::kConditionViolated,
           "condition (C) n_{k+1} >= n_k^p fails at k=" + std::to_string(k) + " with p=" +
               to_string(exponent_));
    }
  }

  const std::vector<Integer>& terms() const { return terms_; }
  std::size_t depth() const { return terms_.size(); }
  // 1-based access, matching n_1..n_K.
  const Integer& term(std::size_t k) const { return terms_.at(k - 1); }
  const Integer& last() const { return terms_.back(); }
  const Rational& exponent() const { return exponent_; }
  Origin origin() const { return origin_; }

  Rational sparsity(std::size_t k) const {
    const Integer& n = term(k);
    return Rational(Integer(1), Integer(n * n));
  }

  bool operator==(const BlockSequence& other) const {
    return terms_ == other.terms_ && exponent_ == other.exponent_ && origin_ == other.origin_;
  }

 private:
  std::vector<Integer> terms_;
  Rational exponent_;
  Origin origin_;
};

inline ConditionCReport validate_condition_c(const BlockSequence& seq, const Rational& p) {
  return validate_condition_c(seq.terms(), p);
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

// floor(2^x) for rational x >= 0, exact via directed-rounding MPFR with a
// proof that the enclosing interval contains no integer boundary.
inline Integer floor_exp2(const Rational& x, const PrecisionPolicy& policy = {}) {
  Integer whole = floor(x);
  Rational frac = x - Rational(whole);
  if (whole > policy.max_power_bits) {
    fail(ErrorCode::kSizeCap, "2^" + to_string(x) + " exceeds the configured size cap");
  }
  unsigned long e = whole.get_ui();
  if (frac == 0) return pow2(e);
  for (mpfr_prec_t guard = 64; guard <= policy.max_bits; guard *= 2) {
    FloatInterval v(static_cast<mpfr_prec_t>(e) + guard);
    set_interval(v, frac);
    mpfr_exp2(v.lo.get(), v.lo.get(), MPFR_RNDD);
    mpfr_exp2(v.hi.get(), v.hi.get(), MPFR_RNDU);
    mpfr_mul_2ui(v.lo.get(), v.lo.get(), e, MPFR_RNDD);
    mpfr_mul_2ui(v.hi.get(), v.hi.get(), e, MPFR_RNDU);
    Integer out;
    if (interval_floor(v, out)) return out;
  }
  fail(ErrorCode::kPrecisionExhausted, "floor(2^" + to_string(x) + ") undecidable");
}

// n_k = floor(2^(p^k)), k = 1..K.
inline BlockSequence build_theorem_a_sequence(const Rational& p, std::size_t depth,
                                              const PrecisionPolicy& policy = {}) {
  if (p <= 1) {
    fail(ErrorCode::kInvalidExponent,
         "growth condition (C) needs p > 1, got p=" + to_string(p));
  }
  if (depth == 0) fail(ErrorCode::kInvalidArgument, "depth must be >= 1");
  std::vector<Integer> terms;
  terms.reserve(depth);
  Rational pk = 1;
  for (std::size_t k = 1; k <= depth; ++k) {
    pk *= p;
    terms.push_back(floor_exp2(pk, policy));
    if (k >= 2 && terms[k - 1] <= terms[k - 2]) {
      fail(ErrorCode::kNonIncreasing,
           "floor(2^(p^k)) repeats at k=" + std::to_string(k) + " for p=" + to_string(p) +
               "; use the recursive builder for slow growth");
    }
  }
  return BlockSequence(std::move(terms), p, Origin::kClosedFormA);
}

// n_{k+1} = max(ceil(n_k^p), n_k + 1).
inline BlockSequence build_recursive_sequence(const Rational& p, const Integer& first,
                                              std::size_t depth) {
  if (p <= 1) {
    fail(ErrorCode::kInvalidExponent,
         "growth condition (C) needs p > 1, got p=" + to_string(p));
  }
  if (depth == 0) fail(ErrorCode::kInvalidArgument, "depth must be >= 1");
  if (first < 2) fail(ErrorCode::kInvalidArgument, "n_1 must be >= 2, got " + to_string(first));
  std::vector<Integer> terms{first};
  while (terms.size() < depth) {
    const Integer& n = terms.back();
    Integer next = ceil_power(n, p);
    if (next <= n) next = n + 1;
    terms.push_back(std::move(next));
  }
  return BlockSequence(std::move(terms), p, Origin::kRecursiveA);
}

struct TheoremAPrimeInputs {
  // Nonincreasing, positive, tending to 0.
  Rate b = Rate::power(1, -1);
  // Nondecreasing, positive, tending to infinity.
  Rate h = Rate::power(1, 1);
  Integer seed = 4;

  void validate() const {
    if (seed < 2) fail(ErrorCode::kInvalidArgument, "seed n_1 must be >= 2");
    if (!b.nonincreasing() || (b.kind() != RateKind::kTable && b.exponent() == 0)) {
      fail(ErrorCode::kNotDecreasing, "b must be nonincreasing with limit 0: " + b.describe());
    }
    if (!h.nondecreasing() || (h.kind() != RateKind::kTable && h.exponent() == 0)) {
      fail(ErrorCode::kNotIncreasing, "h must be nondecreasing with limit infinity: " + h.describe());
    }
  }
};

struct TheoremAPrimeOptions {
  PrecisionPolicy precision;
  // h^{-1}(u) is searched in [1, h_inverse_cap].
  Integer h_inverse_cap = pow2(64);
};

// inf{ j >= 1 : h_j >= u } by galloping then bisection.
inline Integer h_inverse(const Rate& h, const Integer& u, const Integer& cap,
                         const PrecisionPolicy& policy = {}) {
  Rational target(u);
  Integer limit = cap;
  if (h.kind() == RateKind::kTable) {
    Integer size = static_cast<unsigned long>(h.values().size());
    if (size < limit) limit = size;
  }
  if (h.at_least(1, target, policy)) return 1;
  Integer lo = 1;  // invariant: h_lo < u
  Integer hi = 2;
  while (!(hi >= limit) && !h.at_least(hi, target, policy)) {
    lo = hi;
    hi *= 2;
  }
  if (hi >= limit) {
    hi = limit;
    if (!h.at_least(hi, target, policy)) {
      fail(ErrorCode::kHInverseDiverged,
           "h^-1(" + to_string(u) + ") not found below " + to_string(limit));
    }
  }
  while (hi - lo > 1) {
    Integer mid = (lo + hi) / 2;
    if (h.at_least(mid, target, policy)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// n_{k+1} = max{ n_k^2, floor(2^k / b(n_k)), h^{-1}(k) }, n_1 = seed.
inline BlockSequence build_theorem_a_prime_sequence(const TheoremAPrimeInputs& inputs,
                                                    std::size_t depth,
                                                    const TheoremAPrimeOptions& options = {}) {
  inputs.validate();
  if (depth == 0) fail(ErrorCode::kInvalidArgument, "depth must be >= 1");
  std::vector<Integer> terms{inputs.seed};
  for (std::size_t k = 1; terms.size() < depth; ++k) {
    const Integer& n = terms.back();
    Integer next = n * n;
    Integer from_b = inputs.b.floor_scaled_inverse(n, pow2(k), options.precision);
    if (from_b > next) next = from_b;
    Integer from_h = h_inverse(inputs.h, Integer(static_cast<unsigned long>(k)),
                               options.h_inverse_cap, options.precision);
    if (from_h > next) next = from_h;
    terms.push_back(std::move(next));
  }
  return BlockSequence(std::move(terms), 2, Origin::kTheoremAPrime);
}

// ---------------------------------------------------------------------------
// Horizon index, noise law, process
// ---------------------------------------------------------------------------

// i(N) with n_{i} <= N < n_{i+1}; zero when N < n_1.
struct HorizonIndex {
  Integer horizon;
  std::size_t index = 0;
};

inline HorizonIndex index_of(const BlockSequence& seq, const Integer& horizon) {
  if (horizon < 1) fail(ErrorCode::kOutOfRange, "horizon N must be >= 1");
  if (horizon >= seq.last()) {
    fail(ErrorCode::kHorizonExceeded,
         "N=" + to_string(horizon) + " >= n_K=" + to_string(seq.last()) +
             "; i(N) is not determined by the truncated sequence");
  }
  const auto& t = seq.terms();
  auto it = std::upper_bound(t.begin(), t.end(), horizon);
  return {horizon, static_cast<std::size_t>(it - t.begin())};
}

struct TernaryLaw {
  Rational u;
  Rational plus;
  Rational zero;
  Rational minus;

  Rational mean() const { return plus - minus; }
  Rational variance() const { return plus + minus - mean() * mean(); }
};

inline TernaryLaw noise_law(const Rational& u) {
  if (u <= 0 || u > 1) fail(ErrorCode::kOutOfRange, "u must lie in (0, 1], got " + to_string(u));
  Rational half = u / 2;
  return {u, half, Rational(1 - u), half};
}

struct ProcessSpec {
  BlockSequence sequence;
  std::vector<TernaryLaw> laws;
};

inline ProcessSpec make_process(const BlockSequence& seq) {
  std::vector<TernaryLaw> laws;
  laws.reserve(seq.depth());
  for (std::size_t k = 1; k <= seq.depth(); ++k) laws.push_back(noise_law(seq.sparsity(k)));
  return {seq, std::move(laws)};
}

// Upper bound on sum_{k>K} 1/n_k over every continuation of seq that keeps
// n_{k+1} >= n_k^p. Lower bounds m_j on n_{K+j} follow the recursive builder;
// once m^(p-1) >= r >= 2 the rest is dominated by a geometric series of
// ratio 1/r.
inline Rational reciprocal_tail_bound(const BlockSequence& seq, std::size_t max_steps = 4096) {
  const Rational& p = seq.exponent();
  Rational p_minus_one = p - 1;
  Rational sum = 0;
  Integer m = seq.last();
  for (std::size_t step = 0; step < max_steps; ++step) {
    Integer next = ceil_power(m, p);
    m = next > m ? next : Integer(m + 1);
    Integer r = floor_power(m, p_minus_one);
    if (r >= 2) {
      return sum + make_rational(r, Integer(m * (r - 1)));
    }
    sum += Rational(Integer(1), m);
  }
  fail(ErrorCode::kCapExceeded, "tail majorant did not reach geometric regime");
}

}  // namespace hmix
