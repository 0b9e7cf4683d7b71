#pragma once

// Exact second-order calculus of the partial sums S_N(f_k).
//
// S_N(f_k) = sum_{t=0}^{N-1} sum_{i=0}^{n_k-1} xi_k(t-i) = sum_j w_j xi_k(j),
// where w_j counts the pairs (t, i) with t - i = j. The support is
// [1-n_k, N-1] and sum_j w_j = N n_k.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmix/construction.hpp"
#include "hmix/error.hpp"
#include "hmix/exact.hpp"

namespace hmix {

// Overlap count max(0, min(N-1, j+n-1) - max(0, j) + 1). Works for
// std::int64_t and Integer.
template <class Int>
Int weight(const Int& j, const Int& horizon, const Int& n) {
  Int hi = horizon - 1;
  Int top = j + n - 1;
  if (top < hi) hi = top;
  Int lo = j;
  if (lo < 0) lo = 0;
  Int w = hi - lo + 1;
  if (w < 0) w = 0;
  return w;
}

// The same coefficient read off the three-range linear representation,
// split on N < n versus N >= n.
template <class Int>
Int piecewise_weight(const Int& j, const Int& horizon, const Int& n) {
  const Int& N = horizon;
  if (j < 1 - n || j > N - 1) return Int(0);
  if (N < n) {
    if (j >= 0) return Int(N - j);            // j in [0, N-1]
    if (j <= N - n) return Int(n + j);        // j in [1-n, N-n]
    return N;                                 // j in [N-n+1, -1]
  }
  if (j >= 0 && j <= N - n) return n;         // j in [0, N-n]
  if (j >= N - n + 1) return Int(N - j);      // j in [N-n+1, N-1]
  return Int(n + j);                          // j in [1-n, -1]
}

inline void check_component(const Integer& n, const Integer& horizon) {
  if (n < 2) fail(ErrorCode::kInvalidArgument, "n_k must be >= 2, got " + to_string(n));
  if (horizon < 1) fail(ErrorCode::kOutOfRange, "horizon N must be >= 1, got " + to_string(horizon));
}

// Coefficients of xi_k(j) in S_N(f_k), kept in closed form.
class WeightProfile {
 public:
  static constexpr std::size_t kDefaultCap = 1'000'000;

  WeightProfile(Integer n, Integer horizon) : n_(std::move(n)), horizon_(std::move(horizon)) {
    check_component(n_, horizon_);
  }

  const Integer& n() const { return n_; }
  const Integer& horizon() const { return horizon_; }
  Integer first() const { return 1 - n_; }
  Integer last() const { return horizon_ - 1; }
  Integer support_size() const { return horizon_ + n_ - 1; }
  Integer total_weight() const { return horizon_ * n_; }
  Integer at(const Integer& j) const { return weight(j, horizon_, n_); }

  // sum_j w_j^2 in closed form.
  Integer sum_of_squares() const {
    if (horizon_ < n_) {
      return 2 * hmix::sum_of_squares(horizon_) + (n_ - horizon_ - 1) * horizon_ * horizon_;
    }
    return n_ * n_ * (horizon_ - n_ + 1) + 2 * hmix::sum_of_squares(n_ - 1);
  }

  // w_j for j = first()..last().
  std::vector<std::int64_t> materialize(std::size_t cap = kDefaultCap) const {
    if (support_size() > static_cast<unsigned long>(cap)) {
      fail(ErrorCode::kCapExceeded, "weight profile has " + to_string(support_size()) +
                                        " slots, cap is " + std::to_string(cap));
    }
    std::int64_t n = n_.get_si();
    std::int64_t horizon = horizon_.get_si();
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(n + horizon - 1));
    for (std::int64_t j = 1 - n; j <= horizon - 1; ++j) out.push_back(weight(j, horizon, n));
    return out;
  }

 private:
  Integer n_;
  Integer horizon_;
};

// sigma_N^2(f_k) = E[S_N(f_k)^2] from the two-branch closed form.
inline Rational component_variance(const Integer& n, const Integer& horizon) {
  check_component(n, horizon);
  const Integer& N = horizon;
  Integer numerator;
  if (N < n) {
    numerator = 2 * sum_of_squares(N) + (n - N - 1) * N * N;
  } else {
    numerator = n * n * (N - n + 1) + 2 * sum_of_squares(n - 1);
  }
  return make_rational(numerator, Integer(n * n));
}

struct RationalInterval {
  Rational lo;
  Rational hi;
};

// sigma_N^2 of the truncated process plus a rigorous bound on the rest.
struct VarianceReport {
  Integer horizon;
  std::vector<Integer> terms;
  std::vector<Rational> components;
  Rational truncated_total;
  // Upper bound on sum_{k>K} sigma_N^2(f_k): N^2 sum_{k>K} 1/n_k.
  Rational tail_bound;
  // components[k] / truncated_total.
  std::vector<Rational> shares;
  // i(N) when N < n_K, otherwise unset (not determined by the truncation).
  std::optional<std::size_t> index;
  // [truncated, truncated + tail] / (N i(N)) when i(N) >= 1.
  std::optional<RationalInterval> ratio;

  RationalInterval total() const { return {truncated_total, truncated_total + tail_bound}; }
};

// Works for any N >= 1; the tail bound sigma_N^2(f_k) <= N min(N, n_k)/n_k <= N^2/n_k
// does not need N < n_K.
inline VarianceReport total_variance(const BlockSequence& seq, const Integer& horizon) {
  if (horizon < 1) fail(ErrorCode::kOutOfRange, "horizon N must be >= 1");
  VarianceReport report;
  report.horizon = horizon;
  report.terms = seq.terms();
  report.truncated_total = 0;
  for (const Integer& n : seq.terms()) {
    report.components.push_back(component_variance(n, horizon));
    report.truncated_total += report.components.back();
  }
  report.tail_bound = Rational(horizon * horizon) * reciprocal_tail_bound(seq);
  for (const Rational& c : report.components) report.shares.push_back(c / report.truncated_total);
  if (horizon < seq.last()) {
    std::size_t i = index_of(seq, horizon).index;
    report.index = i;
    if (i >= 1) {
      Rational scale(horizon * static_cast<unsigned long>(i));
      report.ratio = RationalInterval{report.truncated_total / scale,
                                      (report.truncated_total + report.tail_bound) / scale};
    }
  }
  return report;
}

struct MassProfile {
  Integer horizon;
  std::vector<Rational> shares;
  // low[d-1] = s_1 + ... + s_d.
  std::vector<Rational> cumulative;
  // 1 - cumulative[d-1].
  std::vector<Rational> tail_shares;
  // tail_bound / truncated_total: mass the truncation may be missing.
  Rational deficit_bound;
};

inline MassProfile mass_profile(const BlockSequence& seq, const Integer& horizon) {
  VarianceReport v = total_variance(seq, horizon);
  MassProfile out{horizon, v.shares, {}, {}, v.tail_bound / v.truncated_total};
  Rational running = 0;
  for (const Rational& s : v.shares) {
    running += s;
    out.cumulative.push_back(running);
    out.tail_shares.push_back(1 - running);
  }
  return out;
}

// sigma_N^2(f) / (N i(N)) as an interval; requires n_1 <= N < n_K.
inline RationalInterval asymptotic_ratio(const BlockSequence& seq, const Integer& horizon) {
  HorizonIndex idx = index_of(seq, horizon);
  if (idx.index == 0) {
    fail(ErrorCode::kUndefinedIndex,
         "N=" + to_string(horizon) + " < n_1=" + to_string(seq.term(1)) + ", i(N) = 0");
  }
  return *total_variance(seq, horizon).ratio;
}

// ---------------------------------------------------------------------------
// Exact distributions
// ---------------------------------------------------------------------------

// Law of an integer-valued variable on [min_value, min_value + size).
struct ExactPmf {
  std::int64_t min_value = 0;
  std::vector<Rational> probabilities;

  std::int64_t max_value() const {
    return min_value + static_cast<std::int64_t>(probabilities.size()) - 1;
  }

  Rational probability(std::int64_t value) const {
    if (value < min_value || value > max_value()) return 0;
    return probabilities[static_cast<std::size_t>(value - min_value)];
  }

  Rational total() const {
    Rational s = 0;
    for (const auto& p : probabilities) s += p;
    return s;
  }

  // E[X^order].
  Rational moment(unsigned order) const {
    Rational s = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      Integer x = static_cast<long>(min_value + static_cast<std::int64_t>(i));
      s += Rational(pow(x, order)) * probabilities[i];
    }
    return s;
  }

  // E|X|^order.
  Rational absolute_moment(unsigned order) const {
    Rational s = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      Integer x = static_cast<long>(min_value + static_cast<std::int64_t>(i));
      s += Rational(pow(Integer(abs(x)), order)) * probabilities[i];
    }
    return s;
  }

  Rational mean() const { return moment(1); }
  Rational variance() const {
    Rational m = mean();
    return moment(2) - m * m;
  }
};

// Exact law of S_N(f_k) by sequential convolution over the support, in
// integer arithmetic over the common denominator (2 n^2)^(N+n-1).
inline ExactPmf partial_sum_pmf(const Integer& n, const Integer& horizon,
                                std::size_t cap = 1 << 16) {
  check_component(n, horizon);
  WeightProfile profile(n, horizon);
  if (profile.total_weight() > static_cast<unsigned long>(cap)) {
    fail(ErrorCode::kCapExceeded, "N n_k = " + to_string(profile.total_weight()) +
                                      " exceeds the PMF cap " + std::to_string(cap));
  }
  const std::int64_t span = profile.total_weight().get_si();
  const Integer zero_weight = 2 * n * n - 2;  // P(0) = (2n^2 - 2) / (2n^2)
  std::vector<Integer> counts(static_cast<std::size_t>(2 * span + 1), 0);
  counts[static_cast<std::size_t>(span)] = 1;
  std::int64_t reach = 0;
  for (std::int64_t w : profile.materialize(cap)) {
    std::vector<Integer> next(counts.size(), 0);
    for (std::int64_t v = -reach; v <= reach; ++v) {
      const Integer& c = counts[static_cast<std::size_t>(v + span)];
      if (c == 0) continue;
      next[static_cast<std::size_t>(v + span)] += c * zero_weight;
      next[static_cast<std::size_t>(v + w + span)] += c;
      next[static_cast<std::size_t>(v - w + span)] += c;
    }
    counts.swap(next);
    reach += w;
  }
  Integer denominator = pow(Integer(2 * n * n), to_ulong(profile.support_size(), "support"));
  ExactPmf pmf;
  pmf.min_value = -span;
  pmf.probabilities.reserve(counts.size());
  for (const Integer& c : counts) pmf.probabilities.push_back(make_rational(c, denominator));
  return pmf;
}

// ---------------------------------------------------------------------------
// Moment brackets
// ---------------------------------------------------------------------------

struct RosenthalInput {
  double q = 2;
  std::vector<double> absolute_moments;  // E|Y_j|^q
  std::vector<double> second_moments;    // E[Y_j^2]
};

// sum_j E|Y_j|^q + (sum_j E[Y_j^2])^(q/2), the Rosenthal bracket with C = 1.
inline double rosenthal_bracket(const RosenthalInput& input) {
  if (!(input.q >= 2)) fail(ErrorCode::kInvalidArgument, "Rosenthal exponent q must be >= 2");
  if (input.absolute_moments.empty() ||
      input.absolute_moments.size() != input.second_moments.size()) {
    fail(ErrorCode::kInvalidArgument, "Rosenthal input needs M >= 1 matching terms");
  }
  double a = 0;
  double b = 0;
  for (std::size_t j = 0; j < input.absolute_moments.size(); ++j) {
    if (input.absolute_moments[j] < 0 || input.second_moments[j] < 0) {
      fail(ErrorCode::kInvalidArgument, "moments must be nonnegative");
    }
    a += input.absolute_moments[j];
    b += input.second_moments[j];
  }
  return a + std::pow(b, input.q / 2);
}

// E|f_k|^(2p) against the majorant n_k^-1 + n_k^-p.
struct MomentCheck {
  Integer n;
  unsigned order = 1;  // p
  Rational moment;     // E|f_k|^(2p)
  Rational scaled;     // n_k E|f_k|^(2p)
  Rational majorant;   // n_k^-1 + n_k^-p
  Rational ratio;      // moment / majorant
};

// f_k has the law of S_1(f_k).
inline MomentCheck moment_check(const Integer& n, unsigned order, std::size_t cap = 1 << 16) {
  if (order < 1) fail(ErrorCode::kInvalidArgument, "moment order p must be >= 1");
  ExactPmf pmf = partial_sum_pmf(n, 1, cap);
  MomentCheck out;
  out.n = n;
  out.order = order;
  out.moment = pmf.absolute_moment(2 * order);
  out.scaled = Rational(n) * out.moment;
  out.majorant = make_rational(1, n) + make_rational(1, pow(n, order));
  out.ratio = out.moment / out.majorant;
  return out;
}

}  // namespace hmix
