#pragma once

// Diagnostics for uniform integrability, finite-dimensional nullity, escape of
// variance mass, the c_N scaling dichotomy, and beta-mixing bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hmix/construction.hpp"
#include "hmix/error.hpp"
#include "hmix/exact.hpp"
#include "hmix/moments.hpp"
#include "hmix/rate.hpp"
#include "hmix/simulate.hpp"
#include "hmix/stats.hpp"

namespace hmix {

// ---------------------------------------------------------------------------
// Trend verdicts
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMinTrendPoints = 4;

enum class Trend { kStrictlyDecreasing, kStrictlyIncreasing, kNeither };

constexpr std::string_view trend_name(Trend t) {
  switch (t) {
    case Trend::kStrictlyDecreasing: return "decreasing";
    case Trend::kStrictlyIncreasing: return "increasing";
    case Trend::kNeither: return "neither";
  }
  return "neither";
}

// Strict monotonicity over the last ceil(n/2) points. Grids shorter than
// kMinTrendPoints are judged on every point and marked inconclusive.
struct TrendVerdict {
  Trend trend = Trend::kNeither;
  std::size_t window_begin = 0;
  bool conclusive = false;
};

template <class T, class Less = std::less<T>>
TrendVerdict trend_of(const std::vector<T>& values, Less less = {}) {
  TrendVerdict v;
  const std::size_t n = values.size();
  v.conclusive = n >= kMinTrendPoints;
  v.window_begin = v.conclusive ? n - (n + 1) / 2 : 0;
  if (n - v.window_begin < 2) return v;
  bool down = true;
  bool up = true;
  for (std::size_t i = v.window_begin + 1; i < n; ++i) {
    down = down && less(values[i], values[i - 1]);
    up = up && less(values[i - 1], values[i]);
  }
  v.trend = down ? Trend::kStrictlyDecreasing : up ? Trend::kStrictlyIncreasing : Trend::kNeither;
  return v;
}

// ---------------------------------------------------------------------------
// Exact grid evaluation
// ---------------------------------------------------------------------------

inline void check_grid(const std::vector<Integer>& grid) {
  if (grid.empty()) fail(ErrorCode::kInvalidArgument, "grid must contain at least one horizon");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) fail(ErrorCode::kOutOfRange, "grid horizons must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      fail(ErrorCode::kInvalidArgument, "grid horizons must be strictly increasing");
    }
  }
}

// Results in index order; each index runs on its own thread.
template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < count; ++i) {
    pool.emplace_back([&, i] {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// sigma_N^2 at a grid point. The point is refused once the tail bound exceeds
// the truncated total, i.e. the truncation no longer fixes sigma_N^2 within a
// factor of two.
inline VarianceReport grid_variance(const BlockSequence& seq, const Integer& horizon) {
  VarianceReport v = total_variance(seq, horizon);
  if (v.tail_bound > v.truncated_total) {
    fail(ErrorCode::kHorizonExceeded,
         "N=" + to_string(horizon) + ": tail bound " + to_string(v.tail_bound) +
             " exceeds the truncated variance; extend the sequence depth");
  }
  return v;
}

inline std::vector<VarianceReport> grid_variances(const BlockSequence& seq,
                                                  const std::vector<Integer>& grid) {
  check_grid(grid);
  return parallel_map<VarianceReport>(grid.size(),
                                      [&](std::size_t i) { return grid_variance(seq, grid[i]); });
}

// ---------------------------------------------------------------------------
// Uniform integrability
// ---------------------------------------------------------------------------

struct UIProfile {
  std::vector<Integer> horizons;
  std::vector<double> thresholds;
  // tail[h][m] = mean of Z 1{Z > M_m} at horizon h.
  std::vector<std::vector<double>> tail;
  std::vector<double> mean_z;
  std::vector<double> sup;
  std::vector<ConfidenceInterval> sup_ci;
  bool monotone = true;
};

namespace detail {

inline void check_groups(const std::vector<std::vector<double>>& groups) {
  if (groups.empty()) fail(ErrorCode::kEmptyBatch, "no sample batches supplied");
  for (const auto& g : groups) {
    if (g.empty()) fail(ErrorCode::kEmptyBatch, "a sample batch has no replicates");
  }
}

// Per-threshold tail means of one group. Values are binned by how many
// thresholds they exceed and summed from the top bin down, so the result is
// nonincreasing in M in floating point too.
inline std::vector<double> tail_means(const std::vector<double>& z,
                                      const std::vector<double>& thresholds) {
  std::vector<long double> bin(thresholds.size() + 1, 0);
  for (double x : z) {
    const auto above = static_cast<std::size_t>(
        std::lower_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin());
    bin[above] += x;
  }
  std::vector<double> out(thresholds.size());
  long double running = 0;
  for (std::size_t m = thresholds.size(); m-- > 0;) {
    running += bin[m + 1];
    out[m] = static_cast<double>(running / static_cast<long double>(z.size()));
  }
  return out;
}

inline std::vector<std::vector<double>> z_groups(const SampleBatch& batch) {
  std::vector<std::vector<double>> out;
  for (const auto& hb : batch.horizons) {
    std::vector<double> z;
    z.reserve(hb.rows.size());
    for (const auto& r : hb.rows) z.push_back(r.z);
    out.push_back(std::move(z));
  }
  return out;
}

inline std::vector<Integer> batch_horizons(const SampleBatch& batch) {
  std::vector<Integer> out;
  for (const auto& hb : batch.horizons) out.push_back(hb.horizon);
  return out;
}

}  // namespace detail

inline UIProfile ui_tail_profile(const std::vector<std::vector<double>>& z_by_horizon,
                                 const std::vector<Integer>& horizons,
                                 const std::vector<double>& thresholds,
                                 const BootstrapOptions& options = {}) {
  detail::check_groups(z_by_horizon);
  if (horizons.size() != z_by_horizon.size()) {
    fail(ErrorCode::kInvalidArgument, "one horizon label per batch is required");
  }
  if (thresholds.empty()) fail(ErrorCode::kInvalidArgument, "at least one threshold M is required");
  for (std::size_t m = 1; m < thresholds.size(); ++m) {
    if (!(thresholds[m] > thresholds[m - 1])) {
      fail(ErrorCode::kInvalidArgument, "thresholds must be strictly ascending");
    }
  }
  UIProfile out;
  out.horizons = horizons;
  out.thresholds = thresholds;
  for (const auto& z : z_by_horizon) {
    out.tail.push_back(detail::tail_means(z, thresholds));
    out.mean_z.push_back(mean_of(z));
  }
  auto sup_stat = [&](const std::vector<std::vector<double>>& groups) {
    std::vector<double> sup(thresholds.size(), 0);
    for (const auto& z : groups) {
      auto t = detail::tail_means(z, thresholds);
      for (std::size_t m = 0; m < t.size(); ++m) sup[m] = std::max(sup[m], t[m]);
    }
    return sup;
  };
  out.sup_ci = bootstrap_many(z_by_horizon, sup_stat, options);
  for (const auto& ci : out.sup_ci) out.sup.push_back(ci.estimate);
  for (std::size_t h = 0; h < out.tail.size(); ++h) {
    for (std::size_t m = 0; m < thresholds.size(); ++m) {
      const double prev = m == 0 ? out.mean_z[h] : out.tail[h][m - 1];
      // The first threshold is compared to E[Z] with a relative slack for
      // the two different summation orders.
      const double slack = m == 0 ? 1e-12 * std::max(1.0, prev) : 0.0;
      out.monotone = out.monotone && out.tail[h][m] >= 0 && out.tail[h][m] <= prev + slack;
    }
  }
  return out;
}

inline UIProfile ui_tail_profile(const SampleBatch& batch, const std::vector<double>& thresholds,
                                 const BootstrapOptions& options = {}) {
  return ui_tail_profile(detail::z_groups(batch), detail::batch_horizons(batch), thresholds,
                         options);
}

struct LpProfile {
  double p = 1.5;
  std::vector<Integer> horizons;
  std::vector<ConfidenceInterval> moments;  // E[Z^p] per horizon
  // Largest upper confidence limit over the horizons.
  double bound = 0;
};

inline LpProfile lp_profile(const std::vector<std::vector<double>>& z_by_horizon,
                            const std::vector<Integer>& horizons, double p,
                            const BootstrapOptions& options = {}) {
  detail::check_groups(z_by_horizon);
  if (!(p > 1 && p <= 2)) fail(ErrorCode::kInvalidArgument, "L^p exponent must lie in (1, 2]");
  if (horizons.size() != z_by_horizon.size()) {
    fail(ErrorCode::kInvalidArgument, "one horizon label per batch is required");
  }
  LpProfile out;
  out.p = p;
  out.horizons = horizons;
  auto moment = [p](const std::vector<double>& z) {
    long double s = 0;
    for (double x : z) s += std::pow(static_cast<long double>(x), static_cast<long double>(p));
    return static_cast<double>(s / static_cast<long double>(z.size()));
  };
  for (std::size_t h = 0; h < z_by_horizon.size(); ++h) {
    BootstrapOptions o = options;
    o.seed = options.seed + h;
    out.moments.push_back(bootstrap(
        {z_by_horizon[h]}, [&](const std::vector<std::vector<double>>& g) { return moment(g[0]); },
        o));
    out.bound = std::max(out.bound, out.moments.back().hi);
  }
  return out;
}

inline LpProfile lp_profile(const SampleBatch& batch, double p,
                            const BootstrapOptions& options = {}) {
  return lp_profile(detail::z_groups(batch), detail::batch_horizons(batch), p, options);
}

// ---------------------------------------------------------------------------
// Nullity and escape of mass
// ---------------------------------------------------------------------------

struct NullityReport {
  std::size_t coordinate = 1;
  std::vector<Integer> grid;
  // sigma_N^2(f_d) / sigma_N^2(f) of the truncated process.
  std::vector<Rational> ratios;
  // tail bound / truncated total per grid point.
  std::vector<Rational> deficits;
  TrendVerdict trend;

  bool decreasing() const { return trend.trend == Trend::kStrictlyDecreasing; }
};

inline void check_coordinate(const BlockSequence& seq, std::size_t d) {
  if (d < 1 || d > seq.depth()) {
    fail(ErrorCode::kOutOfRange,
         "coordinate d=" + std::to_string(d) + " outside [1, " + std::to_string(seq.depth()) + "]");
  }
}

inline NullityReport coordinate_nullity(const BlockSequence& seq, std::size_t d,
                                        const std::vector<Integer>& grid) {
  check_coordinate(seq, d);
  NullityReport out;
  out.coordinate = d;
  out.grid = grid;
  for (const auto& v : grid_variances(seq, grid)) {
    out.ratios.push_back(v.shares[d - 1]);
    out.deficits.push_back(v.tail_bound / v.truncated_total);
  }
  out.trend = trend_of(out.ratios);
  return out;
}

struct EscapeCertificate {
  std::size_t coordinates = 1;
  Rational threshold;
  std::vector<Integer> grid;
  // low_d(N) = s_1 + ... + s_d.
  std::vector<Rational> low;
  std::vector<Rational> deficits;
  TrendVerdict trend;
  bool below_threshold = false;

  bool holds() const { return trend.trend == Trend::kStrictlyDecreasing && below_threshold; }
};

inline EscapeCertificate escape_certificate(const BlockSequence& seq, std::size_t d,
                                            const std::vector<Integer>& grid,
                                            const Rational& threshold = Rational(3, 10)) {
  check_coordinate(seq, d);
  EscapeCertificate out;
  out.coordinates = d;
  out.threshold = threshold;
  out.grid = grid;
  for (const auto& v : grid_variances(seq, grid)) {
    Rational low = 0;
    for (std::size_t k = 0; k < d; ++k) low += v.shares[k];
    out.low.push_back(low);
    out.deficits.push_back(v.tail_bound / v.truncated_total);
  }
  out.trend = trend_of(out.low);
  out.below_threshold = out.low.back() < threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Scaling dichotomy
// ---------------------------------------------------------------------------

struct ScalingSpec {
  // Unset means c_N = sigma_N(f) itself.
  std::optional<Rate> c;
  std::vector<Integer> grid;

  static ScalingSpec parse(std::string_view text, std::vector<Integer> grid) {
    ScalingSpec s;
    s.grid = std::move(grid);
    if (text != "sigma") s.c = Rate::parse(text);
    return s;
  }

  std::string describe() const { return c ? c->describe() : "sigma"; }

  void validate() const {
    check_grid(grid);
    if (!c) return;
    const bool grows = c->kind() == RateKind::kTable ? c->nondecreasing()
                                                      : c->nondecreasing() && c->exponent() > 0;
    if (!grows) fail(ErrorCode::kNotIncreasing, "c_N must be nondecreasing with limit infinity");
    for (const auto& n : grid) {
      if (!(c->value(n) > 0)) fail(ErrorCode::kInvalidArgument, "c_N must be positive on the grid");
    }
  }
};

struct ScalingPoint {
  Integer horizon;
  Rational sigma2;
  // (sigma_N / c_N)^2 when c_N^2 is rational.
  std::optional<Rational> ratio_squared;
  double ratio = 0;
  // Ratio with the tail bound added to sigma_N^2.
  double ratio_upper = 0;
};

struct ScalingReport {
  std::string c;
  std::vector<ScalingPoint> points;
  TrendVerdict trend;
  // "vanishing" or "non-vanishing".
  std::string verdict;
  // Smallest ratio over the verdict window; witness points stay >= r.
  double r = 0;
  std::vector<Integer> witness;
};

inline ScalingReport scaling_dichotomy(const BlockSequence& seq, const ScalingSpec& spec) {
  spec.validate();
  ScalingReport out;
  out.c = spec.describe();
  bool exact = true;
  for (const auto& v : grid_variances(seq, spec.grid)) {
    ScalingPoint p;
    p.horizon = v.horizon;
    p.sigma2 = v.truncated_total;
    const double sigma = std::sqrt(to_double(v.truncated_total));
    const double sigma_upper = std::sqrt(to_double(Rational(v.truncated_total + v.tail_bound)));
    if (!spec.c) {
      p.ratio_squared = Rational(1);
      p.ratio = 1;
      p.ratio_upper = sigma_upper / sigma;
    } else {
      if (auto c2 = spec.c->exact_square(v.horizon)) p.ratio_squared = Rational(v.truncated_total / *c2);
      const double c = spec.c->value(v.horizon);
      p.ratio = p.ratio_squared ? std::sqrt(to_double(*p.ratio_squared)) : sigma / c;
      p.ratio_upper = sigma_upper / c;
    }
    exact = exact && p.ratio_squared.has_value();
    out.points.push_back(std::move(p));
  }
  if (exact) {
    std::vector<Rational> r2;
    for (const auto& p : out.points) r2.push_back(*p.ratio_squared);
    out.trend = trend_of(r2);
  } else {
    std::vector<double> r;
    for (const auto& p : out.points) r.push_back(p.ratio);
    out.trend = trend_of(r);
  }
  out.verdict = out.trend.trend == Trend::kStrictlyDecreasing ? "vanishing" : "non-vanishing";
  out.r = out.points[out.trend.window_begin].ratio;
  for (std::size_t i = out.trend.window_begin; i < out.points.size(); ++i) {
    out.r = std::min(out.r, out.points[i].ratio);
  }
  if (out.verdict == "non-vanishing") {
    for (const auto& p : out.points) {
      if (p.ratio >= out.r) out.witness.push_back(p.horizon);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Beta-mixing
// ---------------------------------------------------------------------------

struct MixingBoundEntry {
  Integer lag;
  // sum over truncated components with n_j > lag of 4/n_j.
  Rational head;
  // 4 sum_{k>K} 1/n_k, bounded through condition (C).
  Rational tail;
  // min(1, head + tail).
  Rational bound;
  // bound * lag^q.
  double normalized = 0;
};

struct MixingBoundReport {
  Rational q;
  std::vector<MixingBoundEntry> entries;
  bool nonincreasing = true;
  bool within_unit = true;
};

namespace detail {

inline MixingBoundEntry mixing_entry(const BlockSequence& seq, const Integer& lag,
                                     const Rational& tail, double q) {
  if (lag < 0) fail(ErrorCode::kOutOfRange, "lag must be >= 0");
  MixingBoundEntry e;
  e.lag = lag;
  e.head = 0;
  for (const Integer& n : seq.terms()) {
    if (n > lag) e.head += make_rational(4, n);
  }
  e.tail = tail;
  e.bound = e.head + e.tail;
  if (e.bound > 1) e.bound = 1;
  e.normalized = to_double(e.bound) * std::pow(to_double(lag), q);
  return e;
}

}  // namespace detail

inline MixingBoundEntry beta_upper_bound(const BlockSequence& seq, const Integer& lag) {
  const Rational q = 1 / seq.exponent();
  return detail::mixing_entry(seq, lag, 4 * reciprocal_tail_bound(seq), to_double(q));
}

inline MixingBoundReport mixing_bound_report(const BlockSequence& seq,
                                             const std::vector<Integer>& lags) {
  MixingBoundReport out;
  out.q = 1 / seq.exponent();
  const Rational tail = 4 * reciprocal_tail_bound(seq);
  for (const auto& l : lags) {
    out.entries.push_back(detail::mixing_entry(seq, l, tail, to_double(out.q)));
    const auto& e = out.entries.back();
    out.within_unit = out.within_unit && e.bound >= 0 && e.bound <= 1;
    if (out.entries.size() > 1) {
      const auto& prev = out.entries[out.entries.size() - 2];
      if (e.lag >= prev.lag) out.nonincreasing = out.nonincreasing && e.bound <= prev.bound;
    }
  }
  return out;
}

// 1, then round(2^(j/per_octave)) up to `hi`, deduplicated, with `hi` last.
inline std::vector<Integer> log_lag_grid(const Integer& hi, unsigned per_octave = 2) {
  if (hi < 1) fail(ErrorCode::kOutOfRange, "lag grid upper end must be >= 1");
  if (per_octave == 0) fail(ErrorCode::kInvalidArgument, "per_octave must be >= 1");
  std::vector<Integer> out{Integer(1)};
  const double top = to_double(hi);
  for (unsigned j = 1;; ++j) {
    const double x = std::round(std::exp2(static_cast<double>(j) / per_octave));
    if (x >= top) break;
    Integer v(x);
    if (v > out.back()) out.push_back(v);
  }
  if (hi > out.back()) out.push_back(hi);
  return out;
}

// The single-component counterpart of beta_upper_bound.
inline Rational single_component_bound(const Integer& n, const Integer& gap) {
  if (gap >= n) return 0;
  Rational b = make_rational(4, n);
  return b > 1 ? Rational(1) : b;
}

// Windowed beta between (f_k(-m), ..., f_k(0)) and (f_k(g), ..., f_k(g+m)).
struct TinyBetaSpec {
  Integer n = 2;
  std::size_t window = 0;  // m
  std::size_t gap = 1;     // g
  std::size_t cap = 12;    // max ternary indices enumerated
};

struct TinyBetaResult {
  Rational beta;
  // alpha <= beta / 2.
  Rational alpha_bound;
  Rational single_component_bound;
  std::size_t indices = 0;
  std::uint64_t states = 0;
  // False when the windows were disjoint and the cap ruled out enumeration.
  bool enumerated = false;
};

inline TinyBetaResult beta_exact_tiny(const TinyBetaSpec& spec) {
  if (spec.n < 2) fail(ErrorCode::kInvalidArgument, "component length n_k must be >= 2");
  if (spec.n > 1 << 20) fail(ErrorCode::kCapExceeded, "n_k too large for enumeration");
  const std::int64_t n = spec.n.get_si();
  const auto m = static_cast<std::int64_t>(spec.window);
  const auto g = static_cast<std::int64_t>(spec.gap);
  TinyBetaResult out;
  out.single_component_bound = single_component_bound(spec.n, Integer(static_cast<long>(g)));

  // f(t) reads xi(t-n+1..t).
  const std::int64_t past_lo = -m - n + 1, past_hi = 0;
  const std::int64_t fut_lo = g - n + 1, fut_hi = g + m;
  std::vector<std::int64_t> indices;
  for (std::int64_t j = past_lo; j <= past_hi; ++j) indices.push_back(j);
  for (std::int64_t j = std::max(fut_lo, past_hi + 1); j <= fut_hi; ++j) indices.push_back(j);
  out.indices = indices.size();
  if (out.indices > spec.cap) {
    if (fut_lo > past_hi) {
      out.beta = 0;
      out.alpha_bound = 0;
      return out;
    }
    fail(ErrorCode::kCapExceeded, std::to_string(out.indices) + " noise indices exceed the cap " +
                                      std::to_string(spec.cap));
  }
  out.enumerated = true;

  const std::size_t count = indices.size();
  std::vector<Integer> zero_power(count + 1);
  const Integer zero_weight = Integer(2 * n * n - 2);
  zero_power[0] = 1;
  for (std::size_t i = 1; i <= count; ++i) zero_power[i] = zero_power[i - 1] * zero_weight;

  std::map<std::vector<std::int64_t>, std::size_t> past_ids, fut_ids;
  std::map<std::pair<std::size_t, std::size_t>, Integer> joint;
  std::vector<Integer> past_w, fut_w;
  auto id_of = [](std::map<std::vector<std::int64_t>, std::size_t>& ids,
                  std::vector<Integer>& weights, std::vector<std::int64_t>&& key) {
    auto [it, inserted] = ids.emplace(std::move(key), weights.size());
    if (inserted) weights.emplace_back(0);
    return it->second;
  };

  std::vector<int> state(count, -1);
  std::vector<std::int64_t> past(static_cast<std::size_t>(m + 1)), fut(static_cast<std::size_t>(m + 1));
  const auto xi = [&](std::int64_t j) {
    return state[static_cast<std::size_t>(
        std::lower_bound(indices.begin(), indices.end(), j) - indices.begin())];
  };
  for (;;) {
    std::size_t zeros = 0;
    for (int s : state) zeros += s == 0;
    for (std::int64_t t = 0; t <= m; ++t) {
      std::int64_t a = 0, b = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        a += xi(-t - i);
        b += xi(g + t - i);
      }
      past[static_cast<std::size_t>(t)] = a;
      fut[static_cast<std::size_t>(t)] = b;
    }
    const Integer& w = zero_power[zeros];
    const std::size_t x = id_of(past_ids, past_w, std::vector<std::int64_t>(past));
    const std::size_t y = id_of(fut_ids, fut_w, std::vector<std::int64_t>(fut));
    past_w[x] += w;
    fut_w[y] += w;
    joint[{x, y}] += w;
    ++out.states;
    std::size_t i = 0;
    while (i < count && state[i] == 1) state[i++] = -1;
    if (i == count) break;
    ++state[i];
  }

  // beta = 1/2 sum |P(x,y) - P(x)P(y)|; cells off the joint support add P(x)P(y).
  const Integer d = pow(Integer(2 * n * n), count);
  const Integer d2 = d * d;
  Integer acc = 0;
  Integer on_support = 0;
  for (const auto& [xy, wxy] : joint) {
    const Integer prod = past_w[xy.first] * fut_w[xy.second];
    acc += abs(Integer(wxy * d - prod));
    on_support += prod;
  }
  acc += d2 - on_support;
  out.beta = make_rational(acc, Integer(2 * d2));
  out.alpha_bound = out.beta / 2;
  return out;
}

}  // namespace hmix
