#pragma once

// Sparse Monte Carlo for S_N(f_k) and the vector S_N(f).
//
// Only the nonzero noise variables are generated: their count on the
// support is Binomial(N + n_k - 1, n_k^-2), their positions are a uniform
// subset and their signs are fair coins. Work is proportional to the number
// of events, not to N + n_k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hmix/construction.hpp"
#include "hmix/error.hpp"
#include "hmix/exact.hpp"
#include "hmix/moments.hpp"
#include "hmix/random.hpp"

namespace hmix {

// Largest n_k + N the int64 index arithmetic accepts.
inline constexpr std::int64_t kMaxSimulatedSpan = std::int64_t{1} << 62;

struct NoiseEvent {
  std::int64_t index;
  int sign;
};

// Nonzero ternary(u) variables on [first, first + length), ascending index.
inline std::vector<NoiseEvent> draw_events(std::int64_t first, std::uint64_t length, double u,
                                           Stream& stream, EventCounter* counter = nullptr) {
  const std::uint64_t count = inversion::binomial(length, u, stream, counter);
  std::vector<std::uint64_t> offsets = inversion::distinct_offsets(count, length, stream);
  std::vector<NoiseEvent> events;
  events.reserve(offsets.size());
  for (std::uint64_t off : offsets) {
    events.push_back({first + static_cast<std::int64_t>(off), stream.coin() ? 1 : -1});
  }
  if (counter) counter->events += events.size();
  return events;
}

// Machine-word view of one component, checked for index overflow.
struct SimComponent {
  std::int64_t n;
  double u;
};

inline SimComponent sim_component(const Integer& n, const Integer& max_horizon) {
  check_component(n, max_horizon);
  if (n + max_horizon >= kMaxSimulatedSpan) {
    fail(ErrorCode::kCapExceeded,
         "n_k + N = " + to_string(Integer(n + max_horizon)) + " is beyond the simulator's index range");
  }
  const double nd = n.get_d();
  return {n.get_si(), 1.0 / (nd * nd)};
}

struct ComponentSum {
  std::size_t k = 1;
  std::int64_t value = 0;
};

// S_N(f_k) for each horizon from one noise realization on [1-n, max(N)-1].
inline std::vector<std::int64_t> sample_component_trajectory(const SimComponent& c,
                                                             const std::vector<std::int64_t>& horizons,
                                                             Stream& stream,
                                                             EventCounter* counter = nullptr) {
  const std::int64_t widest = *std::max_element(horizons.begin(), horizons.end());
  const std::int64_t first = 1 - c.n;
  const auto length = static_cast<std::uint64_t>(widest + c.n - 1);
  std::vector<NoiseEvent> events = draw_events(first, length, c.u, stream, counter);
  std::vector<std::int64_t> sums(horizons.size(), 0);
  for (const NoiseEvent& e : events) {
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      sums[h] += e.sign * weight<std::int64_t>(e.index, horizons[h], c.n);
    }
  }
  return sums;
}

inline ComponentSum sample_component_sum(const Integer& n, const Integer& horizon, Stream& stream,
                                         std::size_t k = 1, EventCounter* counter = nullptr) {
  SimComponent c = sim_component(n, horizon);
  return {k, sample_component_trajectory(c, {horizon.get_si()}, stream, counter).front()};
}

enum class TruncationPolicy { kError, kTruncateWithTailNote };

constexpr std::string_view policy_name(TruncationPolicy p) {
  return p == TruncationPolicy::kError ? "error" : "truncate_with_tail_note";
}

inline TruncationPolicy parse_policy(std::string_view name) {
  if (name == "error") return TruncationPolicy::kError;
  if (name == "truncate_with_tail_note") return TruncationPolicy::kTruncateWithTailNote;
  fail(ErrorCode::kParseError, "unknown truncation policy '" + std::string(name) + "'");
}

struct SampleConfig {
  std::uint64_t seed = 0;
  std::uint64_t replicates = 1;
  // Components 1..active are simulated; 0 means all K.
  std::size_t active_components = 0;
  std::vector<Integer> horizons;
  TruncationPolicy policy = TruncationPolicy::kError;
  // Worker count; 0 uses the hardware concurrency. Never affects results.
  unsigned threads = 1;

  std::size_t active(const BlockSequence& seq) const {
    return active_components == 0 ? seq.depth() : active_components;
  }

  void validate(const BlockSequence& seq) const {
    if (replicates < 1) fail(ErrorCode::kInvalidArgument, "replicates R must be >= 1");
    if (horizons.empty()) fail(ErrorCode::kInvalidArgument, "at least one horizon is required");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      if (horizons[i] < 1) fail(ErrorCode::kOutOfRange, "horizons must be >= 1");
      if (i > 0 && horizons[i] <= horizons[i - 1]) {
        fail(ErrorCode::kInvalidArgument, "horizons must be strictly increasing");
      }
    }
    if (active(seq) > seq.depth()) {
      fail(ErrorCode::kInvalidArgument, "component cap exceeds the sequence depth");
    }
    if (policy == TruncationPolicy::kError && horizons.back() >= seq.last()) {
      fail(ErrorCode::kHorizonExceeded, "horizon " + to_string(horizons.back()) +
                                            " >= n_K = " + to_string(seq.last()));
    }
  }
};

// One replicate at one horizon.
struct SampleRecord {
  std::vector<std::int64_t> sums;  // S_N(f_k), k = 1..active
  double norm2 = 0;                // sum_k S_N(f_k)^2
  double z = 0;                    // norm2 / truncated sigma_N^2
};

struct HorizonBatch {
  Integer horizon;
  // sigma_N^2 of the simulated components (k <= active), exact.
  Rational sigma2;
  std::vector<SampleRecord> rows;
};

struct SampleBatch {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::size_t active = 0;
  std::vector<HorizonBatch> horizons;
  std::string note;
  EventCounter work;
};

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Canonical description of everything that determines a batch.
inline std::string describe(const BlockSequence& seq, const SampleConfig& config) {
  std::string s = "seq=";
  for (const auto& t : seq.terms()) s += to_string(t) + ",";
  s += ";p=" + to_string(seq.exponent());
  s += ";seed=" + std::to_string(config.seed);
  s += ";R=" + std::to_string(config.replicates);
  s += ";active=" + std::to_string(config.active(seq));
  s += ";N=";
  for (const auto& n : config.horizons) s += to_string(n) + ",";
  s += ";policy=" + std::string(policy_name(config.policy));
  return s;
}

inline void finish_record(SampleRecord& r, double sigma2) {
  long double acc = 0;
  for (std::int64_t v : r.sums) acc += static_cast<long double>(v) * static_cast<long double>(v);
  r.norm2 = static_cast<double>(acc);
  r.z = r.norm2 / sigma2;
}

namespace detail {

inline std::vector<SimComponent> sim_components(const BlockSequence& seq, std::size_t active,
                                                const Integer& widest) {
  std::vector<SimComponent> out;
  out.reserve(active);
  for (std::size_t k = 1; k <= active; ++k) out.push_back(sim_component(seq.term(k), widest));
  return out;
}

inline std::vector<std::int64_t> machine_horizons(const std::vector<Integer>& horizons) {
  std::vector<std::int64_t> out;
  for (const auto& h : horizons) out.push_back(to_int64(h, "horizon"));
  return out;
}

inline std::vector<Rational> truncated_sigma2(const BlockSequence& seq, std::size_t active,
                                              const std::vector<Integer>& horizons) {
  std::vector<Rational> out;
  for (const auto& n : horizons) {
    Rational s = 0;
    for (std::size_t k = 1; k <= active; ++k) s += component_variance(seq.term(k), n);
    out.push_back(s);
  }
  return out;
}

// Rows of replicate r, one per horizon; component k uses stream (seed, r, k).
inline std::vector<SampleRecord> replicate_rows(const std::vector<SimComponent>& comps,
                                                const std::vector<std::int64_t>& horizons,
                                                const std::vector<double>& sigma2,
                                                std::uint64_t seed, std::uint64_t replicate,
                                                EventCounter* counter) {
  std::vector<SampleRecord> rows(horizons.size());
  for (auto& r : rows) r.sums.resize(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    Stream stream = derive_stream(seed, replicate, k + 1);
    std::vector<std::int64_t> sums = sample_component_trajectory(comps[k], horizons, stream, counter);
    for (std::size_t h = 0; h < horizons.size(); ++h) rows[h].sums[k] = sums[h];
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) finish_record(rows[h], sigma2[h]);
  return rows;
}

}  // namespace detail

// Coupled rows across horizons for one replicate.
inline std::vector<SampleRecord> sample_trajectory(const BlockSequence& seq,
                                                   const std::vector<Integer>& horizons,
                                                   std::uint64_t seed, std::uint64_t replicate,
                                                   std::size_t active,
                                                   EventCounter* counter = nullptr) {
  if (active == 0 || active > seq.depth()) {
    fail(ErrorCode::kInvalidArgument, "component cap must lie in [1, K]");
  }
  SampleConfig cfg{seed, 1, active, horizons, TruncationPolicy::kTruncateWithTailNote, 1};
  cfg.validate(seq);
  auto comps = detail::sim_components(seq, active, horizons.back());
  std::vector<double> sigma2;
  for (const auto& s : detail::truncated_sigma2(seq, active, horizons)) sigma2.push_back(to_double(s));
  return detail::replicate_rows(comps, detail::machine_horizons(horizons), sigma2, seed, replicate,
                                counter);
}

// Independent components k <= active at a single horizon.
inline SampleRecord sample_vector(const BlockSequence& seq, const Integer& horizon,
                                  std::uint64_t seed, std::uint64_t replicate, std::size_t active,
                                  EventCounter* counter = nullptr) {
  return sample_trajectory(seq, {horizon}, seed, replicate, active, counter).front();
}

inline SampleBatch simulate_batch(const BlockSequence& seq, const SampleConfig& config) {
  config.validate(seq);
  const std::size_t active = config.active(seq);
  auto comps = detail::sim_components(seq, active, config.horizons.back());
  auto horizons = detail::machine_horizons(config.horizons);
  auto exact_sigma2 = detail::truncated_sigma2(seq, active, config.horizons);
  std::vector<double> sigma2;
  for (const auto& s : exact_sigma2) sigma2.push_back(to_double(s));

  SampleBatch batch;
  batch.seed = config.seed;
  batch.config_hash = fnv1a64(describe(seq, config));
  batch.active = active;
  if (config.horizons.back() >= seq.last() || active < seq.depth()) {
    batch.note = "Z uses sigma_N^2 of components 1.." + std::to_string(active) +
                 "; higher components are excluded (see the variance report tail bound)";
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    batch.horizons.push_back({config.horizons[h], exact_sigma2[h], {}});
    batch.horizons.back().rows.resize(config.replicates);
  }

  unsigned workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : config.threads;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.replicates));
  std::vector<EventCounter> counters(workers);
  auto run_range = [&](unsigned w, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t r = begin; r < end; ++r) {
      auto rows = detail::replicate_rows(comps, horizons, sigma2, config.seed, r, &counters[w]);
      for (std::size_t h = 0; h < rows.size(); ++h) batch.horizons[h].rows[r] = std::move(rows[h]);
    }
  };
  if (workers <= 1) {
    run_range(0, 0, config.replicates);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t per = (config.replicates + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = std::min<std::uint64_t>(config.replicates, w * per);
      const std::uint64_t end = std::min<std::uint64_t>(config.replicates, begin + per);
      pool.emplace_back(run_range, w, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& c : counters) {
    batch.work.events += c.events;
    batch.work.binomial_steps += c.binomial_steps;
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

// Type-7 (linear interpolation) sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct HorizonSummary {
  Integer horizon;
  double sigma2 = 0;
  double mean_z = 0;
  double variance_z = 0;
  double mean_norm2 = 0;
  std::vector<double> component_means;
  std::vector<double> component_variances;
  std::vector<std::pair<double, double>> z_quantiles;  // (level, value)
};

inline std::vector<HorizonSummary> summarize(const SampleBatch& batch) {
  std::vector<HorizonSummary> out;
  for (const auto& hb : batch.horizons) {
    HorizonSummary s;
    s.horizon = hb.horizon;
    s.sigma2 = to_double(hb.sigma2);
    const double r = static_cast<double>(hb.rows.size());
    std::vector<double> z;
    z.reserve(hb.rows.size());
    std::vector<long double> sum(batch.active, 0), sum2(batch.active, 0);
    long double zsum = 0, z2sum = 0, nsum = 0;
    for (const auto& row : hb.rows) {
      z.push_back(row.z);
      zsum += row.z;
      z2sum += static_cast<long double>(row.z) * row.z;
      nsum += row.norm2;
      for (std::size_t k = 0; k < batch.active; ++k) {
        sum[k] += row.sums[k];
        sum2[k] += static_cast<long double>(row.sums[k]) * row.sums[k];
      }
    }
    s.mean_z = static_cast<double>(zsum / r);
    s.variance_z = hb.rows.size() > 1
                       ? static_cast<double>((z2sum - zsum * zsum / r) / (r - 1))
                       : 0.0;
    s.mean_norm2 = static_cast<double>(nsum / r);
    for (std::size_t k = 0; k < batch.active; ++k) {
      const long double m = sum[k] / r;
      s.component_means.push_back(static_cast<double>(m));
      s.component_variances.push_back(
          hb.rows.size() > 1 ? static_cast<double>((sum2[k] - sum[k] * m) / (r - 1)) : 0.0);
    }
    std::sort(z.begin(), z.end());
    for (double level : {0.5, 0.9, 0.99, 0.999}) {
      s.z_quantiles.emplace_back(level, quantile_sorted(z, level));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hmix
