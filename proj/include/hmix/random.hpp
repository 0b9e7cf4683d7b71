#pragma once

// Deterministic random streams and the inversion-sampling primitives shared
// by the sparse sampler and the dense test reference.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

namespace hmix {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// One-shot 64-bit mix of a single word.
inline std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

// xoshiro256** generator. Streams are value types; copying forks the state.
class Stream {
 public:
  explicit Stream(std::uint64_t key) {
    std::uint64_t s = key;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    ++draws_;
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on [0, bound), bound >= 1 (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool coin() { return (next() >> 63) != 0; }

  // Number of 64-bit words consumed so far.
  std::uint64_t draws() const { return draws_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t draws_ = 0;
};

// Substream for (seed, replicate, component). Derived from the triple only,
// never from which worker runs it.
inline Stream derive_stream(std::uint64_t seed, std::uint64_t replicate,
                            std::uint64_t component) {
  std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc909ull);
  key = mix64(key ^ mix64(replicate + 0xbb67ae8584caa73bull));
  key = mix64(key ^ mix64(component + 0x3c6ef372fe94f82bull));
  return Stream(key);
}

// Work counters for the sparse sampler.
struct EventCounter {
  std::uint64_t events = 0;          // nonzero noise variables produced
  std::uint64_t binomial_steps = 0;  // CDF steps in the binomial inversion
};

namespace inversion {

// Ternary value from one uniform: +1 on [0, u/2), -1 on [u/2, u), else 0.
inline int ternary(double u, double uniform) {
  if (uniform < u / 2) return 1;
  if (uniform < u) return -1;
  return 0;
}

// Binomial(trials, prob) by sequential CDF inversion of a single uniform.
// Only valid while (1-prob)^trials does not underflow.
inline std::uint64_t binomial_chunk(std::uint64_t trials, double prob, double uniform,
                                    EventCounter* counter) {
  const double odds = prob / (1 - prob);
  double pmf = std::exp(static_cast<double>(trials) * std::log1p(-prob));
  double cdf = pmf;
  std::uint64_t k = 0;
  while (uniform >= cdf && k < trials) {
    pmf *= odds * static_cast<double>(trials - k) / static_cast<double>(k + 1);
    ++k;
    cdf += pmf;
    if (counter) ++counter->binomial_steps;
    if (pmf == 0 && cdf < uniform) {
      // Rounding left a sliver of mass past the last representable term.
      break;
    }
  }
  return k;
}

// Binomial(trials, prob) as a sum of chunks small enough that each chunk's
// P(0) stays well above the double underflow threshold. Expected cost is
// O(1 + trials * prob).
inline std::uint64_t binomial(std::uint64_t trials, double prob, Stream& stream,
                              EventCounter* counter = nullptr) {
  if (trials == 0 || prob <= 0) return 0;
  if (prob >= 1) return trials;
  const double per_trial = -std::log1p(-prob);
  const double max_chunk = std::floor(200.0 / per_trial);
  const std::uint64_t chunk =
      max_chunk >= static_cast<double>(trials) ? trials
                                                : std::max<std::uint64_t>(1, static_cast<std::uint64_t>(max_chunk));
  std::uint64_t total = 0;
  for (std::uint64_t done = 0; done < trials; done += chunk) {
    const std::uint64_t size = std::min(chunk, trials - done);
    total += binomial_chunk(size, prob, stream.uniform(), counter);
  }
  return total;
}

// `count` distinct offsets from [0, range), ascending (Floyd's selection).
inline std::vector<std::uint64_t> distinct_offsets(std::uint64_t count, std::uint64_t range,
                                                   Stream& stream) {
  std::vector<std::uint64_t> picked;
  if (count == 0) return picked;
  picked.reserve(count);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  for (std::uint64_t j = range - count; j < range; ++j) {
    std::uint64_t t = stream.below(j + 1);
    if (!seen.insert(t).second) {
      seen.insert(j);
      picked.push_back(j);
    } else {
      picked.push_back(t);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace inversion
}  // namespace hmix
