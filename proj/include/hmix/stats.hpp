#pragma once

// Chi-square goodness of fit against an exact law, and percentile bootstrap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "hmix/error.hpp"
#include "hmix/moments.hpp"
#include "hmix/random.hpp"
#include "hmix/simulate.hpp"

namespace hmix {

struct ChiSquareResult {
  double statistic = 0;
  std::size_t dof = 0;
  double p_value = 1;
  std::size_t bins = 0;

  bool passes(double significance) const { return p_value >= significance; }
};

// Adjacent support cells are merged left to right until each bin expects at
// least `min_expected` draws; a short final bin is folded into its neighbour.
// Draws outside the support land in the nearest end bin.
inline ChiSquareResult chi_square_gof(const std::vector<std::int64_t>& draws, const ExactPmf& law,
                                      double min_expected = 5.0) {
  if (draws.empty()) fail(ErrorCode::kEmptyBatch, "no draws for the goodness-of-fit test");
  const double total = static_cast<double>(draws.size());
  std::map<std::int64_t, std::uint64_t> observed;
  for (std::int64_t d : draws) ++observed[d];

  struct Bin {
    std::int64_t hi;
    double expected = 0;
    double observed = 0;
  };
  std::vector<Bin> bins;
  Bin current{law.min_value, 0, 0};
  for (std::int64_t v = law.min_value; v <= law.max_value(); ++v) {
    current.hi = v;
    current.expected += to_double(law.probability(v)) * total;
    if (current.expected >= min_expected) {
      bins.push_back(current);
      current = Bin{v + 1, 0, 0};
    }
  }
  if (current.expected > 0) {
    if (bins.empty()) {
      bins.push_back(current);
    } else {
      bins.back().hi = current.hi;
      bins.back().expected += current.expected;
    }
  }
  for (const auto& [value, count] : observed) {
    auto it = std::lower_bound(bins.begin(), bins.end(), value,
                               [](const Bin& b, std::int64_t v) { return b.hi < v; });
    if (it == bins.end()) it = std::prev(bins.end());
    it->observed += static_cast<double>(count);
  }
  ChiSquareResult out;
  out.bins = bins.size();
  for (const Bin& b : bins) {
    const double diff = b.observed - b.expected;
    out.statistic += diff * diff / b.expected;
  }
  out.dof = bins.size() > 1 ? bins.size() - 1 : 0;
  out.p_value = out.dof == 0 ? 1.0
                             : boost::math::gamma_q(static_cast<double>(out.dof) / 2,
                                                    out.statistic / 2);
  return out;
}

struct ConfidenceInterval {
  double estimate = 0;
  double lo = 0;
  double hi = 0;
};

struct BootstrapOptions {
  std::size_t resamples = 200;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Percentile intervals of a vector-valued `statistic` over multinomial
// resamples of each group. Group g of resample b uses stream (seed, b, g).
inline std::vector<ConfidenceInterval> bootstrap_many(
    const std::vector<std::vector<double>>& groups,
    const std::function<std::vector<double>(const std::vector<std::vector<double>>&)>& statistic,
    const BootstrapOptions& options) {
  const std::vector<double> estimate = statistic(groups);
  std::vector<ConfidenceInterval> out(estimate.size());
  for (std::size_t i = 0; i < estimate.size(); ++i) out[i] = {estimate[i], estimate[i], estimate[i]};
  if (options.resamples == 0) return out;
  std::vector<std::vector<double>> values(estimate.size());
  std::vector<std::vector<double>> resample(groups.size());
  for (std::size_t b = 0; b < options.resamples; ++b) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      Stream stream = derive_stream(options.seed ^ 0xb0075742a9ull, b, g);
      const auto& src = groups[g];
      auto& dst = resample[g];
      dst.resize(src.size());
      for (double& x : dst) x = src[stream.below(src.size())];
    }
    std::vector<double> v = statistic(resample);
    for (std::size_t i = 0; i < v.size(); ++i) values[i].push_back(v[i]);
  }
  const double tail = (1 - options.level) / 2;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::sort(values[i].begin(), values[i].end());
    out[i].lo = quantile_sorted(values[i], tail);
    out[i].hi = quantile_sorted(values[i], 1 - tail);
  }
  return out;
}

inline ConfidenceInterval bootstrap(
    const std::vector<std::vector<double>>& groups,
    const std::function<double(const std::vector<std::vector<double>>&)>& statistic,
    const BootstrapOptions& options) {
  return bootstrap_many(
             groups,
             [&](const std::vector<std::vector<double>>& g) { return std::vector<double>{statistic(g)}; },
             options)
      .front();
}

inline double mean_of(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : static_cast<double>(s / static_cast<long double>(xs.size()));
}

// Mean and its standard error.
struct MeanEstimate {
  double mean = 0;
  double standard_error = 0;
};

inline MeanEstimate mean_with_se(const std::vector<double>& xs) {
  MeanEstimate out;
  if (xs.empty()) return out;
  const auto n = static_cast<long double>(xs.size());
  long double s = 0, s2 = 0;
  for (double x : xs) {
    s += x;
    s2 += static_cast<long double>(x) * x;
  }
  const long double m = s / n;
  out.mean = static_cast<double>(m);
  if (xs.size() > 1) {
    const long double var = (s2 - s * m) / (n - 1);
    out.standard_error = static_cast<double>(std::sqrt(std::max<long double>(0, var) / n));
  }
  return out;
}

}  // namespace hmix
