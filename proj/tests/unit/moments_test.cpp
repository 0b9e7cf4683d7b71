#include <gtest/gtest.h>

#include "hmix/moments.hpp"
#include "oracles.hpp"

using namespace hmix;

namespace {

Rational q(long a, long b = 1) { return make_rational(Integer(a), Integer(b)); }

BlockSequence seq_of(std::initializer_list<long> xs, Rational p = 2) {
  std::vector<Integer> terms;
  for (long x : xs) terms.emplace_back(x);
  return BlockSequence(terms, p, Origin::kExplicit);
}

}  // namespace

TEST(Weight, Examples) {
  EXPECT_EQ(weight<std::int64_t>(0, 3, 5), 3);
  EXPECT_EQ(weight<std::int64_t>(-1, 3, 5), 3);
  EXPECT_EQ(weight<std::int64_t>(4, 5, 3), 1);
  EXPECT_EQ(weight<std::int64_t>(-5, 3, 5), 0);
  EXPECT_EQ(weight(Integer(-1), Integer(3), Integer(5)), Integer(3));
}

TEST(Weight, PiecewiseOverlapAndCountingAgree) {
  for (std::int64_t n = 2; n <= 8; ++n) {
    for (std::int64_t N = 1; N <= 16; ++N) {
      std::int64_t total = 0;
      for (std::int64_t j = -n - 3; j <= N + 3; ++j) {
        const std::int64_t w = weight<std::int64_t>(j, N, n);
        ASSERT_EQ(w, piecewise_weight<std::int64_t>(j, N, n)) << n << " " << N << " " << j;
        ASSERT_EQ(w, oracle::brute_weight(j, N, n)) << n << " " << N << " " << j;
        total += w;
      }
      EXPECT_EQ(total, N * n);
      WeightProfile profile{Integer(n), Integer(N)};
      EXPECT_EQ(profile.total_weight(), Integer(N * n));
      EXPECT_EQ(profile.materialize(), oracle::brute_weights(N, n));
    }
  }
}

TEST(ComponentVariance, Examples) {
  EXPECT_EQ(component_variance(Integer(2), Integer(1)), q(1, 2));
  EXPECT_EQ(component_variance(Integer(3), Integer(3)), q(19, 9));
  EXPECT_EQ(component_variance(Integer(5), Integer(3)), q(37, 25));
}

TEST(ComponentVariance, EqualsSparsityTimesSquaredWeights) {
  for (std::int64_t n = 2; n <= 8; ++n) {
    for (std::int64_t N = 1; N <= 16; ++N) {
      EXPECT_EQ(component_variance(Integer(n), Integer(N)), oracle::brute_variance(N, n)) << n << " " << N;
    }
  }
}

TEST(ComponentVariance, BoundedByHorizonSquaredOverN) {
  // The tail estimate relies on sigma_N^2(f_k) <= N^2 / n_k.
  for (std::int64_t n = 2; n <= 40; ++n) {
    for (std::int64_t N = 1; N <= 60; ++N) {
      EXPECT_LE(component_variance(Integer(n), Integer(N)), q(N * N, n));
    }
  }
}

TEST(ComponentVariance, RejectsBadArguments) {
  EXPECT_THROW(component_variance(Integer(1), Integer(3)), Error);
  EXPECT_THROW(component_variance(Integer(3), Integer(0)), Error);
}

TEST(TotalVariance, TwoComponentExample) {
  auto v = total_variance(seq_of({2, 4}), Integer(4));
  EXPECT_EQ(v.truncated_total, q(25, 4));
  ASSERT_EQ(v.components.size(), 2u);
  EXPECT_EQ(v.components[0], q(7, 2));
  EXPECT_EQ(v.components[1], q(11, 4));
  EXPECT_EQ(v.total().lo, q(25, 4));
  EXPECT_GT(v.tail_bound, 0);
}

TEST(TotalVariance, SingleComponent) {
  EXPECT_EQ(total_variance(seq_of({2}), Integer(1)).truncated_total, q(1, 2));
}

TEST(TotalVariance, SquaringSequenceAtSixteen) {
  auto seq = build_theorem_a_sequence(2, 4);
  auto v = total_variance(seq, Integer(16));
  ASSERT_EQ(v.components.size(), 4u);
  EXPECT_EQ(v.components[0], q(236, 16));
  EXPECT_EQ(v.components[1], q(2736, 256));
  EXPECT_EQ(v.components[2], q(64176, 65536));
  EXPECT_EQ(v.components[3], make_rational(Integer(16775856), pow2(32)));
  EXPECT_NEAR(to_double(v.truncated_total), 26.4206, 1e-4);
}

TEST(TotalVariance, TailBoundCoversNextComponent) {
  for (auto p : {q(11, 10), q(3, 2), q(2)}) {
    auto longer = build_recursive_sequence(p, 2, 7);
    std::vector<Integer> head(longer.terms().begin(), longer.terms().end() - 1);
    BlockSequence seq(head, p, Origin::kExplicit);
    for (long N : {1L, 2L, 5L, 17L}) {
      if (Integer(N) >= seq.last()) continue;
      auto v = total_variance(seq, Integer(N));
      auto w = total_variance(longer, Integer(N));
      EXPECT_GE(w.truncated_total, v.total().lo);
      EXPECT_LE(w.truncated_total, v.total().hi) << to_string(p) << " N=" << N;
    }
  }
}

TEST(MassProfile, Examples) {
  auto m = mass_profile(seq_of({2, 4}), Integer(4));
  EXPECT_EQ(m.shares, (std::vector<Rational>{q(14, 25), q(11, 25)}));
  EXPECT_EQ(m.cumulative.back(), 1);
  EXPECT_EQ(m.tail_shares.front(), q(11, 25));
  EXPECT_EQ(mass_profile(seq_of({2}), Integer(3)).shares, std::vector<Rational>{q(1)});
  auto big = mass_profile(build_theorem_a_sequence(2, 4), Integer(16));
  EXPECT_NEAR(to_double(big.shares[0]), 0.5583, 1e-4);
}

TEST(AsymptoticRatio, Examples) {
  auto seq = build_theorem_a_sequence(2, 4);
  auto r = asymptotic_ratio(seq, Integer(16));
  EXPECT_NEAR(to_double(r.lo), 0.8257, 1e-4);
  EXPECT_LT(to_double(r.hi - r.lo), 1e-6);
  auto r4 = asymptotic_ratio(seq, Integer(4));
  EXPECT_EQ(r4.lo, total_variance(seq, Integer(4)).truncated_total / 4);
  try {
    asymptotic_ratio(seq, Integer(3));
    FAIL() << "expected UndefinedIndex";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedIndex);
  }
}

TEST(AsymptoticRatio, StaysInABracketAlongTheSquaringGrid) {
  auto seq = build_theorem_a_sequence(2, 5);
  double lo = 1e9, hi = 0;
  for (std::size_t k = 1; k < seq.depth(); ++k) {
    auto r = asymptotic_ratio(seq, seq.term(k));
    lo = std::min(lo, to_double(r.lo));
    hi = std::max(hi, to_double(r.hi));
  }
  EXPECT_GT(lo, 0.5);
  EXPECT_LT(hi, 1.5);
}

TEST(PartialSumPmf, TwoTermExample) {
  auto pmf = partial_sum_pmf(Integer(2), Integer(1));
  EXPECT_EQ(pmf.probability(0), q(19, 32));
  EXPECT_EQ(pmf.probability(1), q(3, 16));
  EXPECT_EQ(pmf.probability(-1), q(3, 16));
  EXPECT_EQ(pmf.probability(2), q(1, 64));
  EXPECT_EQ(pmf.probability(-2), q(1, 64));
  EXPECT_EQ(pmf.probability(3), 0);
  EXPECT_EQ(pmf.variance(), q(1, 2));
}

TEST(PartialSumPmf, MatchesEnumerationAndVariance) {
  for (std::int64_t n = 2; n <= 4; ++n) {
    for (std::int64_t N = 1; N + n - 1 <= 8; ++N) {
      auto pmf = partial_sum_pmf(Integer(n), Integer(N));
      auto law = oracle::enumerate_law(N, n);
      EXPECT_EQ(pmf.total(), 1);
      EXPECT_EQ(pmf.mean(), 0);
      EXPECT_EQ(pmf.variance(), component_variance(Integer(n), Integer(N)));
      for (std::int64_t v = pmf.min_value; v <= pmf.max_value(); ++v) {
        const Rational expected = law.count(v) ? law[v] : Rational(0);
        EXPECT_EQ(pmf.probability(v), expected) << n << " " << N << " " << v;
        EXPECT_EQ(pmf.probability(v), pmf.probability(-v));
      }
    }
  }
}

TEST(PartialSumPmf, Errors) {
  EXPECT_THROW(partial_sum_pmf(Integer(1), Integer(1)), Error);
  try {
    partial_sum_pmf(Integer(300), Integer(300));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
  }
}

TEST(Rosenthal, Examples) {
  EXPECT_DOUBLE_EQ(rosenthal_bracket({4, {3}, {4}}), 19);
  EXPECT_DOUBLE_EQ(rosenthal_bracket({2, {1, 2, 3}, {1, 2, 3}}), 12);
  EXPECT_DOUBLE_EQ(rosenthal_bracket({4, {1, 1}, {1, 1}}), 6);
  EXPECT_THROW(rosenthal_bracket({1, {1}, {1}}), Error);
  EXPECT_THROW(rosenthal_bracket({4, {}, {}}), Error);
}

TEST(MomentCheck, Examples) {
  EXPECT_EQ(moment_check(Integer(2), 1).scaled, 1);
  EXPECT_EQ(moment_check(Integer(2), 2).scaled, q(7, 4));
  for (long n = 2; n <= 8; ++n) EXPECT_EQ(moment_check(Integer(n), 1).scaled, 1);
}

TEST(MomentCheck, RatioPeaksEarlyThenDecreases) {
  // The majorant holds with a p-dependent constant: the ratio is maximal at
  // small n and nonincreasing beyond.
  for (long n = 2; n <= 8; ++n) EXPECT_EQ(moment_check(Integer(n), 1).ratio, q(1, 2));
  for (unsigned p : {2u, 3u}) {
    Rational sup = 0;
    for (long n = 2; n <= 8; ++n) sup = std::max(sup, moment_check(Integer(n), p).ratio);
    Rational prev = moment_check(Integer(4), p).ratio;
    EXPECT_EQ(std::max(prev, moment_check(Integer(3), p).ratio), sup);
    for (long n = 5; n <= 12; ++n) {
      Rational r = moment_check(Integer(n), p).ratio;
      EXPECT_LE(r, prev) << "p=" << p << " n=" << n;
      prev = r;
    }
  }
}
