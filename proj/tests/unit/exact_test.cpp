#include <gtest/gtest.h>

#include <cmath>

#include "hmix/construction.hpp"
#include "hmix/exact.hpp"
#include "hmix/rate.hpp"

using namespace hmix;

TEST(Parse, RationalForms) {
  EXPECT_EQ(parse_rational("3/2"), Rational(3, 2));
  EXPECT_EQ(parse_rational("6/4"), Rational(3, 2));
  EXPECT_EQ(parse_rational("1.1"), Rational(11, 10));
  EXPECT_EQ(parse_rational("-0.25"), Rational(-1, 4));
  EXPECT_EQ(parse_rational("7"), Rational(7));
  EXPECT_EQ(to_string(Rational(2)), "2/1");
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
  EXPECT_THROW(parse_integer("12x"), Error);
  EXPECT_EQ(parse_integer("18446744073709551617"), pow2(64) + 1);
}

TEST(Roots, FloorAndCeilPowers) {
  EXPECT_EQ(root_floor(Integer(80), 4), Integer(2));
  EXPECT_EQ(root_floor(Integer(81), 4), Integer(3));
  EXPECT_EQ(root_ceil(Integer(81), 4), Integer(3));
  EXPECT_EQ(root_ceil(Integer(82), 4), Integer(4));
  // 2^1.1 = 2.1435..., 6^1.1 = 7.18...
  EXPECT_EQ(ceil_power(Integer(2), Rational(11, 10)), Integer(3));
  EXPECT_EQ(ceil_power(Integer(6), Rational(11, 10)), Integer(8));
  EXPECT_EQ(floor_power(Integer(6), Rational(11, 10)), Integer(7));
  EXPECT_TRUE(at_least_power(Integer(16), Integer(4), 2));
  EXPECT_FALSE(at_least_power(Integer(15), Integer(4), 2));
}

TEST(Roots, AgreeWithFloatingPointAwayFromIntegers) {
  for (long base = 2; base < 200; base += 7) {
    for (auto p : {Rational(11, 10), Rational(3, 2), Rational(7, 3)}) {
      const double x = std::pow(static_cast<double>(base), to_double(p));
      if (std::abs(x - std::round(x)) < 1e-6) continue;
      EXPECT_EQ(floor_power(Integer(base), p), Integer(static_cast<long>(std::floor(x))));
      EXPECT_EQ(ceil_power(Integer(base), p), Integer(static_cast<long>(std::ceil(x))));
    }
  }
}

TEST(SumOfSquares, ClosedForm) {
  Integer s = 0;
  for (long m = 0; m <= 50; ++m) {
    s += Integer(m * m);
    EXPECT_EQ(sum_of_squares(Integer(m)), s);
  }
}

TEST(FloorExp2, ExactAtIntegersAndProvenElsewhere) {
  EXPECT_EQ(floor_exp2(Rational(10)), Integer(1024));
  EXPECT_EQ(floor_exp2(Rational(1, 2)), Integer(1));
  EXPECT_EQ(floor_exp2(Rational(27, 8)), Integer(10));  // 2^3.375 = 10.37
  EXPECT_EQ(floor_exp2(Rational(64)), pow2(64));
}

TEST(Rate, ParseAndDescribe) {
  EXPECT_EQ(Rate::parse("N").describe(), "power:1/1:1/1");
  EXPECT_EQ(Rate::parse("1/N").describe(), "power:1/1:-1/1");
  EXPECT_EQ(Rate::parse("2^-N").describe(), "exp:1/1:-1/1");
  EXPECT_EQ(Rate::parse("log:2:1/2").describe(), "log:2/1:1/2");
  EXPECT_EQ(Rate::parse("table:1,2,3").describe(), "table:1/1,2/1,3/1");
  EXPECT_THROW(Rate::parse("bogus"), Error);
  EXPECT_THROW(Rate::parse("power:1"), Error);
  EXPECT_THROW(Rate::parse("table:1,0"), Error);
}

TEST(Rate, Monotonicity) {
  EXPECT_TRUE(Rate::parse("1/N").nonincreasing());
  EXPECT_FALSE(Rate::parse("1/N").nondecreasing());
  EXPECT_TRUE(Rate::parse("table:3,2,2,1").nonincreasing());
  EXPECT_FALSE(Rate::parse("table:3,4").nonincreasing());
}

TEST(Rate, AtLeastIsExactAtTies) {
  Rate sq = Rate::parse("power:1:2");
  EXPECT_TRUE(sq.at_least(Integer(5), Rational(25)));
  EXPECT_FALSE(sq.at_least(Integer(5), Rational(251, 10)));
  Rate root = Rate::parse("sqrtN");
  EXPECT_TRUE(root.at_least(Integer(16), Rational(4)));
  EXPECT_FALSE(root.at_least(Integer(15), Rational(4)));
  Rate lg = Rate::parse("logN");  // 1 + log2 N
  EXPECT_TRUE(lg.at_least(Integer(8), Rational(4)));
  EXPECT_FALSE(lg.at_least(Integer(7), Rational(4)));
  Rate ex = Rate::parse("exp:3:1");  // 3 * 2^N
  EXPECT_TRUE(ex.at_least(Integer(4), Rational(48)));
  EXPECT_FALSE(ex.at_least(Integer(4), Rational(49)));
}

TEST(Rate, FloorScaledInverse) {
  // floor(scale / rate(n)).
  EXPECT_EQ(Rate::parse("1/N").floor_scaled_inverse(Integer(4), Integer(2)), Integer(8));
  EXPECT_EQ(Rate::parse("2^-N").floor_scaled_inverse(Integer(16), Integer(2)), Integer(131072));
  EXPECT_EQ(Rate::parse("1/N^2").floor_scaled_inverse(Integer(3), Integer(5)), Integer(45));
  EXPECT_EQ(Rate::parse("power:1:-1/2").floor_scaled_inverse(Integer(10), Integer(1)), Integer(3));
  // log:1:-1 at N = 4 is 1/3, so the inverse is exactly 3 * scale.
  EXPECT_EQ(Rate::parse("log:1:-1").floor_scaled_inverse(Integer(4), Integer(2)), Integer(6));
  EXPECT_EQ(Rate::parse("table:1/2,1/3").floor_scaled_inverse(Integer(2), Integer(1)), Integer(3));
}

TEST(Rate, ValueAndExactSquare) {
  EXPECT_DOUBLE_EQ(Rate::parse("sqrtN").value(Integer(256)), 16.0);
  EXPECT_NEAR(Rate::parse("logN").value(Integer(1024)), 11.0, 1e-12);
  EXPECT_EQ(*Rate::parse("sqrtN").exact_square(Integer(7)), Rational(7));
  EXPECT_EQ(*Rate::parse("power:3:1").exact_square(Integer(2)), Rational(36));
  EXPECT_FALSE(Rate::parse("power:1:1/3").exact_square(Integer(2)).has_value());
  EXPECT_FALSE(Rate::parse("logN").exact_square(Integer(2)).has_value());
}
