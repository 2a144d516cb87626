#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pmc/error.hpp"
#include "pmc/expression.hpp"
#include "pmc/geometry.hpp"

using namespace pmc;

TEST(Expression, Arithmetic) {
  const Point x{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(Expression::parse("1 + 2 * 3", 3).eval(x), 7.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2) * 3", 3).eval(x), 9.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2 ^ 3 ^ 2", 3).eval(x), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-2 ^ 2", 3).eval(x), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("8 / 4 / 2", 3).eval(x), 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x1 - x2 + x3", 3).eval(x), 2.0);
}

TEST(Expression, FunctionsAndConstants) {
  const Point x{0.5, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(Expression::parse("sqrt(x1)", 3).eval(x), std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(Expression::parse("sin(pi * x1)", 3).eval(x), std::sin(std::numbers::pi * 0.5));
  EXPECT_DOUBLE_EQ(Expression::parse("exp(-r^2)", 3).eval(x), std::exp(-0.25));
  EXPECT_DOUBLE_EQ(Expression::parse("log(e)", 3).eval(x), 1.0);
  EXPECT_DOUBLE_EQ(Expression::parse("abs(-x1) + cos(0)", 3).eval(x), 1.5);
}

TEST(Expression, HeightVariable) {
  const Expression e = Expression::parse("t * exp(-r^2)", 3);
  EXPECT_TRUE(e.depends_on_t());
  EXPECT_TRUE(e.depends_on_x());
  const Point x{1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(e.eval(x, 2.0), 2.0 * std::exp(-1.0));
  EXPECT_TRUE(Expression::parse("3.5e-1", 3).is_constant());
}

TEST(Expression, ParseErrors) {
  for (const char* bad : {"1 +", "(x1", "x4", "foo(1)", "1 2", "", "sqrt 2"}) {
    try {
      Expression::parse(bad, 3);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << bad;
    }
  }
}
