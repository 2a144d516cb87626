#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "pmc/curvature.hpp"
#include "pmc/error.hpp"
#include "pmc/functional.hpp"
#include "support.hpp"

using namespace pmc;

namespace {

// n * integral_0^t H(x, s) ds by Boost's adaptive Gauss-Kronrod rule.
double reference_G(const CurvatureSpec& spec, std::span<const double> x, double t) {
  auto f = [&](double s) { return spec.H(x, s); };
  return spec.dimension() * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t, 12, 1e-14);
}

}  // namespace

TEST(Curvature, ZeroForm) {
  const CurvatureSpec z = CurvatureSpec::zero(3);
  const Point x{1, 2, 3};
  EXPECT_EQ(z.H(x, 5.0), 0.0);
  EXPECT_EQ(z.G(x, 5.0), 0.0);
  EXPECT_EQ(z.envelope(x), 0.0);
}

TEST(Curvature, PotentialMatchesQuadrature) {
  std::vector<CurvatureSpec> specs;
  specs.push_back(CurvatureSpec::x_only(3, Expression::parse("exp(-r^2)", 3)));
  specs.push_back(CurvatureSpec::separable(3, Expression::parse("exp(-r^2)", 3), Expression::parse("t", 3),
                                           Expression::parse("3 * exp(-r^2)", 3), 1.2));
  specs.push_back(CurvatureSpec::general(3, Expression::parse("sin(t) * exp(-r^2) / (1 + x1^2)", 3),
                                         Expression::parse("3 * exp(-r^2)", 3), 1.2));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (const CurvatureSpec& spec : specs) {
    for (int k = 0; k < 20; ++k) {
      const Point x{u(rng), u(rng), u(rng)};
      const double t = u(rng);
      EXPECT_NEAR(spec.G(x, t), reference_G(spec, x, t), 1e-10);
      EXPECT_NEAR(potential_G(x, t, spec), spec.G(x, t), 1e-12);
    }
  }
}

TEST(Curvature, ReflectionNegates) {
  const CurvatureSpec spec = CurvatureSpec::general(3, Expression::parse("t + x1", 3),
                                                    Expression::parse("1", 3), 1.0);
  const CurvatureSpec r = spec.reflected();
  const Point x{0.3, -1, 2};
  for (double t : {-1.0, 0.0, 0.7}) EXPECT_DOUBLE_EQ(r.H(x, t), -spec.H(x, -t));
}

TEST(Curvature, ConjugateExponent) {
  const CurvatureSpec s = CurvatureSpec::x_only(3, Expression::parse("exp(-r^2)", 3), Expression::parse("3*exp(-r^2)", 3), 1.2);
  EXPECT_DOUBLE_EQ(s.conjugate_exponent(), 6.0);
  EXPECT_DOUBLE_EQ(CurvatureSpec::zero(3).conjugate_exponent(), 6.0);
  EXPECT_TRUE(std::isinf(CurvatureSpec::x_only(3, Expression::parse("1", 3), {}, 1.0).conjugate_exponent()));
}

TEST(Curvature, AssumptionAudit) {
  const auto grid = fixtures::ball_grid(3, 6.0, 0.5);
  std::mt19937_64 rng(1);
  const CurvatureSpec good = CurvatureSpec::separable(3, Expression::parse("exp(-r^2)", 3),
                                                      Expression::parse("sin(t)", 3),
                                                      Expression::parse("3 * exp(-r^2)", 3), 1.2);
  const AssumptionAudit a = audit_assumption(good, *grid, 200, 2.0, rng);
  EXPECT_TRUE(a.holds);
  EXPECT_LE(a.worst_ratio, 1.0 + 1e-12);
  EXPECT_GT(a.envelope_norm, 0.0);
  const CurvatureSpec bad = CurvatureSpec::separable(3, Expression::parse("exp(-r^2)", 3),
                                                     Expression::parse("t", 3),
                                                     Expression::parse("exp(-r^2)", 3), 1.2);
  EXPECT_FALSE(audit_assumption(bad, *grid, 200, 2.0, rng).holds);
}

TEST(Curvature, MixedDependenceRejected) {
  EXPECT_THROW(CurvatureSpec::x_only(3, Expression::parse("t", 3)), Error);
  EXPECT_THROW(CurvatureSpec::separable(3, Expression::parse("x1", 3), Expression::parse("x2", 3),
                                        Expression::parse("1", 3), 1.0),
               Error);
}
