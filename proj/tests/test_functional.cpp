#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmc/boundary_data.hpp"
#include "pmc/error.hpp"
#include "pmc/functional.hpp"
#include "pmc/parallel.hpp"
#include "support.hpp"

using namespace pmc;

namespace {

CurvatureSpec gaussian_source(int n) {
  return CurvatureSpec::x_only(n, Expression::parse("exp(-r^2)", n), Expression::parse(std::to_string(n) + " * exp(-r^2)", n),
                               1.2);
}

CurvatureSpec height_source(int n) {
  return CurvatureSpec::separable(n, Expression::parse("exp(-r^2)", n), Expression::parse("sin(t)", n),
                                  Expression::parse(std::to_string(n) + " * exp(-r^2)", n), 1.2);
}

ScalarField random_direction(const std::shared_ptr<const ExteriorGrid>& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ScalarField v(grid);
  for (std::int64_t i = 0; i < grid->node_count(); ++i)
    if (grid->tag(i) == NodeTag::Interior) v[i] = normal(rng);
  return v;
}

double fraction_sum(const EnergyModel& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.grid().cells().size(); ++i) s += m.cell_fraction(i);
  return s;
}

}  // namespace

TEST(Area, ZeroFieldHasZeroEnergy) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  EXPECT_EQ(area_energy(ScalarField(grid)), 0.0);
}

TEST(Area, LinearFieldIsExact) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  std::vector<double> values(static_cast<std::size_t>(grid->node_count()));
  Point x(3);
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    grid->node_coordinates(i, x);
    values[static_cast<std::size_t>(i)] = 0.36 * x[0] - 0.48 * x[2];
  }
  const ScalarField u(grid, values);
  const EnergyModel model(grid, CurvatureSpec::zero(3));
  const double expected = (1.0 - std::sqrt(1.0 - 0.36)) * grid->cell_volume() * fraction_sum(model);
  EXPECT_NEAR(model.area(u.values()), expected, 1e-12 * expected);
  EXPECT_NEAR(model.gradient_stats(u.values()).max_norm, 0.6, 1e-14);
}

TEST(Area, ToleratesTheLightConeButNotBeyond) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  std::vector<double> values(static_cast<std::size_t>(grid->node_count()));
  Point x(3);
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    grid->node_coordinates(i, x);
    values[static_cast<std::size_t>(i)] = x[1];
  }
  const EnergyModel model(grid, CurvatureSpec::zero(3));
  EXPECT_NEAR(model.area(values), grid->cell_volume() * fraction_sum(model), 1e-9);
  std::vector<double> grad(values.size());
  EXPECT_THROW(model.value_and_gradient(values, grad), Error);
  for (double& v : values) v *= 1.01;
  try {
    model.area(values);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleField);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(7);
  for (int n : {3, 4}) {
    const auto grid = fixtures::ball_grid(n, 4.0, n == 4 ? 1.0 : 0.5);
    for (const CurvatureSpec& spec : {CurvatureSpec::zero(n), gaussian_source(n), height_source(n)}) {
      const EnergyModel model(grid, spec);
      const ScalarField u = fixtures::random_field(grid, rng, 0.8);
      const ScalarField v = random_direction(grid, rng);
      const double eps = 1e-6;
      const double fd =
          (model.total((u + eps * v).values()) - model.total((u - (eps * v)).values())) / (2.0 * eps);
      const double dv = model.first_variation(u.values(), v.values());
      EXPECT_NEAR(dv, fd, 1e-6 * std::fabs(fd)) << "n = " << n;
      std::vector<double> g(static_cast<std::size_t>(grid->node_count()));
      model.value_and_gradient(u.values(), g);
      double gv = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) gv += g[i] * v.values()[i];
      EXPECT_NEAR(gv, dv, 1e-10 * std::fabs(dv));
    }
  }
}

TEST(Gradient, ConstraintFoldingIsTheChainRule) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  const auto nc = std::make_shared<NodeConstraints>(
      boundary_constraints(BoundaryDatum::constant(1, 0.2), *grid, BoundaryClosure::Extrapolated));
  EnergyModel model(grid, gaussian_source(3));
  model.set_constraints(nc);
  std::mt19937_64 rng(3);
  ScalarField u = fixtures::random_field(grid, rng, 0.5);
  nc->apply(u.values());
  const ScalarField v = random_direction(grid, rng);
  auto energy = [&](double s) {
    ScalarField w = u + s * v;
    nc->apply(w.values());
    return model.total(w.values());
  };
  const double eps = 1e-6;
  const double fd = (energy(eps) - energy(-eps)) / (2.0 * eps);
  std::vector<double> g(static_cast<std::size_t>(grid->node_count()));
  model.value_and_gradient(u.values(), g);
  double gv = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) gv += g[i] * v.values()[i];
  EXPECT_NEAR(gv, fd, 1e-6 * std::fabs(fd));
}

TEST(Area, ConvexityAndSandwich) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  const EnergyModel model(grid, CurvatureSpec::zero(3));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const ScalarField u = fixtures::random_field(grid, rng, 0.95 * unit(rng) + 0.01);
    const ScalarField v = fixtures::random_field(grid, rng, 0.95 * unit(rng) + 0.01);
    const double lambda = unit(rng);
    const ScalarField mix = lambda * u + (1.0 - lambda) * v;
    EXPECT_LE(model.area(mix.values()), lambda * model.area(u.values()) + (1 - lambda) * model.area(v.values()) + 1e-12);
    const double a = model.area(u.values());
    const double g2 = std::pow(model.gradient_l2(u.values()), 2);
    EXPECT_GE(a - 0.5 * g2, -1e-12);
    EXPECT_GE(g2 - a, -1e-12);
  }
}

TEST(Potential, BoundedByHolder) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const ScalarField u = fixtures::random_field(grid, rng, 0.7);
    EXPECT_TRUE(potential_energy(u, gaussian_source(3)).within_bound);
    EXPECT_TRUE(coercivity_bound(u, gaussian_source(3)).holds);
  }
}

TEST(Frozen, SharesTheFirstVariation) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  const CurvatureSpec spec = height_source(3);
  std::mt19937_64 rng(4);
  const ScalarField u = fixtures::random_field(grid, rng, 0.6);
  const ScalarField v = random_direction(grid, rng);
  const double eps = 1e-6;
  const double fd = (frozen_energy(u + eps * v, u, spec) - frozen_energy(u - (eps * v), u, spec)) / (2.0 * eps);
  EXPECT_NEAR(fd, first_variation(u, v, spec), 1e-6 * std::fabs(fd));
}

TEST(Energy, ReproducibleAcrossThreadCounts) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.25);
  std::mt19937_64 rng(8);
  const ScalarField u = fixtures::random_field(grid, rng, 0.7);
  const EnergyModel model(grid, height_source(3));
  std::vector<double> g1(static_cast<std::size_t>(grid->node_count())), g4(g1.size());
  set_worker_threads(1);
  const double e1 = model.value_and_gradient(u.values(), g1);
  set_worker_threads(4);
  const double e4 = model.value_and_gradient(u.values(), g4);
  set_worker_threads(1);
  EXPECT_EQ(e1, e4);
  EXPECT_NEAR(model.total(u.values()), e1, 1e-14 * std::fabs(e1));
  for (std::size_t i = 0; i < g1.size(); ++i) ASSERT_NEAR(g1[i], g4[i], 1e-15 * (1.0 + std::fabs(g1[i])));
}

TEST(Residual, NormScalesWithCellVolume) {
  const auto grid = fixtures::ball_grid(3, 4.0, 0.5);
  std::vector<double> g(static_cast<std::size_t>(grid->node_count()), 0.0);
  for (std::int64_t i = 0; i < grid->node_count(); ++i)
    if (grid->tag(i) == NodeTag::Interior) g[static_cast<std::size_t>(i)] = grid->cell_volume();
  EXPECT_NEAR(residual_norm(*grid, g),
              std::sqrt(static_cast<double>(grid->count(NodeTag::Interior)) * grid->cell_volume()), 1e-12);
}
