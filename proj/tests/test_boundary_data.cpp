#include <gtest/gtest.h>

#include <cmath>

#include "pmc/boundary_data.hpp"
#include "pmc/error.hpp"
#include "pmc/functional.hpp"
#include "support.hpp"

using namespace pmc;

namespace {

std::shared_ptr<const ExteriorGrid> two_ball_grid(double h = 0.25) {
  return std::make_shared<const ExteriorGrid>(
      build_grid(ObstacleSet(3, {Ball{{-2, 0, 0}, 1.0}, Ball{{2, 0, 0}, 1.0}}), 10.0, h));
}

BoundaryDatum plus_minus(double v) { return BoundaryDatum({TraceRule{-v}, TraceRule{v}}); }

// Brute-force worst ratio over sampled pairs on two spheres joined by clear segments.
double brute_force_ratio(const std::vector<BoundarySample>& s, const ExteriorGrid& grid) {
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double d = distance(s[i].point, s[j].point);
      if (d <= 0.0 || !segment_clear(s[i].point, s[j].point, grid)) continue;
      worst = std::max(worst, std::fabs(s[i].value - s[j].value) / d);
    }
  return worst;
}

double max_slope(const ScalarField& w) {
  const EnergyModel model(w.grid_ptr(), CurvatureSpec::zero(w.grid().dimension()));
  return model.gradient_stats(w.values()).max_norm;
}

}  // namespace

TEST(Displacing, ConstantDataPasses) {
  const auto grid = two_ball_grid();
  const auto v = check_spacelike_displacing(BoundaryDatum::constant(2, 0.7), *grid, 0.0, 32);
  EXPECT_EQ(v.verdict, Verdict::Pass);
  EXPECT_EQ(v.worst_ratio, 0.0);
}

TEST(Displacing, TwoBallCounterexampleFails) {
  const auto grid = two_ball_grid();
  const BoundaryDatum phi = plus_minus(1.1);
  const auto v = check_spacelike_displacing(phi, *grid, 0.0, 32);
  EXPECT_EQ(v.verdict, Verdict::Fail);
  const double expected = brute_force_ratio(sample_boundary(phi, *grid, 32), *grid);
  EXPECT_NEAR(v.worst_ratio, expected, 1e-12);
  EXPECT_NEAR(v.worst_ratio, 1.1, 1e-9);
  EXPECT_NEAR(std::fabs(v.worst_x[0]), 1.0, 1e-9);
  EXPECT_NEAR(std::fabs(v.worst_y[0]), 1.0, 1e-9);
}

TEST(Displacing, LipschitzDataPasses) {
  const auto grid = two_ball_grid();
  const Expression e = Expression::parse("0.5 * x1", 3);
  const BoundaryDatum phi({TraceRule{e}, TraceRule{e}});
  const auto v = check_spacelike_displacing(phi, *grid, 0.1, 32);
  EXPECT_EQ(v.verdict, Verdict::Pass);
  EXPECT_LE(v.worst_ratio, 0.5 + 1e-12);
}

TEST(Displacing, SingleConvexObstaclePassesVacuously) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.5);
  const auto v = check_spacelike_displacing(BoundaryDatum::constant(1, 5.0), *grid, 0.0, 16);
  EXPECT_EQ(v.verdict, Verdict::Pass);
  EXPECT_FALSE(v.note.empty());
}

TEST(Displacing, SoundOnTheSampleSet) {
  const auto grid = two_ball_grid(0.5);
  for (double c : {0.2, 0.9, 0.99, 1.0, 1.3}) {
    const BoundaryDatum phi = plus_minus(c);
    const auto v = check_spacelike_displacing(phi, *grid, 0.0, 16);
    const double brute = brute_force_ratio(sample_boundary(phi, *grid, 16), *grid);
    if (brute >= 1.0) EXPECT_NE(v.verdict, Verdict::Pass) << c;
    EXPECT_NEAR(v.worst_ratio, brute, 1e-12) << c;
  }
}

TEST(Lipschitz, Examples) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.25);
  EXPECT_EQ(boundary_lipschitz_constant(BoundaryDatum::constant(1, 3.0), *grid, 32), 0.0);
  const BoundaryDatum lin({TraceRule{Expression::parse("0.5 * x1", 3)}});
  const double l = boundary_lipschitz_constant(lin, *grid, 64);
  EXPECT_LE(l, 0.5 + 1e-12);
  EXPECT_GE(l, 0.49);
  EXPECT_GE(boundary_lipschitz_constant(plus_minus(1.1), *two_ball_grid(), 32), 1.1 - 1e-12);
}

TEST(Cutoff, Profile) {
  EXPECT_EQ(cutoff_profile(Point{1, 0, 0}, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(cutoff_profile(Point{3, 0, 0}, 2.0), 0.5);
  EXPECT_EQ(cutoff_profile(Point{0, 4, 0}, 2.0), 0.0);
}

TEST(Extension, ZeroDataGivesZero) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.5);
  const Extension ext = extend_to_feasible(BoundaryDatum::constant(1, 0.0), grid, 0.5);
  EXPECT_EQ(ext.field.sup_norm(), 0.0);
}

TEST(Extension, ConstantDataIsScaledCutoff) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.25);
  const double c = 0.4;
  const Extension ext = extend_to_feasible(BoundaryDatum::constant(1, c), grid, 0.5);
  Point x(3);
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    if (grid->tag(i) != NodeTag::Interior) continue;
    grid->node_coordinates(i, x);
    EXPECT_NEAR(ext.field[i], c * cutoff_profile(x, ext.r_cut), 1e-14);
  }
  // Interpolating a radial ramp costs at most a curvature term of order h / r.
  EXPECT_LE(max_slope(ext.field), c / ext.r_cut * (1.0 + grid->spacing() / ext.r_cut));
}

TEST(Extension, LinearDataExample) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.25);
  const BoundaryDatum phi({TraceRule{Expression::parse("0.5 * x1", 3)}});
  ExtensionOptions opt;
  opt.r_cut = 4.0;
  const Extension ext = extend_to_feasible(phi, grid, 0.5, opt);
  EXPECT_LE(max_slope(ext.field), 0.625);
  for (const BoundaryNode& b : grid->boundary_nodes())
    EXPECT_EQ(ext.field[b.node], 0.5 * b.surface_point[0]);
}

TEST(Extension, NegationEquivariantAndRangePreserving) {
  const auto grid = std::make_shared<const ExteriorGrid>(
      build_grid(ObstacleSet(3, {Ball{{-2, 0, 0}, 1.0}, Ball{{2, 0, 0}, 1.0}}), 14.0, 0.5));
  const BoundaryDatum phi({TraceRule{Expression::parse("0.3 * sin(x2) + 0.1", 3)}, TraceRule{-0.2}});
  const Extension a = extend_to_feasible(phi, grid, 0.5);
  const Extension b = extend_to_feasible(phi.negated(), grid, 0.5);
  double sup = 0.0;
  for (const BoundarySample& s : sample_boundary(phi, *grid, 64)) sup = std::max(sup, std::fabs(s.value));
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    EXPECT_EQ(a.field[i], -b.field[i]);
    EXPECT_LE(std::fabs(a.field[i]), sup + 1e-15);
  }
}

TEST(Extension, Errors) {
  const auto grid = two_ball_grid(0.5);
  try {
    extend_to_feasible(plus_minus(1.1), grid, 0.3);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotLipschitzEnough);
  }
  try {
    extend_to_feasible(BoundaryDatum::constant(2, 3.0), grid, 0.3);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CutoffTooTight);
  }
}

TEST(BoundaryConstraints, PinnedAndExtrapolated) {
  const auto grid = fixtures::ball_grid(3, 6.0, 0.25);
  const BoundaryDatum phi = BoundaryDatum::constant(1, 0.3);
  const NodeConstraints pinned = boundary_constraints(phi, *grid, BoundaryClosure::Pinned);
  EXPECT_EQ(pinned.size(), grid->boundary_nodes().size());
  EXPECT_TRUE(pinned.columns.empty());
  const NodeConstraints ext = boundary_constraints(phi, *grid, BoundaryClosure::Extrapolated);
  EXPECT_EQ(ext.size(), grid->boundary_nodes().size());
  // A field that is constant near the obstacle is reproduced exactly.
  ScalarField u = ScalarField::from_function(grid, [](std::span<const double>) { return 0.3; });
  ScalarField v = u;
  ext.apply(v.values());
  for (const BoundaryNode& b : grid->boundary_nodes()) EXPECT_NEAR(v[b.node], 0.3, 1e-14);
  for (std::size_t c = 0; c < ext.columns.size(); ++c) EXPECT_EQ(grid->tag(ext.columns[c]), NodeTag::Interior);
}
