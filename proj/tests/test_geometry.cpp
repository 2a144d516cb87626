#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmc/error.hpp"
#include "pmc/geometry.hpp"
#include "support.hpp"

using namespace pmc;

namespace {

ObstacleSet two_balls(double offset = 2.0) {
  return ObstacleSet(3, {Ball{{-offset, 0, 0}, 1.0}, Ball{{offset, 0, 0}, 1.0}});
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ParseError;
}

}  // namespace

TEST(Shapes, BallSignedDistanceAndProjection) {
  const Shape b = Ball{{0, 0, 0}, 1.0};
  const Point x{2, 0, 0};
  EXPECT_DOUBLE_EQ(signed_distance(b, x), 1.0);
  const Point inside{0.25, 0, 0};
  EXPECT_DOUBLE_EQ(signed_distance(b, inside), -0.75);
  const Point p = nearest_surface_point(b, Point{0, 3, 4});
  EXPECT_NEAR(p[1], 0.6, 1e-15);
  EXPECT_NEAR(p[2], 0.8, 1e-15);
}

TEST(Shapes, BoxSignedDistanceMatchesBruteForce) {
  const Box box{{-1, -0.5, -2}, {1, 0.5, 2}};
  const Shape s = box;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 200; ++t) {
    const Point x{u(rng), u(rng), u(rng)};
    double outside = 0.0;
    double inside = std::numeric_limits<double>::infinity();
    bool in = true;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = std::max(box.lower[k] - x[k], x[k] - box.upper[k]);
      if (d > 0) in = false;
      outside += d > 0 ? d * d : 0.0;
      inside = std::min(inside, std::min(x[k] - box.lower[k], box.upper[k] - x[k]));
    }
    const double expected = in ? -inside : std::sqrt(outside);
    EXPECT_NEAR(signed_distance(s, x), expected, 1e-12);
    const Point p = nearest_surface_point(s, x);
    EXPECT_NEAR(distance(p, x), std::fabs(expected), 1e-12);
  }
}

TEST(Shapes, ShapeGapBetweenBalls) {
  EXPECT_DOUBLE_EQ(shape_gap(Ball{{-2, 0, 0}, 1}, Ball{{2, 0, 0}, 1}), 2.0);
  EXPECT_DOUBLE_EQ(shape_gap(Ball{{0, 0, 0}, 1}, Box{{3, -1, -1}, {4, 1, 1}}), 2.0);
}

TEST(BuildGrid, SingleBallTags) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.25);
  const double h = grid->spacing();
  Point x(3);
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    grid->node_coordinates(i, x);
    const double r = norm(x);
    const NodeTag t = grid->tag(i);
    if (r >= 8.0) {
      EXPECT_EQ(t, NodeTag::Farfield);
    } else if (r < 1.0) {
      EXPECT_NE(t, NodeTag::Interior);
      EXPECT_NE(t, NodeTag::Farfield);
      if (t == NodeTag::Boundary) EXPECT_LT(1.0 - r, std::sqrt(3.0) * h + 1e-12);
    } else if (t == NodeTag::Boundary) {
      EXPECT_LE(r - 1.0, kBoundaryBand * h + 1e-12);
    }
  }
  EXPECT_EQ(grid->boundary_components(), 1);
  EXPECT_GT(grid->cell_count(), 0);
}

TEST(BuildGrid, TwoBallsHaveTwoBoundaryComponents) {
  const ExteriorGrid grid = build_grid(two_balls(), 10.0, 0.25);
  EXPECT_EQ(grid.boundary_components(), 2);
  EXPECT_GT(grid.count(NodeTag::Interior), 0);
}

TEST(BuildGrid, Errors) {
  EXPECT_EQ(code_of([] { build_grid(ObstacleSet(3, {Ball{{0, 0, 0}, 1}, Box{{3, -1, -1}, {4, 1, 1}}}), 10.0, 2.5); }),
            ErrorCode::GapUnresolved);
  EXPECT_EQ(code_of([] { build_grid(two_balls(0.9), 10.0, 0.1); }), ErrorCode::ObstaclesOverlap);
  EXPECT_EQ(code_of([] { build_grid(two_balls(), 5.0, 0.25); }), ErrorCode::TruncationTooTight);
}

TEST(SegmentClear, Examples) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.25);
  EXPECT_FALSE(segment_clear(Point{1, 0, 0}, Point{-1, 0, 0}, *grid));
  EXPECT_TRUE(segment_clear(Point{2, 0, 0}, Point{0, 2, 0}, *grid));
  EXPECT_TRUE(segment_clear(Point{1, 0, 0}, Point{1, 0, 0}, *grid));
}

TEST(SegmentClear, SymmetricAndAgreesWithDenseSampling) {
  const ExteriorGrid grid =
      build_grid(ObstacleSet(3, {Ball{{-2, 0, 0}, 1.0}, Box{{1, -1, -1}, {3, 1, 1}}}), 10.0, 0.25);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4, 4);
  int disagreements = 0;
  for (int t = 0; t < 400; ++t) {
    const Point x{u(rng), u(rng), u(rng)};
    const Point y{u(rng), u(rng), u(rng)};
    if (grid.obstacles().signed_distance(x).first <= 0 || grid.obstacles().signed_distance(y).first <= 0) continue;
    const bool clear = segment_clear(x, y, grid);
    EXPECT_EQ(clear, segment_clear(y, x, grid));
    bool sampled = true;
    Point p(3);
    for (int s = 1; s < 20000 && sampled; ++s) {
      const double a = s / 20000.0;
      for (std::size_t k = 0; k < 3; ++k) p[k] = x[k] + a * (y[k] - x[k]);
      sampled = grid.obstacles().signed_distance(p).first > 0;
    }
    if (sampled != clear) ++disagreements;
  }
  // Sampling can only miss grazing hits.
  EXPECT_LE(disagreements, 2);
}

TEST(ProjectToBoundary, Examples) {
  const auto grid = fixtures::ball_grid(3, 8.0, 0.25);
  const auto a = project_to_boundary(Point{1.1, 0, 0}, *grid);
  EXPECT_NEAR(a.point[0], 1.0, 1e-15);
  EXPECT_EQ(a.obstacle, 0);
  const auto b = project_to_boundary(Point{0, 0, 1.05}, *grid);
  EXPECT_NEAR(b.point[2], 1.0, 1e-15);
  EXPECT_EQ(code_of([&] { project_to_boundary(Point{5, 5, 5}, *grid); }), ErrorCode::NotNearBoundary);
}

TEST(BuildGrid, RefinementKeepsClassificationAwayFromSurface) {
  const auto coarse = fixtures::ball_grid(3, 6.0, 0.5);
  const auto fine = fixtures::ball_grid(3, 6.0, 0.25);
  Point x(3);
  std::vector<std::int64_t> idx(3);
  for (std::int64_t i = 0; i < coarse->node_count(); ++i) {
    coarse->node_coordinates(i, x);
    const double sd = coarse->obstacles().signed_distance(x).first;
    if (std::fabs(sd) <= coarse->spacing() * (1.0 + std::sqrt(3.0))) continue;
    for (std::size_t k = 0; k < 3; ++k) idx[k] = coarse->node_multi_index(i)[k] * 2;
    const NodeTag a = coarse->tag(i);
    const NodeTag b = fine->tag(fine->node_index(idx));
    EXPECT_EQ(a == NodeTag::Obstacle, b == NodeTag::Obstacle);
    EXPECT_EQ(a == NodeTag::Interior, b == NodeTag::Interior);
  }
}
