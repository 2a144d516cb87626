#include "pmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmc/error.hpp"

namespace pmc {
namespace {

// Absolute slack for surface tests; keeps points on the surface outside.
constexpr double kSurfaceTol = 1e-12;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

double box_signed_distance(const Box& b, std::span<const double> x) {
  double outside = 0.0;
  double inside = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double below = b.lower[k] - x[k];
    const double above = x[k] - b.upper[k];
    const double d = std::max({below, above, 0.0});
    outside += d * d;
    inside = std::min({inside, -below, -above});
  }
  if (outside > 0.0) return std::sqrt(outside);
  return -inside;
}

// Axis and side (0 lower, 1 upper) of the face nearest to an inner point.
std::pair<std::size_t, int> box_nearest_face(const Box& b, std::span<const double> x) {
  std::size_t axis = 0;
  int side = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dl = std::fabs(x[k] - b.lower[k]);
    const double du = std::fabs(b.upper[k] - x[k]);
    if (dl < best) {
      best = dl;
      axis = k;
      side = 0;
    }
    if (du < best) {
      best = du;
      axis = k;
      side = 1;
    }
  }
  return {axis, side};
}

bool box_inside_or_on(const Box& b, std::span<const double> x) {
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] < b.lower[k] || x[k] > b.upper[k]) return false;
  return true;
}

}  // namespace

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double signed_distance(const Shape& shape, std::span<const double> x) {
  return std::visit(Overloaded{
                        [&](const Ball& b) { return distance(x, b.center) - b.radius; },
                        [&](const Box& b) { return box_signed_distance(b, x); },
                    },
                    shape);
}

Point nearest_surface_point(const Shape& shape, std::span<const double> x) {
  return std::visit(
      Overloaded{
          [&](const Ball& b) {
            Point p(x.begin(), x.end());
            const double d = distance(x, b.center);
            if (d == 0.0) {
              p = b.center;
              p[0] += b.radius;
              return p;
            }
            for (std::size_t k = 0; k < p.size(); ++k)
              p[k] = b.center[k] + (x[k] - b.center[k]) * (b.radius / d);
            return p;
          },
          [&](const Box& b) {
            Point p(x.begin(), x.end());
            if (box_inside_or_on(b, x)) {
              const auto [axis, side] = box_nearest_face(b, x);
              p[axis] = side == 0 ? b.lower[axis] : b.upper[axis];
              return p;
            }
            for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::clamp(x[k], b.lower[k], b.upper[k]);
            return p;
          },
      },
      shape);
}

Point outward_normal(const Shape& shape, std::span<const double> x) {
  return std::visit(
      Overloaded{
          [&](const Ball& b) {
            Point nrm(x.size(), 0.0);
            const double d = distance(x, b.center);
            if (d == 0.0) {
              nrm[0] = 1.0;
              return nrm;
            }
            for (std::size_t k = 0; k < x.size(); ++k) nrm[k] = (x[k] - b.center[k]) / d;
            return nrm;
          },
          [&](const Box& b) {
            Point nrm(x.size(), 0.0);
            if (box_inside_or_on(b, x)) {
              const auto [axis, side] = box_nearest_face(b, x);
              nrm[axis] = side == 0 ? -1.0 : 1.0;
              return nrm;
            }
            double len = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
              nrm[k] = x[k] - std::clamp(x[k], b.lower[k], b.upper[k]);
              len += nrm[k] * nrm[k];
            }
            len = std::sqrt(len);
            for (double& c : nrm) c /= len;
            return nrm;
          },
      },
      shape);
}

double extent_from_origin(const Shape& shape) {
  return std::visit(Overloaded{
                        [](const Ball& b) { return norm(b.center) + b.radius; },
                        [](const Box& b) {
                          double s = 0.0;
                          for (std::size_t k = 0; k < b.lower.size(); ++k) {
                            const double m = std::max(std::fabs(b.lower[k]), std::fabs(b.upper[k]));
                            s += m * m;
                          }
                          return std::sqrt(s);
                        },
                    },
                    shape);
}

double shape_gap(const Shape& a, const Shape& b) {
  // Box-box: per-axis separation; anything with a ball reduces to the
  // distance from its centre to the other shape.
  if (const auto* ba = std::get_if<Ball>(&a)) {
    return std::max(0.0, signed_distance(b, ba->center) - ba->radius);
  }
  if (const auto* bb = std::get_if<Ball>(&b)) {
    return std::max(0.0, signed_distance(a, bb->center) - bb->radius);
  }
  const Box& x = std::get<Box>(a);
  const Box& y = std::get<Box>(b);
  double s = 0.0;
  for (std::size_t k = 0; k < x.lower.size(); ++k) {
    const double d = std::max({y.lower[k] - x.upper[k], x.lower[k] - y.upper[k], 0.0});
    s += d * d;
  }
  return std::sqrt(s);
}

bool segment_hits(const Shape& shape, std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  return std::visit(
      Overloaded{
          [&](const Ball& b) {
            // Minimum distance from the centre over the closed segment.
            double dd = 0.0;
            double proj = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
              const double d = y[k] - x[k];
              dd += d * d;
              proj += (b.center[k] - x[k]) * d;
            }
            const double t = dd > 0.0 ? std::clamp(proj / dd, 0.0, 1.0) : 0.0;
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
              const double p = x[k] + t * (y[k] - x[k]) - b.center[k];
              s += p * p;
            }
            return std::sqrt(s) < b.radius - kSurfaceTol * std::max(1.0, b.radius);
          },
          [&](const Box& b) {
            // Slab clipping against the open box shrunk by the tolerance.
            double t0 = 0.0;
            double t1 = 1.0;
            for (std::size_t k = 0; k < n; ++k) {
              const double tol = kSurfaceTol * std::max(1.0, b.upper[k] - b.lower[k]);
              const double lo = b.lower[k] + tol;
              const double hi = b.upper[k] - tol;
              const double d = y[k] - x[k];
              if (d == 0.0) {
                if (x[k] <= lo || x[k] >= hi) return false;
                continue;
              }
              double a = (lo - x[k]) / d;
              double c = (hi - x[k]) / d;
              if (a > c) std::swap(a, c);
              t0 = std::max(t0, a);
              t1 = std::min(t1, c);
              if (t0 >= t1) return false;
            }
            return t1 > t0;
          },
      },
      shape);
}

ObstacleSet::ObstacleSet(int dimension, std::vector<Shape> shapes) : dim_(dimension), shapes_(std::move(shapes)) {
  if (dim_ < 3) throw Error(ErrorCode::InvalidGeometry, "dimension must be at least 3");
  if (shapes_.empty()) throw Error(ErrorCode::InvalidGeometry, "at least one obstacle is required");
  for (const Shape& s : shapes_) {
    std::visit(Overloaded{
                   [&](const Ball& b) {
                     if (static_cast<int>(b.center.size()) != dim_)
                       throw Error(ErrorCode::InvalidGeometry, "ball centre has wrong dimension");
                     if (!(b.radius > 0.0)) throw Error(ErrorCode::InvalidGeometry, "ball radius must be positive");
                   },
                   [&](const Box& b) {
                     if (static_cast<int>(b.lower.size()) != dim_ || static_cast<int>(b.upper.size()) != dim_)
                       throw Error(ErrorCode::InvalidGeometry, "box corner has wrong dimension");
                     for (int k = 0; k < dim_; ++k)
                       if (!(b.upper[static_cast<std::size_t>(k)] > b.lower[static_cast<std::size_t>(k)]))
                         throw Error(ErrorCode::InvalidGeometry, "box has empty interior");
                   },
               },
               s);
  }
}

std::pair<double, int> ObstacleSet::signed_distance(std::span<const double> x) const {
  double best = std::numeric_limits<double>::infinity();
  int idx = -1;
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const double d = pmc::signed_distance(shapes_[i], x);
    if (d < best) {
      best = d;
      idx = static_cast<int>(i);
    }
  }
  return {best, idx};
}

double ObstacleSet::max_extent() const {
  double e = 0.0;
  for (const Shape& s : shapes_) e = std::max(e, extent_from_origin(s));
  return e;
}

double ObstacleSet::min_gap() const {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shapes_.size(); ++i)
    for (std::size_t j = i + 1; j < shapes_.size(); ++j) g = std::min(g, shape_gap(shapes_[i], shapes_[j]));
  return g;
}

ExteriorGrid build_grid(const ObstacleSet& obstacles, double r_far, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorCode::InvalidGeometry, "grid spacing must be positive");
  const double extent = obstacles.max_extent();
  if (!(r_far > 2.0 * extent))
    throw Error(ErrorCode::TruncationTooTight, "far radius " + std::to_string(r_far) +
                                                   " must exceed twice the obstacle extent " +
                                                   std::to_string(extent));
  if (obstacles.size() > 1) {
    const double gap = obstacles.min_gap();
    if (!(gap > 0.0)) throw Error(ErrorCode::ObstaclesOverlap, "obstacle closures intersect");
    if (gap < 3.0 * spacing)
      throw Error(ErrorCode::GapUnresolved,
                  "minimum gap " + std::to_string(gap) + " is below 3 cells of size " + std::to_string(spacing));
  }
  return ExteriorGrid(obstacles, r_far, spacing);
}

bool segment_clear(std::span<const double> x, std::span<const double> y, const ExteriorGrid& grid) {
  for (const Shape& s : grid.obstacles().shapes())
    if (segment_hits(s, x, y)) return false;
  return true;
}

SurfaceProjection project_to_boundary(std::span<const double> x, const ExteriorGrid& grid) {
  const auto [sd, idx] = grid.obstacles().signed_distance(x);
  if (std::fabs(sd) > 2.0 * grid.spacing())
    throw Error(ErrorCode::NotNearBoundary,
                "point is " + std::to_string(sd) + " from the obstacle surface (limit 2h)");
  return {nearest_surface_point(grid.obstacles().shapes()[static_cast<std::size_t>(idx)], x), idx};
}

}  // namespace pmc
