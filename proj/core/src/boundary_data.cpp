#include "pmc/boundary_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pmc/error.hpp"
#include "pmc/parallel.hpp"

namespace pmc {
namespace {

constexpr std::uint64_t kSampleSeed = 0x5eedULL;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

Point random_surface_point(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  return std::visit(Overloaded{
                        [&](const Ball& b) {
                          Point p(b.center.size());
                          double len = 0.0;
                          while (len < 1e-12) {
                            for (double& c : p) c = normal(rng);
                            len = norm(p);
                          }
                          for (std::size_t k = 0; k < p.size(); ++k) p[k] = b.center[k] + b.radius * p[k] / len;
                          return p;
                        },
                        [&](const Box& b) {
                          const std::size_t n = b.lower.size();
                          // Pick a face with probability proportional to its area.
                          std::vector<double> area(n, 1.0);
                          for (std::size_t k = 0; k < n; ++k)
                            for (std::size_t j = 0; j < n; ++j)
                              if (j != k) area[k] *= b.upper[j] - b.lower[j];
                          double total = 0.0;
                          for (double a : area) total += 2.0 * a;
                          double pick = unit(rng) * total;
                          std::size_t axis = 0;
                          int side = 0;
                          for (std::size_t k = 0; k < n; ++k) {
                            if (pick < area[k]) { axis = k; side = 0; break; }
                            pick -= area[k];
                            if (pick < area[k]) { axis = k; side = 1; break; }
                            pick -= area[k];
                            axis = k;
                            side = 1;
                          }
                          Point p(n);
                          for (std::size_t k = 0; k < n; ++k) p[k] = b.lower[k] + unit(rng) * (b.upper[k] - b.lower[k]);
                          p[axis] = side == 0 ? b.lower[axis] : b.upper[axis];
                          return p;
                        },
                    },
                    shape);
}

std::vector<Point> axis_extremes(const Shape& shape) {
  std::vector<Point> out;
  std::visit(Overloaded{
                 [&](const Ball& b) {
                   for (std::size_t k = 0; k < b.center.size(); ++k)
                     for (double s : {-1.0, 1.0}) {
                       Point p = b.center;
                       p[k] += s * b.radius;
                       out.push_back(p);
                     }
                 },
                 [&](const Box& b) {
                   Point mid(b.lower.size());
                   for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (b.lower[k] + b.upper[k]);
                   for (std::size_t k = 0; k < mid.size(); ++k)
                     for (double bound : {b.lower[k], b.upper[k]}) {
                       Point p = mid;
                       p[k] = bound;
                       out.push_back(p);
                     }
                 },
             },
             shape);
  return out;
}

struct PairResult {
  double ratio = 0.0;
  std::int64_t i = -1;
  std::int64_t j = -1;
  std::int64_t tested = 0;
};

// Max ratio over pairs (i < j) accepted by `use_pair`, reduced in block order.
template <class Accept>
PairResult scan_pairs(const std::vector<BoundarySample>& s, Accept&& use_pair) {
  const std::size_t blocks = block_count(s.size(), 16);
  std::vector<PairResult> partial(blocks);
  for_each_block(s.size(), 16, [&](std::size_t b, std::size_t e, std::size_t blk) {
    PairResult r;
    for (std::size_t i = b; i < e; ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        const double d = distance(s[i].point, s[j].point);
        if (d <= 1e-12) continue;
        if (!use_pair(s[i], s[j])) continue;
        ++r.tested;
        const double ratio = std::fabs(s[i].value - s[j].value) / d;
        if (ratio > r.ratio) {
          r.ratio = ratio;
          r.i = static_cast<std::int64_t>(i);
          r.j = static_cast<std::int64_t>(j);
        }
      }
    partial[blk] = r;
  });
  PairResult out;
  for (const PairResult& p : partial) {
    out.tested += p.tested;
    if (p.ratio > out.ratio) {
      out.ratio = p.ratio;
      out.i = p.i;
      out.j = p.j;
    }
  }
  return out;
}

}  // namespace

BoundaryDatum::BoundaryDatum(std::vector<TraceRule> rules) : rules_(std::move(rules)) {
  for (const TraceRule& r : rules_) {
    if (const auto* t = std::get_if<TabulatedTrace>(&r)) {
      if (t->points.empty() || t->points.size() != t->values.size())
        throw Error(ErrorCode::ConfigInvalid, "tabulated trace needs matching, non-empty points and values");
    }
  }
}

BoundaryDatum BoundaryDatum::constant(std::size_t obstacles, double value) {
  return BoundaryDatum(std::vector<TraceRule>(obstacles, value));
}

BoundaryDatum BoundaryDatum::negated() const {
  BoundaryDatum out = *this;
  out.negate_ = !negate_;
  return out;
}

double BoundaryDatum::operator()(int obstacle, std::span<const double> x) const {
  const TraceRule& rule = rules_.at(static_cast<std::size_t>(obstacle));
  const double v = std::visit(Overloaded{
                                  [](double c) { return c; },
                                  [&](const Expression& e) { return e.eval(x); },
                                  [&](const TabulatedTrace& t) {
                                    std::size_t best = 0;
                                    double bd = std::numeric_limits<double>::infinity();
                                    for (std::size_t i = 0; i < t.points.size(); ++i) {
                                      const double d = distance(t.points[i], x);
                                      if (d < bd) {
                                        bd = d;
                                        best = i;
                                      }
                                    }
                                    return t.values[best];
                                  },
                              },
                              rule);
  if (!std::isfinite(v)) throw Error(ErrorCode::ConfigInvalid, "boundary datum is not finite at a sample point");
  return negate_ ? -v : v;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Marginal: return "marginal";
  }
  return "unknown";
}

std::vector<BoundarySample> sample_boundary(const BoundaryDatum& phi, const ExteriorGrid& grid, int per_obstacle) {
  if (phi.size() != grid.obstacles().size())
    throw Error(ErrorCode::ConfigInvalid, "boundary datum has " + std::to_string(phi.size()) + " rules for " +
                                              std::to_string(grid.obstacles().size()) + " obstacles");
  std::vector<BoundarySample> out;
  for (const BoundaryNode& b : grid.boundary_nodes()) out.push_back({b.surface_point, b.obstacle, phi(b.obstacle, b.surface_point)});
  std::mt19937_64 rng(kSampleSeed);
  const auto& shapes = grid.obstacles().shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const int idx = static_cast<int>(i);
    for (Point& p : axis_extremes(shapes[i])) {
      const double v = phi(idx, p);
      out.push_back({std::move(p), idx, v});
    }
    for (int k = 0; k < per_obstacle; ++k) {
      Point p = random_surface_point(shapes[i], rng);
      const double v = phi(idx, p);
      out.push_back({std::move(p), idx, v});
    }
  }
  return out;
}

DisplacingVerdict check_spacelike_displacing(const BoundaryDatum& phi, const ExteriorGrid& grid, double margin,
                                             int samples) {
  if (margin < 0.0 || margin >= 1.0) throw Error(ErrorCode::ConfigInvalid, "displacing margin must lie in [0, 1)");
  const auto s = sample_boundary(phi, grid, std::max(samples, 10));
  DisplacingVerdict v;
  v.samples = static_cast<std::int64_t>(s.size());
  if (grid.obstacles().convex()) {
    v.verdict = Verdict::Pass;
    v.note = "single convex obstacle: the displacing hypothesis is not required";
    return v;
  }
  const auto& shapes = grid.obstacles().shapes();
  const PairResult r = scan_pairs(s, [&](const BoundarySample& a, const BoundarySample& b) {
    // A chord of one ball always crosses it.
    if (a.obstacle == b.obstacle && std::holds_alternative<Ball>(shapes[static_cast<std::size_t>(a.obstacle)]))
      return false;
    return segment_clear(a.point, b.point, grid);
  });
  v.pairs_tested = r.tested;
  v.worst_ratio = r.ratio;
  if (r.i >= 0) {
    v.worst_x = s[static_cast<std::size_t>(r.i)].point;
    v.worst_y = s[static_cast<std::size_t>(r.j)].point;
  }
  if (r.ratio >= 1.0) {
    v.verdict = Verdict::Fail;
  } else if (r.ratio <= 1.0 - margin) {
    v.verdict = Verdict::Pass;
  } else {
    v.verdict = Verdict::Marginal;
  }
  v.note = "sampled check over " + std::to_string(r.tested) + " clear pairs";
  return v;
}

double boundary_lipschitz_constant(const BoundaryDatum& phi, const ExteriorGrid& grid, int samples) {
  const auto s = sample_boundary(phi, grid, std::max(samples, 10));
  return scan_pairs(s, [](const BoundarySample&, const BoundarySample&) { return true; }).ratio;
}

double cutoff_profile(std::span<const double> x, double r_cut) {
  const double r = norm(x);
  return std::clamp((2.0 * r_cut - r) / r_cut, 0.0, 1.0);
}

double default_cutoff_radius(double phi_sup, double extent, double eps) {
  return std::max(2.0 * extent, 2.0 * phi_sup / eps * (1.0 + 1e-9));
}

void pin_boundary(const BoundaryDatum& phi, ScalarField& u) {
  for (const BoundaryNode& b : u.grid().boundary_nodes()) u[b.node] = phi(b.obstacle, b.surface_point);
}

std::string_view to_string(BoundaryClosure c) {
  return c == BoundaryClosure::Pinned ? "pinned" : "extrapolated";
}

NodeConstraints boundary_constraints(const BoundaryDatum& phi, const ExteriorGrid& grid, BoundaryClosure closure) {
  NodeConstraints nc;
  const int n = grid.dimension();
  const auto dn = static_cast<std::size_t>(n);
  const double h = grid.spacing();
  const double reach = (std::sqrt(static_cast<double>(n)) + kBoundaryBand) * h * (1.0 + 1e-9);
  const double origin = -grid.far_radius();
  const auto per_axis = grid.nodes_per_axis();
  const auto offsets = grid.corner_offsets();
  Point x(dn), y(dn), frac(dn);
  std::vector<std::int64_t> cell(dn);
  for (const BoundaryNode& b : grid.boundary_nodes()) {
    const double value = phi(b.obstacle, b.surface_point);
    grid.node_coordinates(b.node, x);
    const double dist = distance(x, b.surface_point);
    if (closure == BoundaryClosure::Pinned || dist <= 1e-12 * h) {
      nc.add_row(b.node, value);
      continue;
    }
    // Outward unit normal at the surface point.
    const double sign = b.signed_distance > 0.0 ? 1.0 : -1.0;
    bool inside = true;
    for (std::size_t k = 0; k < dn; ++k) {
      const double normal = sign * (x[k] - b.surface_point[k]) / dist;
      y[k] = b.surface_point[k] + reach * normal;
      const double t = (y[k] - origin) / h;
      cell[k] = static_cast<std::int64_t>(std::floor(t));
      frac[k] = t - static_cast<double>(cell[k]);
      inside = inside && cell[k] >= 0 && cell[k] + 1 < per_axis;
    }
    const std::int64_t lower = inside ? grid.node_index(cell) : 0;
    for (std::size_t c = 0; inside && c < offsets.size(); ++c) {
      const NodeTag t = grid.tag(lower + offsets[c]);
      inside = t == NodeTag::Interior || t == NodeTag::Farfield;
    }
    if (!inside) {
      nc.add_row(b.node, value);
      continue;
    }
    // Linear in the signed distance along the normal: phi at 0, u(y) at reach.
    const double ratio = b.signed_distance / reach;
    nc.add_row(b.node, value * (1.0 - ratio));
    for (std::size_t c = 0; c < offsets.size(); ++c) {
      const std::int64_t node = lower + offsets[c];
      if (grid.tag(node) != NodeTag::Interior) continue;
      double w = 1.0;
      for (std::size_t k = 0; k < dn; ++k) w *= ((c >> k) & 1U) ? frac[k] : 1.0 - frac[k];
      if (w != 0.0) nc.add_entry(node, ratio * w);
    }
  }
  return nc;
}

Extension extend_to_feasible(const BoundaryDatum& phi, std::shared_ptr<const ExteriorGrid> grid, double eps,
                             const ExtensionOptions& options) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::NotLipschitzEnough, "eps must lie in (0, 1)");
  const auto samples = sample_boundary(phi, *grid, std::max(options.samples, 10));
  const double lip = scan_pairs(samples, [](const BoundarySample&, const BoundarySample&) { return true; }).ratio;
  const double slope = 1.0 - eps;
  if (lip > slope + 1e-12)
    throw Error(ErrorCode::NotLipschitzEnough, "sampled Lipschitz constant " + std::to_string(lip) +
                                                   " exceeds 1 - eps = " + std::to_string(slope));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const BoundarySample& s : samples) {
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  const double sup = std::max(std::fabs(lo), std::fabs(hi));
  const double extent = grid->obstacles().max_extent();
  const double far = grid->far_radius();
  if (options.cone_taper && sup > slope * (far - extent))
    throw Error(ErrorCode::CutoffTooTight, "cone taper needs ||phi|| = " + std::to_string(sup) +
                                               " <= (1 - eps)(R_far - extent) = " +
                                               std::to_string(slope * (far - extent)));
  const double r_cut =
      options.cone_taper ? far : options.r_cut.value_or(default_cutoff_radius(sup, extent, eps));
  if (!options.cone_taper &&
      (r_cut > 0.5 * far || r_cut < extent || (options.certify && !(sup < eps * r_cut))))
    throw Error(ErrorCode::CutoffTooTight, "no admissible cutoff radius: need extent " + std::to_string(extent) +
                                               " <= r_cut, ||phi||/eps = " + std::to_string(sup / eps) +
                                               " < r_cut <= R_far/2 = " + std::to_string(0.5 * grid->far_radius()) +
                                               " (got " + std::to_string(r_cut) + ")");

  // Cone apexes sit at the boundary nodes themselves, carrying phi of their projections.
  const auto layer = grid->boundary_nodes();
  std::vector<Point> apex;
  std::vector<double> apex_value;
  for (std::size_t i = 0; i < layer.size(); ++i) {
    apex.push_back(grid->node_point(layer[i].node));
    apex_value.push_back(samples[i].value);
  }

  ScalarField w(grid);
  const int n = grid->dimension();
  const std::int64_t total = grid->node_count();
  for_each_block(static_cast<std::size_t>(total), 4096, [&](std::size_t b, std::size_t e, std::size_t) {
    Point x(static_cast<std::size_t>(n));
    for (std::size_t i = b; i < e; ++i) {
      if (grid->tag(static_cast<std::int64_t>(i)) != NodeTag::Interior) continue;
      grid->node_coordinates(static_cast<std::int64_t>(i), x);
      const double v = options.cone_taper ? 1.0 : cutoff_profile(x, r_cut);
      const double cap = options.cone_taper ? slope * std::max(0.0, far - norm(x)) : 1.0;
      if (v == 0.0 || cap == 0.0) continue;
      double upper = std::numeric_limits<double>::infinity();
      double lower = -upper;
      if (lo == hi) upper = lower = lo;
      for (std::size_t a = 0; lo != hi && a < apex.size(); ++a) {
        const double d = slope * distance(x, apex[a]);
        upper = std::min(upper, apex_value[a] + d);
        lower = std::max(lower, apex_value[a] - d);
      }
      const double mid = std::clamp(0.5 * (upper + lower), lo, hi);
      w[static_cast<std::int64_t>(i)] = options.cone_taper ? std::clamp(mid, -cap, cap) : v * mid;
    }
  });
  pin_boundary(phi, w);
  return {std::move(w), r_cut, lip, sup, options.cone_taper ? slope : sup / r_cut + slope};
}

}  // namespace pmc
