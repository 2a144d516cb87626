#include "pmc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>

#include "pmc/error.hpp"
#include "pmc/functional.hpp"
#include "pmc/parallel.hpp"

namespace pmc {

std::string_view to_string(ChainKind k) {
  switch (k) {
    case ChainKind::TouchesBoundary: return "touches_boundary";
    case ChainKind::ReachesFarField: return "reaches_far_field";
    case ChainKind::Interior: return "interior";
  }
  return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<LightChain> light_segment_scan(const ScalarField& u, double threshold) {
  if (!(threshold > 0.0 && threshold < 0.1))
    throw Error(ErrorCode::ConfigInvalid, "light segment threshold must lie in (0, 0.1)");
  const ExteriorGrid& grid = u.grid();
  const int n = grid.dimension();
  const auto dn = static_cast<std::size_t>(n);
  const auto cells = grid.cells();
  const double cut = 1.0 - threshold;

  struct Hot {
    std::int64_t cell;
    Point dir;
    double norm;
  };
  std::vector<Hot> hot;
  const EnergyModel model(u.grid_ptr(), CurvatureSpec::zero(n));
  const std::vector<double> slope = model.cell_slopes(u.values());
  Point g(dn);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (slope[i] <= cut) continue;
    cell_gradient(grid, u.values(), cells[i], g);
    const double m = norm(g);
    Point d(dn, 0.0);
    if (m > 0.0)
      for (std::size_t k = 0; k < dn; ++k) d[k] = g[k] / m;
    hot.push_back({cells[i], std::move(d), slope[i]});
  }
  if (hot.empty()) return {};

  std::unordered_map<std::int64_t, std::size_t> index;
  index.reserve(hot.size() * 2);
  for (std::size_t i = 0; i < hot.size(); ++i) index.emplace(hot[i].cell, i);

  // Offsets to the 3^n - 1 neighbouring cells.
  std::vector<std::int64_t> neighbours;
  const auto strides = grid.strides();
  std::vector<int> digit(dn, -1);
  while (true) {
    std::int64_t off = 0;
    bool zero = true;
    for (std::size_t k = 0; k < dn; ++k) {
      off += digit[k] * strides[k];
      zero = zero && digit[k] == 0;
    }
    if (!zero) neighbours.push_back(off);
    std::size_t k = 0;
    while (k < dn && digit[k] == 1) digit[k++] = -1;
    if (k == dn) break;
    ++digit[k];
  }

  const double cos_tol = std::cos(kAlignmentDegrees * std::numbers::pi / 180.0);
  std::vector<int> component(hot.size(), -1);
  std::vector<LightChain> chains;
  std::vector<std::size_t> stack;
  std::vector<std::int64_t> idx(dn), jdx(dn);
  for (std::size_t seed = 0; seed < hot.size(); ++seed) {
    if (component[seed] >= 0) continue;
    const int id = static_cast<int>(chains.size());
    component[seed] = id;
    stack.assign(1, seed);
    std::vector<std::size_t> members;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      members.push_back(cur);
      idx = grid.node_multi_index(hot[cur].cell);
      for (std::int64_t off : neighbours) {
        const auto it = index.find(hot[cur].cell + off);
        if (it == index.end() || component[it->second] >= 0) continue;
        // Reject offsets that wrap around an axis.
        jdx = grid.node_multi_index(it->first);
        bool adjacent = true;
        for (std::size_t k = 0; k < dn; ++k) adjacent = adjacent && std::llabs(jdx[k] - idx[k]) <= 1;
        if (!adjacent || dot(hot[cur].dir, hot[it->second].dir) < cos_tol) continue;
        component[it->second] = id;
        stack.push_back(it->second);
      }
    }

    LightChain chain;
    chain.direction.assign(dn, 0.0);
    for (std::size_t m : members) {
      for (std::size_t k = 0; k < dn; ++k) chain.direction[k] += hot[m].dir[k];
      chain.max_gradient = std::max(chain.max_gradient, hot[m].norm);
    }
    const double dl = norm(chain.direction);
    for (double& c : chain.direction) c /= dl;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    Point centre(dn);
    const auto offsets = grid.corner_offsets();
    for (std::size_t m : members) {
      chain.cells.push_back(hot[m].cell);
      grid.cell_center(hot[m].cell, centre);
      const double s = dot(centre, chain.direction);
      if (s < lo) {
        lo = s;
        chain.start = centre;
      }
      if (s > hi) {
        hi = s;
        chain.end = centre;
      }
      for (std::int64_t o : offsets) {
        const NodeTag t = grid.tag(hot[m].cell + o);
        chain.touches_boundary = chain.touches_boundary || t == NodeTag::Boundary;
        chain.reaches_far_field = chain.reaches_far_field || t == NodeTag::Farfield;
      }
    }
    std::sort(chain.cells.begin(), chain.cells.end());
    chain.length = hi - lo + grid.spacing();
    chain.kind = chain.touches_boundary    ? ChainKind::TouchesBoundary
                 : chain.reaches_far_field ? ChainKind::ReachesFarField
                                           : ChainKind::Interior;
    chains.push_back(std::move(chain));
  }
  return chains;
}

WeakResidual weak_residual_check(const ScalarField& u, const CurvatureSpec& spec, int trials, std::uint64_t seed,
                                 const NodeConstraints* constraints) {
  const ExteriorGrid& grid = u.grid();
  EnergyModel model(u.grid_ptr(), spec);
  if (constraints != nullptr) model.set_constraints(std::shared_ptr<const NodeConstraints>(std::shared_ptr<void>(), constraints));
  std::vector<double> g(static_cast<std::size_t>(grid.node_count()));
  model.value_and_gradient(u.values(), g);

  const int n = grid.dimension();
  const auto dn = static_cast<std::size_t>(n);
  const double h = grid.spacing();
  const double r_far = grid.far_radius();
  std::vector<std::int64_t> free_nodes;
  for (std::int64_t i = 0; i < grid.node_count(); ++i)
    if (grid.tag(i) == NodeTag::Interior) free_nodes.push_back(i);

  WeakResidual out;
  if (free_nodes.empty()) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, free_nodes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto per_axis = grid.nodes_per_axis();
  Point centre(dn), width(dn), x(dn);
  std::vector<std::int64_t> lo(dn), hi(dn), idx(dn);
  for (int trial = 0; trial < trials; ++trial) {
    grid.node_coordinates(free_nodes[pick(rng)], centre);
    for (std::size_t k = 0; k < dn; ++k) {
      width[k] = 2.0 * h * std::pow(0.125 * r_far / (2.0 * h), unit(rng));
      lo[k] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((centre[k] - width[k] + r_far) / h)));
      hi[k] = std::min<std::int64_t>(per_axis - 1,
                                     static_cast<std::int64_t>(std::ceil((centre[k] + width[k] + r_far) / h)));
    }
    // Enumerate the bump's bounding box.
    double num = 0.0;
    double den = 0.0;
    idx = lo;
    while (true) {
      const std::int64_t node = grid.node_index(idx);
      if (grid.tag(node) == NodeTag::Interior) {
        grid.node_coordinates(node, x);
        double v = 1.0;
        for (std::size_t k = 0; k < dn && v != 0.0; ++k) {
          const double s = (x[k] - centre[k]) / width[k];
          v *= std::fabs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
        }
        num += g[static_cast<std::size_t>(node)] * v;
        den += v * v;
      }
      std::size_t k = 0;
      while (k < dn && idx[k] == hi[k]) {
        idx[k] = lo[k];
        ++k;
      }
      if (k == dn) break;
      ++idx[k];
    }
    ++out.trials;
    if (den > 0.0) out.max_ratio = std::max(out.max_ratio, std::fabs(num) / std::sqrt(den * grid.cell_volume()));
  }
  return out;
}

DecayProfile decay_profile(const ScalarField& u, const std::vector<double>& radii, double phi_sup, double fraction) {
  const ExteriorGrid& grid = u.grid();
  const auto dn = static_cast<std::size_t>(grid.dimension());
  const double half = 0.5 * grid.spacing();
  DecayProfile out;
  out.fraction = fraction;
  out.shells.resize(radii.size());
  for (std::size_t j = 0; j < radii.size(); ++j) out.shells[j].radius = radii[j];
  Point x(dn);
  for (std::int64_t i = 0; i < grid.node_count(); ++i) {
    if (grid.tag(i) != NodeTag::Interior) continue;
    grid.node_coordinates(i, x);
    const double r = norm(x);
    for (ShellSample& s : out.shells) {
      if (std::fabs(r - s.radius) > half) continue;
      s.sup = std::max(s.sup, std::fabs(u[i]));
      ++s.nodes;
    }
  }
  for (std::size_t j = 1; j < out.shells.size(); ++j)
    if (out.shells[j].sup > out.shells[j - 1].sup * (1.0 + 1e-9) + 1e-14) out.non_increasing = false;
  if (!out.shells.empty()) out.final_below = out.shells.back().sup <= fraction * phi_sup + 1e-14;
  return out;
}

double interior_margin(const ScalarField& u, double shell) {
  const ExteriorGrid& grid = u.grid();
  const EnergyModel model(u.grid_ptr(), CurvatureSpec::zero(grid.dimension()));
  const std::vector<double> slope = model.cell_slopes(u.values());
  const auto cells = grid.cells();
  const double limit = grid.far_radius() - shell;
  Point c(static_cast<std::size_t>(grid.dimension()));
  double worst = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    grid.cell_center(cells[i], c);
    if (norm(c) <= limit) worst = std::max(worst, slope[i]);
  }
  return 1.0 - worst;
}

}  // namespace pmc
