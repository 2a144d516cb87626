#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "pmc/error.hpp"
#include "pmc/geometry.hpp"

namespace pmc {
namespace {

constexpr std::int64_t kMaxNodes = 400'000'000;

// All multi-index displacements in {-1,0,1}^n except zero.
std::vector<std::vector<int>> moore_stencil(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> d(static_cast<std::size_t>(n), -1);
  for (;;) {
    if (std::any_of(d.begin(), d.end(), [](int c) { return c != 0; })) out.push_back(d);
    int k = 0;
    while (k < n && d[static_cast<std::size_t>(k)] == 1) d[static_cast<std::size_t>(k++)] = -1;
    if (k == n) break;
    ++d[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace

ExteriorGrid::ExteriorGrid(ObstacleSet obstacles, double r_far, double spacing)
    : obstacles_(std::move(obstacles)), r_far_(r_far), h_(spacing) {
  const int n = dimension();
  const auto intervals = static_cast<std::int64_t>(std::ceil(2.0 * r_far_ / h_ - 1e-9));
  per_axis_ = intervals + 1;
  strides_.resize(static_cast<std::size_t>(n));
  std::int64_t total = 1;
  for (int k = 0; k < n; ++k) {
    strides_[static_cast<std::size_t>(k)] = total;
    if (total > kMaxNodes / per_axis_)
      throw Error(ErrorCode::InvalidGeometry, "grid too large: refine R_far or coarsen h_grid");
    total *= per_axis_;
  }
  cell_volume_ = std::pow(h_, n);
  corner_offsets_.resize(std::size_t{1} << n);
  for (std::size_t c = 0; c < corner_offsets_.size(); ++c) {
    std::int64_t off = 0;
    for (int k = 0; k < n; ++k)
      if (c & (std::size_t{1} << k)) off += strides_[static_cast<std::size_t>(k)];
    corner_offsets_[c] = off;
  }
  tags_.assign(static_cast<std::size_t>(total), NodeTag::Interior);
  classify();
  collect_cells();
  check_connectivity();
}

void ExteriorGrid::node_coordinates(std::int64_t node, std::span<double> out) const {
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::int64_t i = node % per_axis_;
    node /= per_axis_;
    out[k] = -r_far_ + static_cast<double>(i) * h_;
  }
}

Point ExteriorGrid::node_point(std::int64_t node) const {
  Point p(static_cast<std::size_t>(dimension()));
  node_coordinates(node, p);
  return p;
}

void ExteriorGrid::cell_center(std::int64_t cell_lower, std::span<double> out) const {
  node_coordinates(cell_lower, out);
  for (double& c : out) c += 0.5 * h_;
}

std::vector<std::int64_t> ExteriorGrid::node_multi_index(std::int64_t node) const {
  std::vector<std::int64_t> m(static_cast<std::size_t>(dimension()));
  for (auto& c : m) {
    c = node % per_axis_;
    node /= per_axis_;
  }
  return m;
}

std::int64_t ExteriorGrid::node_index(std::span<const std::int64_t> multi) const {
  std::int64_t idx = 0;
  for (std::size_t k = 0; k < multi.size(); ++k) idx += multi[k] * strides_[k];
  return idx;
}

std::int64_t ExteriorGrid::count(NodeTag t) const {
  return static_cast<std::int64_t>(std::count(tags_.begin(), tags_.end(), t));
}

void ExteriorGrid::classify() {
  const int n = dimension();
  const std::int64_t total = node_count();
  Point x(static_cast<std::size_t>(n));
  std::vector<std::int64_t> solid;
  std::vector<int> has_layer(obstacles_.size(), 0);
  const double far_cut = r_far_ * (1.0 - 1e-12);
  const double band = kBoundaryBand * h_;
  for (std::int64_t i = 0; i < total; ++i) {
    node_coordinates(i, x);
    if (norm(x) >= far_cut) {
      tags_[static_cast<std::size_t>(i)] = NodeTag::Farfield;
      continue;
    }
    const auto [sd, idx] = obstacles_.signed_distance(x);
    if (sd <= 0.0) {
      tags_[static_cast<std::size_t>(i)] = NodeTag::Obstacle;
      solid.push_back(i);
    } else if (sd <= band) {
      tags_[static_cast<std::size_t>(i)] = NodeTag::Boundary;
      boundary_.push_back({i, nearest_surface_point(obstacles_.shapes()[static_cast<std::size_t>(idx)], x), idx, sd});
      has_layer[static_cast<std::size_t>(idx)] = 1;
    }
  }
  std::vector<std::int64_t> inner;

  const auto stencil = moore_stencil(n);
  for (std::int64_t node : solid) {
    const auto m = node_multi_index(node);
    bool touches_free = false;
    for (const auto& d : stencil) {
      std::int64_t nb = 0;
      bool inside = true;
      for (int k = 0; k < n; ++k) {
        const std::int64_t c = m[static_cast<std::size_t>(k)] + d[static_cast<std::size_t>(k)];
        if (c < 0 || c >= per_axis_) {
          inside = false;
          break;
        }
        nb += c * strides_[static_cast<std::size_t>(k)];
      }
      if (!inside) continue;
      const NodeTag t = tags_[static_cast<std::size_t>(nb)];
      if (t == NodeTag::Interior || t == NodeTag::Boundary) {
        touches_free = true;
        break;
      }
    }
    if (!touches_free) continue;
    inner.push_back(node);
  }
  for (std::int64_t node : inner) {
    tags_[static_cast<std::size_t>(node)] = NodeTag::Boundary;
    node_coordinates(node, x);
    const auto [sd, idx] = obstacles_.signed_distance(x);
    boundary_.push_back({node, nearest_surface_point(obstacles_.shapes()[static_cast<std::size_t>(idx)], x), idx, sd});
    has_layer[static_cast<std::size_t>(idx)] = 1;
  }
  for (std::size_t i = 0; i < has_layer.size(); ++i)
    if (!has_layer[i])
      throw Error(ErrorCode::InvalidGeometry,
                  "obstacle " + std::to_string(i) + " contains no grid node; refine h_grid");
}

void ExteriorGrid::collect_cells() {
  const int n = dimension();
  const std::int64_t cells_per_axis = per_axis_ - 1;
  std::int64_t total = 1;
  for (int k = 0; k < n; ++k) total *= cells_per_axis;
  std::vector<std::int64_t> m(static_cast<std::size_t>(n), 0);
  for (std::int64_t c = 0; c < total; ++c) {
    std::int64_t lower = 0;
    for (int k = 0; k < n; ++k) lower += m[static_cast<std::size_t>(k)] * strides_[static_cast<std::size_t>(k)];
    bool any_free = false;
    bool any_dead = false;
    for (std::int64_t off : corner_offsets_) {
      const NodeTag t = tags_[static_cast<std::size_t>(lower + off)];
      any_free |= t == NodeTag::Interior || t == NodeTag::Boundary;
      any_dead |= t == NodeTag::Obstacle;
    }
    if (any_free && !any_dead) cells_.push_back(lower);
    for (int k = 0; k < n; ++k) {
      if (++m[static_cast<std::size_t>(k)] < cells_per_axis) break;
      m[static_cast<std::size_t>(k)] = 0;
    }
  }
}

void ExteriorGrid::check_connectivity() {
  const int n = dimension();
  const std::int64_t total = node_count();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(total), 0);

  auto flood = [&](std::int64_t seed, NodeTag want, bool moore) {
    const auto stencil = moore ? moore_stencil(n) : std::vector<std::vector<int>>{};
    std::deque<std::int64_t> queue{seed};
    seen[static_cast<std::size_t>(seed)] = 1;
    while (!queue.empty()) {
      const std::int64_t node = queue.front();
      queue.pop_front();
      const auto m = node_multi_index(node);
      auto visit = [&](std::int64_t nb) {
        if (!seen[static_cast<std::size_t>(nb)] && tags_[static_cast<std::size_t>(nb)] == want) {
          seen[static_cast<std::size_t>(nb)] = 1;
          queue.push_back(nb);
        }
      };
      if (moore) {
        for (const auto& d : stencil) {
          std::int64_t nb = 0;
          bool ok = true;
          for (int k = 0; k < n && ok; ++k) {
            const std::int64_t c = m[static_cast<std::size_t>(k)] + d[static_cast<std::size_t>(k)];
            ok = c >= 0 && c < per_axis_;
            nb += c * strides_[static_cast<std::size_t>(k)];
          }
          if (ok) visit(nb);
        }
      } else {
        for (int k = 0; k < n; ++k) {
          const std::int64_t s = strides_[static_cast<std::size_t>(k)];
          if (m[static_cast<std::size_t>(k)] > 0) visit(node - s);
          if (m[static_cast<std::size_t>(k)] + 1 < per_axis_) visit(node + s);
        }
      }
    }
  };

  int interior_components = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    if (tags_[static_cast<std::size_t>(i)] == NodeTag::Interior && !seen[static_cast<std::size_t>(i)]) {
      ++interior_components;
      flood(i, NodeTag::Interior, false);
    }
  }
  if (interior_components != 1)
    throw Error(ErrorCode::InvalidGeometry,
                "discrete exterior domain has " + std::to_string(interior_components) + " components");

  boundary_components_ = 0;
  for (const BoundaryNode& b : boundary_) {
    if (!seen[static_cast<std::size_t>(b.node)]) {
      ++boundary_components_;
      flood(b.node, NodeTag::Boundary, true);
    }
  }
}

}  // namespace pmc
