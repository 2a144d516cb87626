#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace pmc {

using Point = std::vector<double>;

double norm(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);

/// Closed ball obstacle.
struct Ball {
  Point center;
  double radius = 0.0;
};

/// Closed axis-aligned box obstacle.
struct Box {
  Point lower;
  Point upper;
};

using Shape = std::variant<Ball, Box>;

/// Signed distance to the shape surface, negative inside.
double signed_distance(const Shape& shape, std::span<const double> x);
/// Nearest point of the shape surface.
Point nearest_surface_point(const Shape& shape, std::span<const double> x);
/// Outward unit normal of the surface near `x` (of the face or radial direction
/// selected by nearest_surface_point).
Point outward_normal(const Shape& shape, std::span<const double> x);
/// Largest |x| over the shape.
double extent_from_origin(const Shape& shape);
/// Euclidean distance between two shapes (0 if they intersect).
double shape_gap(const Shape& a, const Shape& b);
/// True when some inner point of the open segment (x, y) lies in the closed shape.
bool segment_hits(const Shape& shape, std::span<const double> x, std::span<const double> y);

/// The bounded obstacles whose complement is the computational domain.
class ObstacleSet {
public:
  ObstacleSet(int dimension, std::vector<Shape> shapes);

  int dimension() const noexcept { return dim_; }
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }
  std::size_t size() const noexcept { return shapes_.size(); }

  /// Minimum signed distance over all obstacles and the index achieving it.
  std::pair<double, int> signed_distance(std::span<const double> x) const;
  double max_extent() const;
  double min_gap() const;
  /// A single obstacle (balls and boxes are convex).
  bool convex() const noexcept { return shapes_.size() == 1; }

private:
  int dim_;
  std::vector<Shape> shapes_;
};

enum class NodeTag : std::uint8_t { Obstacle, Boundary, Interior, Farfield };

/// Exterior nodes closer than this many grid spacings to an obstacle join the
/// boundary layer.
inline constexpr double kBoundaryBand = 1.0;

/// A boundary node, tied to phi through the nearest obstacle surface point.
struct BoundaryNode {
  std::int64_t node;
  Point surface_point;
  int obstacle;
  double signed_distance = 0.0;  ///< negative inside the obstacle
};

/// Uniform Cartesian node grid on [-R_far, R_far]^n with every node classified.
///
/// Nodes at or beyond |x| = R_far are far-field, closed-obstacle nodes that
/// share a cell with a free node form the boundary layer, the remaining
/// obstacle nodes are inactive. Energies are summed over active cells: cells
/// with no inactive corner and at least one interior corner.
class ExteriorGrid {
public:
  ExteriorGrid(ObstacleSet obstacles, double r_far, double spacing);

  int dimension() const noexcept { return obstacles_.dimension(); }
  double spacing() const noexcept { return h_; }
  double far_radius() const noexcept { return r_far_; }
  const ObstacleSet& obstacles() const noexcept { return obstacles_; }

  std::int64_t nodes_per_axis() const noexcept { return per_axis_; }
  std::int64_t node_count() const noexcept { return static_cast<std::int64_t>(tags_.size()); }
  std::int64_t cell_count() const noexcept { return static_cast<std::int64_t>(cells_.size()); }
  double cell_volume() const noexcept { return cell_volume_; }

  NodeTag tag(std::int64_t node) const { return tags_[static_cast<std::size_t>(node)]; }
  std::span<const NodeTag> tags() const noexcept { return tags_; }
  bool is_free(std::int64_t node) const { return tag(node) == NodeTag::Interior; }

  /// Lower-corner node index of every active cell.
  std::span<const std::int64_t> cells() const noexcept { return cells_; }
  /// Offsets from a cell's lower corner to its 2^n corners; bit k of the
  /// corner number selects the upper node along axis k.
  std::span<const std::int64_t> corner_offsets() const noexcept { return corner_offsets_; }
  std::span<const std::int64_t> strides() const noexcept { return strides_; }
  std::span<const BoundaryNode> boundary_nodes() const noexcept { return boundary_; }

  void node_coordinates(std::int64_t node, std::span<double> out) const;
  Point node_point(std::int64_t node) const;
  void cell_center(std::int64_t cell_lower, std::span<double> out) const;
  /// Multi-index of a node.
  std::vector<std::int64_t> node_multi_index(std::int64_t node) const;
  std::int64_t node_index(std::span<const std::int64_t> multi) const;

  std::int64_t count(NodeTag t) const;
  /// Number of connected components of the boundary layer (cell adjacency).
  int boundary_components() const noexcept { return boundary_components_; }

private:
  void classify();
  void collect_cells();
  void check_connectivity();

  ObstacleSet obstacles_;
  double r_far_;
  double h_;
  double cell_volume_;
  std::int64_t per_axis_;
  std::vector<std::int64_t> strides_;
  std::vector<std::int64_t> corner_offsets_;
  std::vector<NodeTag> tags_;
  std::vector<std::int64_t> cells_;
  std::vector<BoundaryNode> boundary_;
  int boundary_components_ = 0;
};

/// Validates the obstacle set against the truncation and resolution rules and
/// builds the classified grid. Throws GapUnresolved, ObstaclesOverlap,
/// TruncationTooTight or InvalidGeometry.
ExteriorGrid build_grid(const ObstacleSet& obstacles, double r_far, double spacing);

/// True iff no inner point of the segment xy lies in a closed obstacle.
bool segment_clear(std::span<const double> x, std::span<const double> y, const ExteriorGrid& grid);

struct SurfaceProjection {
  Point point;
  int obstacle;
};

/// Nearest obstacle surface point of a point within 2h of the boundary.
/// Throws NotNearBoundary otherwise.
SurfaceProjection project_to_boundary(std::span<const double> x, const ExteriorGrid& grid);

}  // namespace pmc
