#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pmc/geometry.hpp"

namespace pmc {

/// Nodal values of a candidate solution on an ExteriorGrid. Values at
/// inactive obstacle nodes are carried but never read by the energies.
class ScalarField {
public:
  explicit ScalarField(std::shared_ptr<const ExteriorGrid> grid);
  ScalarField(std::shared_ptr<const ExteriorGrid> grid, std::vector<double> values);

  /// Samples f at every node and zeroes the far-field nodes.
  static ScalarField from_function(std::shared_ptr<const ExteriorGrid> grid,
                                   const std::function<double(std::span<const double>)>& f);

  const ExteriorGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const ExteriorGrid>& grid_ptr() const noexcept { return grid_; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

  /// Max |u| over non-obstacle nodes.
  double sup_norm() const;
  /// Max |u - other| over non-obstacle nodes.
  double sup_distance(const ScalarField& other) const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double a);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

private:
  std::shared_ptr<const ExteriorGrid> grid_;
  std::vector<double> values_;
};

/// Gradient of the multilinear interpolant at the centre of the cell with the
/// given lower corner.
void cell_gradient(const ExteriorGrid& grid, std::span<const double> u, std::int64_t cell_lower,
                   std::span<double> out);

/// Mean of the cell's corner values (the interpolant at the cell centre).
double cell_average(const ExteriorGrid& grid, std::span<const double> u, std::int64_t cell_lower);

/// Affine closure of dependent nodes: u[node_r] = constant_r + sum weight * u[col]
/// over the row's entries, where every column is a free node.
struct NodeConstraints {
  std::vector<std::int64_t> nodes;
  std::vector<double> constants;
  std::vector<std::size_t> row_start{0};
  std::vector<std::int64_t> columns;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  void add_row(std::int64_t node, double constant) {
    nodes.push_back(node);
    constants.push_back(constant);
    row_start.push_back(columns.size());
  }
  void add_entry(std::int64_t column, double weight) {
    columns.push_back(column);
    weights.push_back(weight);
    ++row_start.back();
  }
  /// Overwrites the dependent nodes from the free ones.
  void apply(std::span<double> u) const;
  /// Adds the chain-rule contribution of the dependent entries of a nodal
  /// derivative to the free entries. Dependent entries are left untouched.
  void fold(std::span<double> grad) const;
};

/// Tensor two-point Gauss rule on a grid cell: gradients of the multilinear
/// interpolant at the 2^n points (1/2 +- 1/(2 sqrt 3)) h along each axis.
/// Corner c has bit k set when it is the upper corner along axis k.
class CellQuadrature {
public:
  static constexpr int kMaxDimension = 6;
  static constexpr int kMaxPoints = 1 << kMaxDimension;

  CellQuadrature(int dimension, double spacing);

  int dimension() const noexcept { return n_; }
  int points() const noexcept { return points_; }

  /// grads[q * n + k] = d u / d x_k at point q.
  void gradients(const double* corner_values, double* grads) const;
  /// Gathers the corner values of the cell and evaluates its gradients.
  void gradients(std::span<const std::int64_t> offsets, const double* u, std::int64_t lower, double* grads) const;
  /// corner_out[c] += sum over q, k of flux[q * n + k] * d grads[q * n + k] / d u_c.
  void scatter(const double* flux, double* corner_out) const;
  /// Largest |grad u| over the points.
  double max_slope(std::span<const std::int64_t> offsets, const double* u, std::int64_t lower) const;

private:
  int n_;
  int points_;
  std::vector<double> table_;  // (q * n + k) * corners + c
};

}  // namespace pmc
