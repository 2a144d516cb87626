#include "pmc/field.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pmc/error.hpp"
#include "pmc/parallel.hpp"

namespace pmc {
namespace {
std::atomic<int> g_threads{1};
}

void set_worker_threads(int threads) { g_threads = std::max(1, threads); }
int worker_threads() { return g_threads.load(); }

ScalarField::ScalarField(std::shared_ptr<const ExteriorGrid> grid)
    : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->node_count()), 0.0) {}

ScalarField::ScalarField(std::shared_ptr<const ExteriorGrid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != grid_->node_count())
    throw std::invalid_argument("ScalarField: value count does not match the grid");
}

ScalarField ScalarField::from_function(std::shared_ptr<const ExteriorGrid> grid,
                                       const std::function<double(std::span<const double>)>& f) {
  ScalarField out(grid);
  Point x(static_cast<std::size_t>(grid->dimension()));
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    if (grid->tag(i) == NodeTag::Farfield) continue;
    grid->node_coordinates(i, x);
    out[i] = f(x);
  }
  return out;
}

double ScalarField::sup_norm() const {
  double m = 0.0;
  for (std::int64_t i = 0; i < grid_->node_count(); ++i)
    if (grid_->tag(i) != NodeTag::Obstacle) m = std::max(m, std::fabs(values_[static_cast<std::size_t>(i)]));
  return m;
}

double ScalarField::sup_distance(const ScalarField& other) const {
  double m = 0.0;
  for (std::int64_t i = 0; i < grid_->node_count(); ++i)
    if (grid_->tag(i) != NodeTag::Obstacle)
      m = std::max(m, std::fabs(values_[static_cast<std::size_t>(i)] - other[i]));
  return m;
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

void cell_gradient(const ExteriorGrid& grid, std::span<const double> u, std::int64_t cell_lower,
                   std::span<double> out) {
  const auto offsets = grid.corner_offsets();
  const int n = grid.dimension();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < offsets.size(); ++c) {
    const double v = u[static_cast<std::size_t>(cell_lower + offsets[c])];
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] += (c >> k) & 1U ? v : -v;
  }
  const double scale = 1.0 / (static_cast<double>(offsets.size() / 2) * grid.spacing());
  for (double& g : out) g *= scale;
}

double cell_average(const ExteriorGrid& grid, std::span<const double> u, std::int64_t cell_lower) {
  double s = 0.0;
  for (std::int64_t off : grid.corner_offsets()) s += u[static_cast<std::size_t>(cell_lower + off)];
  return s / static_cast<double>(grid.corner_offsets().size());
}

CellQuadrature::CellQuadrature(int dimension, double spacing) : n_(dimension), points_(1 << dimension) {
  if (dimension < 1 || dimension > kMaxDimension)
    throw Error(ErrorCode::InvalidGeometry, "cell quadrature supports dimensions 1.." + std::to_string(kMaxDimension));
  const double lo = 0.5 - 0.5 / std::sqrt(3.0);
  const double hi = 1.0 - lo;
  const int corners = points_;
  table_.assign(static_cast<std::size_t>(points_ * n_ * corners), 0.0);
  for (int q = 0; q < points_; ++q)
    for (int k = 0; k < n_; ++k)
      for (int c = 0; c < corners; ++c) {
        double w = ((c >> k) & 1) ? 1.0 / spacing : -1.0 / spacing;
        for (int j = 0; j < n_; ++j) {
          if (j == k) continue;
          const double xi = ((q >> j) & 1) ? hi : lo;
          w *= ((c >> j) & 1) ? xi : 1.0 - xi;
        }
        table_[static_cast<std::size_t>((q * n_ + k) * corners + c)] = w;
      }
}

void CellQuadrature::gradients(const double* corner_values, double* grads) const {
  const int rows = points_ * n_;
  const int corners = points_;
  for (int r = 0; r < rows; ++r) {
    const double* w = table_.data() + static_cast<std::size_t>(r * corners);
    double s = 0.0;
    for (int c = 0; c < corners; ++c) s += w[c] * corner_values[c];
    grads[r] = s;
  }
}

void CellQuadrature::gradients(std::span<const std::int64_t> offsets, const double* u, std::int64_t lower,
                               double* grads) const {
  std::array<double, kMaxPoints> corner{};
  for (std::size_t c = 0; c < offsets.size(); ++c) corner[c] = u[lower + offsets[c]];
  gradients(corner.data(), grads);
}

void CellQuadrature::scatter(const double* flux, double* corner_out) const {
  const int rows = points_ * n_;
  const int corners = points_;
  for (int r = 0; r < rows; ++r) {
    if (flux[r] == 0.0) continue;
    const double* w = table_.data() + static_cast<std::size_t>(r * corners);
    for (int c = 0; c < corners; ++c) corner_out[c] += w[c] * flux[r];
  }
}

double CellQuadrature::max_slope(std::span<const std::int64_t> offsets, const double* u, std::int64_t lower) const {
  std::array<double, kMaxPoints * kMaxDimension> g{};
  gradients(offsets, u, lower, g.data());
  double worst = 0.0;
  for (int q = 0; q < points_; ++q) {
    double sq = 0.0;
    for (int k = 0; k < n_; ++k) sq += g[static_cast<std::size_t>(q * n_ + k)] * g[static_cast<std::size_t>(q * n_ + k)];
    worst = std::max(worst, sq);
  }
  return std::sqrt(worst);
}

void NodeConstraints::apply(std::span<double> u) const {
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    double v = constants[r];
    for (std::size_t j = row_start[r]; j < row_start[r + 1]; ++j) v += weights[j] * u[static_cast<std::size_t>(columns[j])];
    u[static_cast<std::size_t>(nodes[r])] = v;
  }
}

void NodeConstraints::fold(std::span<double> grad) const {
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const double g = grad[static_cast<std::size_t>(nodes[r])];
    for (std::size_t j = row_start[r]; j < row_start[r + 1]; ++j)
      grad[static_cast<std::size_t>(columns[j])] += weights[j] * g;
  }
}

}  // namespace pmc
