#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "pmc/functional.hpp"
#include "pmc/geometry.hpp"

namespace pmc::fixtures {

inline std::shared_ptr<const ExteriorGrid> ball_grid(int n, double r_far, double h, double radius = 1.0) {
  return std::make_shared<const ExteriorGrid>(
      build_grid(ObstacleSet(n, {Ball{Point(static_cast<std::size_t>(n), 0.0), radius}}), r_far, h));
}

/// f at every node, far-field nodes included.
inline ScalarField field_from(const std::shared_ptr<const ExteriorGrid>& grid,
                              const std::function<double(std::span<const double>)>& f) {
  std::vector<double> values(static_cast<std::size_t>(grid->node_count()));
  Point x(static_cast<std::size_t>(grid->dimension()));
  for (std::int64_t i = 0; i < grid->node_count(); ++i) {
    grid->node_coordinates(i, x);
    values[static_cast<std::size_t>(i)] = f(x);
  }
  return ScalarField(grid, std::move(values));
}

/// A smooth random field rescaled so that its steepest cell has slope `slope`.
inline ScalarField random_field(const std::shared_ptr<const ExteriorGrid>& grid, std::mt19937_64& rng,
                                double slope = 0.8, int modes = 4) {
  const int n = grid->dimension();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  std::vector<std::vector<double>> k(static_cast<std::size_t>(modes));
  std::vector<double> amp, ph;
  for (auto& kv : k) {
    for (int d = 0; d < n; ++d) kv.push_back(normal(rng));
    amp.push_back(normal(rng));
    ph.push_back(phase(rng));
  }
  const double r_far = grid->far_radius();
  ScalarField u = ScalarField::from_function(grid, [&](std::span<const double> x) {
    double s = 0.0;
    double r2 = 0.0;
    for (std::size_t m = 0; m < k.size(); ++m) {
      double arg = ph[m];
      for (std::size_t d = 0; d < x.size(); ++d) arg += k[m][d] * x[d];
      s += amp[m] * std::sin(arg);
    }
    for (double c : x) r2 += c * c;
    const double fade = std::max(0.0, 1.0 - r2 / (r_far * r_far));
    return s * fade;
  });
  const EnergyModel model(grid, CurvatureSpec::zero(n));
  const double m = model.gradient_stats(u.values()).max_norm;
  if (m > 0.0) u *= slope / m;
  return u;
}

}  // namespace pmc::fixtures
