#pragma once

#include <limits>
#include <vector>

#include "pmc/field.hpp"

namespace pmc {

/// Radial maximal hypersurface outside the sphere |x| = r0:
/// u(r) = integral from r to R of a / sqrt(s^{2(n-1)} + a^2) ds, with R = infinity
/// unless an outer Dirichlet radius is given.
struct RadialProfile {
  int dimension = 3;
  double flux = 0.0;
  double inner_radius = 1.0;
  double outer_radius = std::numeric_limits<double>::infinity();
  std::vector<double> radii;   ///< log-spaced abscissae, r0 .. r_max
  std::vector<double> values;  ///< u at radii

  /// u'(r) = -a / sqrt(r^{2(n-1)} + a^2).
  double slope(double r) const;
  /// Cubic Hermite interpolation between tabulated radii; exact quadrature
  /// beyond the table.
  double value(double r) const;
  /// 1 - max |u'| over r >= r0.
  double margin() const;
};

RadialProfile radial_profile(int n, double a, double r0, double r_max,
                             double outer_radius = std::numeric_limits<double>::infinity());

/// Flux a with u_a(r0) = c, by bisection. Throws Unattainable outside the range of a -> u_a(r0).
double match_boundary_value(int n, double r0, double c,
                            double outer_radius = std::numeric_limits<double>::infinity());

/// u(|x|) at every free or boundary-layer node outside the sphere, the boundary
/// value c = u(r0) at layer nodes inside it, zero elsewhere. Throws
/// GeometryMismatch unless the grid has a single ball of radius r0 centred at
/// the origin.
ScalarField sample_on_grid(const RadialProfile& profile, std::shared_ptr<const ExteriorGrid> grid);

}  // namespace pmc
