#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pmc/expression.hpp"
#include "pmc/field.hpp"

namespace pmc {

/// A tabulated boundary trace: values at scattered surface points, looked up
/// by nearest sample.
struct TabulatedTrace {
  std::vector<Point> points;
  std::vector<double> values;
};

/// Rule giving the Dirichlet data on one obstacle surface.
using TraceRule = std::variant<double, Expression, TabulatedTrace>;

/// The Dirichlet trace phi on the union of obstacle surfaces, one rule per obstacle.
class BoundaryDatum {
public:
  explicit BoundaryDatum(std::vector<TraceRule> rules);
  static BoundaryDatum constant(std::size_t obstacles, double value);

  double operator()(int obstacle, std::span<const double> x) const;
  std::size_t size() const noexcept { return rules_.size(); }
  const std::vector<TraceRule>& rules() const noexcept { return rules_; }

  /// (-phi) with every rule negated.
  BoundaryDatum negated() const;

private:
  std::vector<TraceRule> rules_;
  bool negate_ = false;
};

struct BoundarySample {
  Point point;
  int obstacle;
  double value;
};

/// Surface sample set used by the admissibility checks: projections of every
/// boundary-layer node, the 2n axis extremes of each obstacle, and
/// `per_obstacle` low-discrepancy points on each surface.
std::vector<BoundarySample> sample_boundary(const BoundaryDatum& phi, const ExteriorGrid& grid, int per_obstacle);

enum class Verdict { Pass, Fail, Marginal };
std::string_view to_string(Verdict v);

struct DisplacingVerdict {
  Verdict verdict = Verdict::Pass;
  double worst_ratio = 0.0;
  Point worst_x;
  Point worst_y;
  std::int64_t pairs_tested = 0;
  std::int64_t samples = 0;
  std::string note;
};

/// Worst |phi(x) - phi(y)| / |x - y| over sampled boundary pairs joined by a
/// segment through the exterior. Pass if <= 1 - margin, fail if >= 1,
/// marginal otherwise; a single (convex) obstacle passes vacuously.
DisplacingVerdict check_spacelike_displacing(const BoundaryDatum& phi, const ExteriorGrid& grid, double margin,
                                             int samples);

/// Max over sampled boundary pairs of |phi(x) - phi(y)| / |x - y| (a lower
/// estimate of the Lipschitz constant of phi).
double boundary_lipschitz_constant(const BoundaryDatum& phi, const ExteriorGrid& grid, int samples);

/// Piecewise-linear radial cutoff: 1 on |x| <= r_cut, 0 on |x| >= 2 r_cut,
/// slope 1/r_cut in between.
double cutoff_profile(std::span<const double> x, double r_cut);

struct ExtensionOptions {
  std::optional<double> r_cut;  ///< default: smallest admissible radius (see default_cutoff_radius)
  int samples = 64;             ///< extra surface samples per obstacle for the Lipschitz precondition
  bool certify = true;          ///< require ||phi||_inf < eps r_cut
  /// Replace the radial cutoff by the cap |w(x)| <= (1 - eps)(R_far - |x|), which keeps the
  /// slope bound at 1 - eps. r_cut is then ignored.
  bool cone_taper = false;
};

struct Extension {
  ScalarField field;
  double r_cut = 0.0;
  double lipschitz = 0.0;       ///< sampled Lipschitz constant of phi
  double phi_sup = 0.0;
  double gradient_bound = 0.0;  ///< ||phi||_inf / r_cut + 1 - eps, or 1 - eps with the cone taper
};

/// Smallest radius >= 2 * (obstacle extent) with ||phi||_inf / r < eps / 2.
double default_cutoff_radius(double phi_sup, double extent, double eps);

/// Midpoint of the upper (McShane) and lower (Whitney) cone envelopes of slope
/// 1 - eps, with apexes at the boundary-layer nodes, clamped to the range of
/// phi and multiplied by the radial cutoff. Boundary nodes carry phi at their
/// surface projection exactly. Throws NotLipschitzEnough or CutoffTooTight.
Extension extend_to_feasible(const BoundaryDatum& phi, std::shared_ptr<const ExteriorGrid> grid, double eps,
                             const ExtensionOptions& options = {});

/// Writes phi at the surface projection of every boundary node.
void pin_boundary(const BoundaryDatum& phi, ScalarField& u);

/// How boundary-layer nodes are tied to phi during a solve. Pinned stores
/// phi(p) at each node. Extrapolated makes each node the linear extrapolation,
/// along the normal through its surface point p, of phi(p) and the
/// interpolated field at the image point p + sqrt(n) h normal; nodes whose
/// image cell is not entirely free fall back to pinning.
enum class BoundaryClosure { Pinned, Extrapolated };
std::string_view to_string(BoundaryClosure c);

NodeConstraints boundary_constraints(const BoundaryDatum& phi, const ExteriorGrid& grid, BoundaryClosure closure);

}  // namespace pmc
