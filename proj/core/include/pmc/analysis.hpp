#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pmc/curvature.hpp"
#include "pmc/field.hpp"

namespace pmc {

enum class ChainKind { TouchesBoundary, ReachesFarField, Interior };
std::string_view to_string(ChainKind k);

/// A connected run of near-null cells with aligned gradients.
struct LightChain {
  std::vector<std::int64_t> cells;  ///< lower-corner node indices
  Point direction;                  ///< mean unit gradient direction
  Point start;                      ///< extreme cell centres along `direction`
  Point end;
  double length = 0.0;
  double max_gradient = 0.0;
  bool touches_boundary = false;
  bool reaches_far_field = false;
  ChainKind kind = ChainKind::Interior;
};

inline constexpr double kAlignmentDegrees = 5.0;

/// Chains of cells with |grad u| > 1 - threshold whose neighbouring gradient
/// directions differ by at most kAlignmentDegrees. Requires threshold in (0, 0.1).
std::vector<LightChain> light_segment_scan(const ScalarField& u, double threshold = 1e-3);

struct WeakResidual {
  double max_ratio = 0.0;  ///< max |first_variation(u, v)| / ||v||_{L^2}
  int trials = 0;
};

/// Tests the weak form against random tensor-product bumps vanishing at
/// pinned nodes. With `constraints`, dependent boundary nodes follow the bump
/// as they do during a solve.
WeakResidual weak_residual_check(const ScalarField& u, const CurvatureSpec& spec, int trials,
                                 std::uint64_t seed = 0x5eed, const NodeConstraints* constraints = nullptr);

struct ShellSample {
  double radius = 0.0;
  double sup = 0.0;
  std::int64_t nodes = 0;
};

struct DecayProfile {
  std::vector<ShellSample> shells;
  bool non_increasing = true;
  bool final_below = true;  ///< last shell sup <= fraction * phi_sup
  double fraction = 0.1;
  bool decays() const noexcept { return non_increasing && final_below; }
};

/// Suprema of |u| over free nodes with ||x| - r| <= h / 2.
DecayProfile decay_profile(const ScalarField& u, const std::vector<double>& radii, double phi_sup,
                           double fraction = 0.1);

/// 1 - max |grad u| over active cells whose centre lies within R_far - shell.
double interior_margin(const ScalarField& u, double shell);

}  // namespace pmc
