#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <cstdint>
#include <span>
#include <vector>

#include "pmc/curvature.hpp"
#include "pmc/field.hpp"

namespace pmc {

/// Parts of the discrete energy together with the norms of the coercivity chain.
struct EnergyBreakdown {
  double area = 0.0;       ///< sum over cells of (1 - sqrt(1 - |grad u|^2)) h^n
  double potential = 0.0;  ///< sum over cells of G(x_c, u_c) h^n
  double total = 0.0;      ///< area + potential
  double gradient_l2 = 0.0;     ///< discrete ||grad u||_2
  double conjugate_norm = 0.0;  ///< discrete ||u||_{s'}
};

struct GradientStats {
  double max_norm = 0.0;         ///< max over active cells of |grad u|
  std::int64_t worst_cell = -1;  ///< lower corner of the cell attaining it
  std::int64_t near_light = 0;   ///< cells with |grad u| above the requested threshold
};

/// Discrete energy on one grid: nodal multilinear elements, the area term by
/// the tensor two-point Gauss rule, the potential at cell centres. Gradients
/// are linear in the nodal values, so the discrete area term inherits
/// convexity from its integrand. Cells cut by an obstacle weight each Gauss
/// point by the exterior fraction of its octant. A cell's |grad u| is the
/// largest over its Gauss points of positive weight.
class EnergyModel {
public:
  EnergyModel(std::shared_ptr<const ExteriorGrid> grid, CurvatureSpec spec);

  const ExteriorGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const ExteriorGrid>& grid_ptr() const noexcept { return grid_; }
  const CurvatureSpec& spec() const noexcept { return spec_; }

  /// Dependent boundary nodes; value_and_gradient folds their derivatives
  /// into the free nodes they depend on.
  void set_constraints(std::shared_ptr<const NodeConstraints> constraints) { constraints_ = std::move(constraints); }
  const NodeConstraints* constraints() const noexcept { return constraints_.get(); }

  GradientStats gradient_stats(std::span<const double> u, double near_threshold = 1.0) const;

  /// |grad u| of every active cell, in the order of grid().cells().
  std::vector<double> cell_slopes(std::span<const double> u) const;

  /// Throws InfeasibleField if some cell has |grad u| > 1 + 1e-12.
  double area(std::span<const double> u) const;
  double potential(std::span<const double> u) const;
  double total(std::span<const double> u) const { return area(u) + potential(u); }
  /// Total energy, or nothing when some cell has |grad u| > max_gradient.
  std::optional<double> total_if_within(std::span<const double> u, double max_gradient,
                                        double* max_slope = nullptr) const;
  /// E(v) - E(u) summed cell by cell from the increments, so that changes far below the
  /// rounding level of the total stay resolved. Nothing when some cell of v exceeds max_gradient.
  std::optional<double> change_if_within(std::span<const double> u, std::span<const double> v, double max_gradient,
                                         double* max_slope = nullptr) const;
  EnergyBreakdown breakdown(std::span<const double> u) const;

  /// Energy and its derivative with respect to every free nodal value
  /// (zero at pinned nodes). Throws DegenerateCell if |grad u| >= 1 - 1e-14.
  double value_and_gradient(std::span<const double> u, std::span<double> grad, double* max_slope = nullptr) const;

  /// Directional derivative of the energy at u along v.
  double first_variation(std::span<const double> u, std::span<const double> v) const;

  /// Area of v plus the potential linearised along u_ref: sum n H(x_c, u_ref,c) v_c h^n.
  double frozen(std::span<const double> v, std::span<const double> u_ref) const;

  double gradient_l2(std::span<const double> u) const;
  /// Discrete L^{s'} norm of the cell averages (max for s = 1).
  double conjugate_norm(std::span<const double> u) const;
  /// Discrete L^s norm of the envelope h over the active cells.
  double envelope_norm() const noexcept { return envelope_norm_; }

  /// G(x_c, t) for active cell number `cell`.
  double cell_potential(std::size_t cell, double t) const;
  /// n H(x_c, t) for active cell number `cell`.
  double cell_source(std::size_t cell, double t) const;
  /// Exterior volume fraction of active cell number `cell`.
  double cell_fraction(std::size_t cell) const noexcept { return exterior_fraction(cell); }
  std::size_t cut_cell_count() const noexcept { return cut_fraction_.size(); }

private:
  std::shared_ptr<const ExteriorGrid> grid_;
  CurvatureSpec spec_;
  std::vector<double> x_factor_;  // n f(x_c) for the XOnly and Separable forms
  std::vector<std::int32_t> cut_slot_;   // per cell: -1 when uncut
  std::vector<double> cut_weights_;      // 2^n exterior fractions per cut cell
  std::vector<double> cut_fraction_;     // mean of the cell's weights

  void classify_cut_cells();
  const double* cut_weights(std::size_t cell) const noexcept {
    const std::int32_t s = cut_slot_[cell];
    return s < 0 ? nullptr : cut_weights_.data() + (static_cast<std::size_t>(s) << grid_->dimension());
  }
  double exterior_fraction(std::size_t cell) const noexcept {
    const std::int32_t s = cut_slot_[cell];
    return s < 0 ? 1.0 : cut_fraction_[static_cast<std::size_t>(s)];
  }
  double envelope_norm_ = 0.0;
  std::shared_ptr<const NodeConstraints> constraints_;
};

// Field-level entry points.

double area_energy(const ScalarField& u);
/// n * integral_0^t H(x, s) ds; closed form for x-only H, adaptive quadrature otherwise.
double potential_G(std::span<const double> x, double t, const CurvatureSpec& spec);

struct PotentialEnergy {
  double value = 0.0;
  double bound = 0.0;         ///< ||h||_s ||u||_{s'}
  bool within_bound = true;   ///< |value| <= bound + 1e-12 (1 + bound)
};
PotentialEnergy potential_energy(const ScalarField& u, const CurvatureSpec& spec);
EnergyBreakdown total_energy(const ScalarField& u, const CurvatureSpec& spec);
double first_variation(const ScalarField& u, const ScalarField& v, const CurvatureSpec& spec);
/// g_i = first_variation(u, e_i) at free nodes, zero at pinned nodes.
ScalarField residual_gradient(const ScalarField& u, const CurvatureSpec& spec);
double frozen_energy(const ScalarField& v, const ScalarField& u_ref, const CurvatureSpec& spec);

struct CoercivityCheck {
  double lhs = 0.0;  ///< I(u)
  double rhs = 0.0;  ///< 0.5 ||grad u||_2^2 - ||h||_s ||u||_{s'}
  bool holds = true;
};
CoercivityCheck coercivity_bound(const ScalarField& u, const CurvatureSpec& spec);

/// Discrete L^2 norm of the nodal residual density g_i / h^n over free nodes.
double residual_norm(const ExteriorGrid& grid, std::span<const double> grad);

}  // namespace pmc
