#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmc/boundary_data.hpp"
#include "pmc/functional.hpp"
#include "pmc/preconditioner.hpp"

namespace pmc {

struct SolverParams {
  int max_iterations = 20000;
  double tol_energy = 1e-10;   ///< on |E_k - E_{k-1}| / max(1, |E_k|)
  double tol_residual = 1e-6;  ///< on the discrete L^2 residual density
  double delta_start = 1e-2;   ///< initial feasibility margin floor
  double delta_floor = 1e-6;   ///< smallest admissible margin floor
  double backtrack = 0.5;      ///< step contraction factor beta
  double initial_step = 1.0;   ///< alpha_0, in Jacobi-scaled units
  bool accelerate = false;     ///< Nesterov momentum with restart on increase
  double extension_eps = 0.0;  ///< eps for the initial extension; 0 picks 3/4 (1 - L_phi)
  BoundaryClosure closure = BoundaryClosure::Extrapolated;
  Preconditioner preconditioner = Preconditioner::Poisson;
  void validate() const;
};

enum class Termination { Converged, MaxIterations, Stalled };
std::string_view to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double residual = 0.0;
  double margin = 0.0;
};

struct SolveReport {
  int iterations = 0;
  EnergyBreakdown energy;
  double residual = 0.0;
  double margin = 0.0;  ///< 1 - max cell |grad u|
  double delta_effective = 0.0;
  std::vector<double> energy_trace;
  Termination termination = Termination::MaxIterations;
  double initial_step = 0.0;
  double backtrack = 0.0;
  double extension_eps = 0.0;
  double extension_r_cut = 0.0;
  int restarts = 0;
  BoundaryClosure closure = BoundaryClosure::Extrapolated;
  Preconditioner preconditioner = Preconditioner::Poisson;
};

using TraceSink = std::function<void(const IterationRecord&)>;

/// Scaling of raw nodal gradients into step units: the diagonal of the
/// discrete Dirichlet form at a free interior node.
double jacobi_scale(const ExteriorGrid& grid);

struct StepResult {
  bool accepted = false;
  double step = 0.0;   ///< accepted alpha' (0 when the direction is not a descent direction)
  double energy = 0.0;
  double max_slope = 0.0;  ///< max cell |grad u'| at the accepted point
};

/// Armijo backtracking along `direction` from u, restricted to iterates with
/// max cell |grad u'| <= 1 - delta. Writes the accepted point into `out`.
/// Throws StalledInfeasible when the step underflows.
StepResult backtracking_step(const EnergyModel& model, std::span<const double> u, double energy_u,
                             std::span<const double> grad_u, std::span<const double> direction, double alpha,
                             double delta, const SolverParams& params, std::span<double> out);

struct FeasibilityAudit {
  double margin = 1.0;
  std::int64_t worst_cell = -1;
  std::int64_t near_light = 0;  ///< cells with |grad u| > 1 - 10 delta
};

FeasibilityAudit feasibility_audit(const ScalarField& u, double delta);

struct MinimizeResult {
  ScalarField solution;
  SolveReport report;
};

/// Minimizes the discrete energy over fields whose boundary layer follows
/// params.closure and whose far-field nodes are zero. The start is `start`
/// when given, otherwise the extension of phi. Throws NoFeasibleStart or
/// StalledInfeasible.
MinimizeResult minimize(const CurvatureSpec& spec, const BoundaryDatum& phi, std::shared_ptr<const ExteriorGrid> grid,
                        const SolverParams& params, std::optional<ScalarField> start = {},
                        const TraceSink& trace = {});

/// Multilinear interpolation of a coarse solution onto a finer grid over the
/// same obstacles. Coarse obstacle nodes are left out of the weights.
ScalarField prolongate(const ScalarField& coarse, std::shared_ptr<const ExteriorGrid> fine);

struct LevelResult {
  std::shared_ptr<const ExteriorGrid> grid;
  MinimizeResult result;
};

/// Solves on each spacing in turn (coarse to fine), starting every level from
/// the prolongated previous solution when that start is feasible. A coarse level
/// with no feasible start (the grid cannot resolve a narrow gap) is left out.
std::vector<LevelResult> minimize_nested(const CurvatureSpec& spec, const BoundaryDatum& phi,
                                         const ObstacleSet& obstacles, double r_far,
                                         const std::vector<double>& spacings, const SolverParams& params,
                                         const TraceSink& trace = {});

}  // namespace pmc
