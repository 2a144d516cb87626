#include "pmc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "pmc/error.hpp"

namespace pmc {

void SolverParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::ConfigInvalid, "solver." + what); };
  if (max_iterations < 0) bad("max_iterations must be non-negative");
  if (!(tol_energy >= 0.0)) bad("tol_energy must be non-negative");
  if (!(tol_residual > 0.0)) bad("tol_residual must be positive");
  if (!(delta_floor > 0.0 && delta_floor <= delta_start && delta_start < 1.0))
    bad("need 0 < delta_floor <= delta_start < 1");
  if (!(backtrack > 0.0 && backtrack < 1.0)) bad("backtrack must lie in (0, 1)");
  if (!(initial_step > 0.0)) bad("initial_step must be positive");
  if (!(extension_eps >= 0.0 && extension_eps < 1.0)) bad("extension_eps must lie in [0, 1)");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::Stalled: return "stalled";
  }
  return "unknown";
}

double jacobi_scale(const ExteriorGrid& grid) {
  const int n = grid.dimension();
  return std::ldexp(1.0, n) * n * std::pow(grid.spacing(), n - 2) / std::pow(4.0, n - 1);
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-14;

double dot_free(const ExteriorGrid& grid, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (grid.tags()[i] == NodeTag::Interior) s += a[i] * b[i];
  return s;
}

double margin_of(const EnergyModel& model, std::span<const double> u) {
  return 1.0 - model.gradient_stats(u).max_norm;
}

}  // namespace

StepResult backtracking_step(const EnergyModel& model, std::span<const double> u, double energy_u,
                             std::span<const double> grad_u, std::span<const double> direction, double alpha,
                             double delta, const SolverParams& params, std::span<double> out) {
  const ExteriorGrid& grid = model.grid();
  const double slope = dot_free(grid, grad_u, direction);
  StepResult r;
  if (!(slope < 0.0)) {
    std::copy(u.begin(), u.end(), out.begin());
    r.energy = energy_u;
    return r;
  }
  bool saw_feasible = false;
  for (double a = alpha; a >= kMinStep * params.initial_step; a *= params.backtrack) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + a * direction[i];
    if (model.constraints()) model.constraints()->apply(out);
    double max_slope = 0.0;
    const auto change = model.change_if_within(u, out, 1.0 - delta, &max_slope);
    if (!change) continue;
    saw_feasible = true;
    if (*change <= kArmijo * a * slope) {
      r.accepted = true;
      r.step = a;
      r.energy = energy_u + *change;
      r.max_slope = max_slope;
      return r;
    }
  }
  std::copy(u.begin(), u.end(), out.begin());
  r.energy = energy_u;
  if (!saw_feasible)
    throw Error(ErrorCode::StalledInfeasible, "no feasible step above " + std::to_string(kMinStep * params.initial_step) +
                                                  " with margin " + std::to_string(delta));
  return r;
}

FeasibilityAudit feasibility_audit(const ScalarField& u, double delta) {
  const EnergyModel model(u.grid_ptr(), CurvatureSpec::zero(u.grid().dimension()));
  const GradientStats s = model.gradient_stats(u.values(), 1.0 - 10.0 * delta);
  return {1.0 - s.max_norm, s.worst_cell, s.near_light};
}

namespace {

Extension feasible_start(const BoundaryDatum& phi, const std::shared_ptr<const ExteriorGrid>& grid,
                         const SolverParams& params, const EnergyModel& model, const NodeConstraints& closure) {
  double eps = params.extension_eps;
  if (eps == 0.0) {
    const auto samples = sample_boundary(phi, *grid, 64);
    double lip = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (std::size_t j = i + 1; j < samples.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < samples[i].point.size(); ++k) {
          const double d = samples[i].point[k] - samples[j].point[k];
          d2 += d * d;
        }
        if (d2 > 0.0) lip = std::max(lip, std::fabs(samples[i].value - samples[j].value) / std::sqrt(d2));
      }
    if (lip >= 1.0)
      throw Error(ErrorCode::NotLipschitzEnough,
                  "boundary data has sampled Lipschitz constant " + std::to_string(lip) + " >= 1");
    eps = 0.75 * (1.0 - lip);
  }
  Extension ext = [&] {
    try {
      return extend_to_feasible(phi, grid, eps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CutoffTooTight) throw;
    }
    ExtensionOptions capped;
    capped.cone_taper = true;
    return extend_to_feasible(phi, grid, eps, capped);
  }();
  closure.apply(ext.field.values());
  double margin = margin_of(model, ext.field.values());
  if (margin >= params.delta_start) return ext;

  // Multilinear interpolation of cone kinks can push tight data past the light cone; a few damped
  // neighbour-averaging sweeps remove the kinks before the field drifts towards the harmonic one.
  const ExteriorGrid& g = *grid;
  const int n = g.dimension();
  std::vector<std::int64_t> stride(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) stride[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::pow(g.nodes_per_axis(), a));
  ScalarField u = ext.field;
  ScalarField next = u;
  ScalarField best = u;
  double best_margin = margin;
  for (int sweep = 0; sweep < 40; ++sweep) {
    for (std::int64_t i = 0; i < g.node_count(); ++i) {
      if (g.tag(i) != NodeTag::Interior) continue;
      double sum = 0.0;
      for (std::int64_t st : stride) sum += u[i + st] + u[i - st];
      next[i] = 0.5 * u[i] + 0.25 * sum / n;
    }
    closure.apply(next.values());
    std::swap(u, next);
    margin = margin_of(model, u.values());
    if (margin > best_margin) {
      best_margin = margin;
      best = u;
    } else if (margin < best_margin - 0.05) {
      break;
    }
  }
  if (!(best_margin >= params.delta_start))
    throw Error(ErrorCode::NoFeasibleStart, "extension has margin " + std::to_string(best_margin) + " < " +
                                                std::to_string(params.delta_start));
  ext.field = std::move(best);
  ext.gradient_bound = 1.0 - best_margin;
  return ext;
}

}  // namespace

MinimizeResult minimize(const CurvatureSpec& spec, const BoundaryDatum& phi, std::shared_ptr<const ExteriorGrid> grid,
                        const SolverParams& params, std::optional<ScalarField> start, const TraceSink& trace) {
  params.validate();
  EnergyModel model(grid, spec);
  SolveReport report;
  report.initial_step = params.initial_step;
  report.backtrack = params.backtrack;
  report.closure = params.closure;

  auto constraints = std::make_shared<const NodeConstraints>(boundary_constraints(phi, *grid, params.closure));
  ScalarField u(grid);
  if (start) {
    if (start->grid_ptr() != grid) throw Error(ErrorCode::GeometryMismatch, "start field lives on another grid");
    u = std::move(*start);
    for (std::int64_t i = 0; i < grid->node_count(); ++i)
      if (grid->tag(i) == NodeTag::Farfield || grid->tag(i) == NodeTag::Obstacle) u[i] = 0.0;
  } else {
    try {
      Extension ext = feasible_start(phi, grid, params, model, *constraints);
      report.extension_eps = 1.0 - (ext.gradient_bound - ext.phi_sup / ext.r_cut);
      report.extension_r_cut = ext.r_cut;
      u = std::move(ext.field);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CutoffTooTight) throw Error(ErrorCode::NoFeasibleStart, e.what());
      throw;
    }
  }
  if (params.extension_eps > 0.0) report.extension_eps = params.extension_eps;

  constraints->apply(u.values());
  model.set_constraints(constraints);

  double margin = margin_of(model, u.values());
  if (!(margin > 0.0))
    throw Error(ErrorCode::NoFeasibleStart, "start field has max cell gradient " + std::to_string(1.0 - margin));

  const std::size_t size = static_cast<std::size_t>(grid->node_count());
  const double scale = 1.0 / jacobi_scale(*grid);
  std::unique_ptr<PoissonPreconditioner> poisson;
  if (params.preconditioner == Preconditioner::Poisson) poisson = std::make_unique<PoissonPreconditioner>(*grid);
  report.preconditioner = params.preconditioner;
  std::span<double> x = u.values();
  std::vector<double> prev(x.begin(), x.end());
  std::vector<double> y(size), g(size), dir(size), trial(size);

  double energy = model.total(x);
  double residual = std::numeric_limits<double>::infinity();
  report.energy_trace.push_back(energy);

  double alpha = params.initial_step;
  double t_prev = 1.0;
  double delta = params.delta_start;
  bool plain = true;
  int k = 0;
  report.termination = Termination::MaxIterations;

  while (true) {
    delta = std::max(params.delta_floor, std::min({params.delta_start, 0.5 * margin, residual}));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
    double mu = params.accelerate && !plain ? (t_prev - 1.0) / t_next : 0.0;
    double energy_y = energy;
    if (mu > 0.0) {
      for (std::size_t i = 0; i < size; ++i) y[i] = x[i] + mu * (x[i] - prev[i]);
      double slope = 1.0;
      try {
        energy_y = model.value_and_gradient(y, g, &slope);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateCell) throw;
      }
      if (slope > 1.0 - delta) mu = 0.0;
    }
    if (mu == 0.0) {
      std::copy(x.begin(), x.end(), y.begin());
      energy_y = model.value_and_gradient(y, g);
    }
    const double res_y = residual_norm(*grid, g);
    if (mu == 0.0) {
      residual = res_y;
      if (trace && k == 0) trace({0, energy, residual, margin});
      const std::size_t m = report.energy_trace.size();
      const double change = m >= 2 ? std::fabs(report.energy_trace[m - 1] - report.energy_trace[m - 2]) : 0.0;
      if (residual <= params.tol_residual && change <= params.tol_energy * std::max(1.0, std::fabs(energy))) {
        report.termination = Termination::Converged;
        break;
      }
    } else if (res_y <= params.tol_residual) {
      // Confirm at x itself before declaring convergence.
      plain = true;
      continue;
    }
    if (k >= params.max_iterations) break;

    if (poisson) {
      poisson->apply(g, dir);
      for (double& d : dir) d = -d;
    } else {
      for (std::size_t i = 0; i < size; ++i) dir[i] = -scale * g[i];
    }
    const StepResult step = backtracking_step(model, y, energy_y, g, dir, alpha, delta, params, trial);
    if (mu > 0.0 && (!step.accepted || step.energy > energy)) {
      ++report.restarts;
      t_prev = 1.0;
      plain = true;
      continue;
    }
    if (!step.accepted) {
      report.termination = residual <= params.tol_residual ? Termination::Converged : Termination::Stalled;
      break;
    }
    ++k;
    margin = 1.0 - step.max_slope;
    alpha = step.step == alpha ? std::min(params.initial_step, alpha / params.backtrack) : step.step;
    std::copy(x.begin(), x.end(), prev.begin());
    std::copy(trial.begin(), trial.end(), x.begin());
    energy = step.energy;
    report.energy_trace.push_back(energy);
    t_prev = params.accelerate ? t_next : 1.0;
    plain = false;
    if (mu > 0.0) residual = res_y;
    if (trace) trace({k, energy, residual, margin});
  }

  report.iterations = k;
  report.energy = model.breakdown(x);
  report.residual = residual;
  report.margin = margin_of(model, x);
  report.delta_effective = delta;
  return {std::move(u), std::move(report)};
}

ScalarField prolongate(const ScalarField& coarse, std::shared_ptr<const ExteriorGrid> fine) {
  const ExteriorGrid& cg = coarse.grid();
  if (cg.dimension() != fine->dimension() || cg.far_radius() != fine->far_radius())
    throw Error(ErrorCode::GeometryMismatch, "prolongation needs grids over the same box");
  const auto dn = static_cast<std::size_t>(fine->dimension());
  const double h = cg.spacing();
  const double origin = -cg.far_radius();
  const auto offsets = cg.corner_offsets();
  const auto per_axis = cg.nodes_per_axis();
  ScalarField out(fine);
  Point x(dn), frac(dn);
  std::vector<std::int64_t> cell(dn);
  for (std::int64_t i = 0; i < fine->node_count(); ++i) {
    const NodeTag t = fine->tag(i);
    if (t != NodeTag::Interior && t != NodeTag::Boundary) continue;
    fine->node_coordinates(i, x);
    for (std::size_t k = 0; k < dn; ++k) {
      const double s = (x[k] - origin) / h;
      cell[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(s)), 0, per_axis - 2);
      frac[k] = s - static_cast<double>(cell[k]);
    }
    const std::int64_t lower = cg.node_index(cell);
    double value = 0.0;
    double weight = 0.0;
    for (std::size_t c = 0; c < offsets.size(); ++c) {
      const std::int64_t node = lower + offsets[c];
      if (cg.tag(node) == NodeTag::Obstacle) continue;
      double w = 1.0;
      for (std::size_t k = 0; k < dn; ++k) w *= ((c >> k) & 1U) ? frac[k] : 1.0 - frac[k];
      value += w * coarse[node];
      weight += w;
    }
    out[i] = weight > 0.0 ? value / weight : 0.0;
  }
  return out;
}

std::vector<LevelResult> minimize_nested(const CurvatureSpec& spec, const BoundaryDatum& phi,
                                         const ObstacleSet& obstacles, double r_far,
                                         const std::vector<double>& spacings, const SolverParams& params,
                                         const TraceSink& trace) {
  std::vector<LevelResult> levels;
  for (std::size_t level = 0; level < spacings.size(); ++level) {
    const double h = spacings[level];
    auto grid = std::make_shared<const ExteriorGrid>(build_grid(obstacles, r_far, h));
    std::optional<ScalarField> start;
    if (!levels.empty()) {
      ScalarField guess = prolongate(levels.back().result.solution, grid);
      NodeConstraints closure = boundary_constraints(phi, *grid, params.closure);
      closure.apply(guess.values());
      const EnergyModel model(grid, spec);
      if (margin_of(model, guess.values()) >= params.delta_start) start = std::move(guess);
    }
    try {
      levels.push_back({grid, minimize(spec, phi, grid, params, std::move(start), trace)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoFeasibleStart || level + 1 == spacings.size()) throw;
    }
  }
  return levels;
}

}  // namespace pmc
