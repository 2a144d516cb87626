#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>
#include <thread>

#include "pmc/analysis.hpp"
#include "pmc/error.hpp"
#include "pmc/io.hpp"
#include "pmc/oracle_radial.hpp"
#include "pmc/parallel.hpp"

namespace pmc::cli {

namespace {

using nlohmann::json;

struct Rejection {
  int code;
  std::string message;
};

double phi_sup_of(const BoundaryDatum& phi, const ExteriorGrid& grid, int samples) {
  double sup = 0.0;
  for (const BoundarySample& s : sample_boundary(phi, grid, samples)) sup = std::max(sup, std::fabs(s.value));
  return sup;
}

json admissibility(const RunConfig& cfg, const ExteriorGrid& grid, std::uint64_t seed, std::optional<Rejection>& reject,
                   std::ostream& log) {
  const DisplacingVerdict verdict =
      check_spacelike_displacing(cfg.phi, grid, cfg.boundary.displacing_margin, cfg.boundary.samples);
  const double lipschitz = boundary_lipschitz_constant(cfg.phi, grid, cfg.boundary.samples);
  const double phi_sup = phi_sup_of(cfg.phi, grid, cfg.boundary.samples);
  std::mt19937_64 rng(seed);
  const AssumptionAudit audit = audit_assumption(cfg.curvature, grid, 256, std::max(1.0, phi_sup), rng);
  log << "displacing: " << to_string(verdict.verdict) << " (worst ratio " << verdict.worst_ratio << ")\n";
  log << "sampled Lipschitz constant of phi: " << lipschitz << "\n";
  if (verdict.verdict == Verdict::Fail) {
    reject = Rejection{kExitRejected, "boundary data is not spacelike displacing"};
  } else if (lipschitz >= 1.0) {
    reject = Rejection{kExitRejected, "NotLipschitzEnough: sampled Lipschitz constant " + std::to_string(lipschitz)};
  }
  return {{"displacing", to_json(verdict)},
          {"lipschitz", lipschitz},
          {"phi_sup", phi_sup},
          {"curvature_assumption", to_json(audit)}};
}

void require_oracle_instance(const RunConfig& cfg) {
  const auto& obs = cfg.domain.obstacles;
  const Ball* ball = obs.size() == 1 ? std::get_if<Ball>(&obs.front()) : nullptr;
  bool ok = ball != nullptr && cfg.curvature.form() == CurvatureSpec::Form::Zero;
  if (ok)
    for (double c : ball->center) ok = ok && c == 0.0;
  if (ok) ok = std::holds_alternative<double>(cfg.phi.rules().front());
  if (!ok)
    throw Error(ErrorCode::ConfigInvalid,
                "oracle-compare needs a single ball centred at the origin, constant phi and curvature form zero");
}

json oracle_compare(const RunConfig& cfg, const std::vector<LevelResult>& levels, const std::filesystem::path& dir,
                    std::ostream& log) {
  const int n = cfg.domain.dimension;
  const double r0 = std::get<Ball>(cfg.domain.obstacles.front()).radius;
  const double c = std::get<double>(cfg.phi.rules().front());
  const double r_far = cfg.domain.far_radius;
  const double a = match_boundary_value(n, r0, c, r_far);
  const RadialProfile annulus = radial_profile(n, a, r0, r_far, r_far);
  const double a_inf = match_boundary_value(n, r0, c);
  const RadialProfile whole = radial_profile(n, a_inf, r0, r_far);
  const double scale = std::fabs(c) > 0.0 ? std::fabs(c) : 1.0;

  json rows = json::array();
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const LevelResult& lv : levels) {
    const ScalarField ref = sample_on_grid(annulus, lv.grid);
    const ScalarField ref_inf = sample_on_grid(whole, lv.grid);
    double diff = 0.0;
    double diff_inf = 0.0;
    for (std::int64_t i = 0; i < lv.grid->node_count(); ++i) {
      if (lv.grid->tag(i) != NodeTag::Interior) continue;
      diff = std::max(diff, std::fabs(lv.result.solution[i] - ref[i]));
      diff_inf = std::max(diff_inf, std::fabs(lv.result.solution[i] - ref_inf[i]));
    }
    monotone = monotone && diff < prev;
    prev = diff;
    log << "h = " << lv.grid->spacing() << ": sup |u - oracle| = " << diff << " (relative " << diff / scale << ")\n";
    rows.push_back({{"spacing", lv.grid->spacing()},
                    {"sup_diff", diff},
                    {"relative", diff / scale},
                    {"sup_diff_unbounded", diff_inf},
                    {"relative_unbounded", diff_inf / scale}});
  }

  std::vector<std::vector<double>> table;
  const int m = cfg.output.oracle_samples;
  for (int i = 0; i < m; ++i) {
    const double r = r0 + (r_far - r0) * i / (m - 1);
    table.push_back({r, annulus.value(r), annulus.slope(r), whole.value(r)});
  }
  const char d = cfg.output.delimiter;
  write_table(dir / (cfg.output.stem + "_oracle.csv"), {"r", "u", "du_dr", "u_unbounded"}, table, d);

  const LevelResult& fine = levels.back();
  const ExteriorGrid& g = *fine.grid;
  std::vector<std::vector<double>> axis;
  Point x(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < g.node_count(); ++i) {
    const NodeTag t = g.tag(i);
    if (t != NodeTag::Interior && t != NodeTag::Boundary) continue;
    g.node_coordinates(i, x);
    bool on_axis = x[0] >= r0;
    for (int k = 1; k < n; ++k) on_axis = on_axis && std::fabs(x[static_cast<std::size_t>(k)]) < 0.5 * g.spacing();
    if (on_axis) axis.push_back({x[0], fine.result.solution[i], annulus.value(x[0])});
  }
  write_table(dir / (cfg.output.stem + "_axis.csv"), {"r", "u_solver", "u_oracle"}, axis, d);

  return {{"flux", a},
          {"flux_unbounded", a_inf},
          {"boundary_value", c},
          {"outer_radius", r_far},
          {"levels", rows},
          {"monotone", monotone},
          {"relative_sup_diff", rows.back()["relative"]}};
}

json diagnostics(const RunConfig& cfg, const LevelResult& lv, double phi_sup, std::uint64_t seed) {
  const ScalarField& u = lv.result.solution;
  const ExteriorGrid& grid = *lv.grid;
  const FeasibilityAudit audit = feasibility_audit(u, lv.result.report.delta_effective);
  const auto chains = light_segment_scan(u, cfg.output.light_threshold);
  json chain_list = json::array();
  for (const LightChain& ch : chains) chain_list.push_back(to_json(ch));
  const NodeConstraints constraints = boundary_constraints(cfg.phi, grid, cfg.solver.closure);
  const WeakResidual weak = weak_residual_check(u, cfg.curvature, cfg.output.residual_trials, seed, &constraints);
  const double r_lo = 2.0 * grid.obstacles().max_extent();
  const double r_hi = grid.far_radius() - cfg.output.far_shell - grid.spacing();
  std::vector<double> radii;
  if (r_hi > r_lo)
    for (int i = 0; i < 8; ++i) radii.push_back(r_lo + (r_hi - r_lo) * i / 7.0);
  const DecayProfile decay = decay_profile(u, radii, phi_sup, cfg.output.decay_fraction);
  return {{"feasibility", to_json(audit)},
          {"interior_margin", interior_margin(u, cfg.output.far_shell)},
          {"far_shell", cfg.output.far_shell},
          {"light_threshold", cfg.output.light_threshold},
          {"light_chains", chain_list},
          {"weak_residual", to_json(weak)},
          {"decay", to_json(decay)},
          {"sup_norm", u.sup_norm()}};
}

}  // namespace

std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("SOLVER_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::string_view s(raw);
  int base = 10;
  if (s.starts_with("0x") || s.starts_with("0X")) {
    s.remove_prefix(2);
    base = 16;
  }
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw Error(ErrorCode::ConfigInvalid, "SOLVER_SEED must be an unsigned integer, got '" + std::string(raw) + "'");
  return value;
}

Outcome run(const Options& options, std::ostream& log) {
  Outcome out;
  RunConfig cfg;
  try {
    cfg = load_config(options.config);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    out.exit_code = kExitInvalid;
    out.report = {{"status", "invalid"}, {"exit_code", out.exit_code}, {"error", e.what()}};
    return out;
  }
  if (options.mode) {
    cfg.mode = *options.mode;
    cfg.resolved["mode"] = std::string(to_string(cfg.mode));
  }
  out.directory = options.out.value_or(cfg.output.directory);
  set_worker_threads(options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency()));

  json& report = out.report;
  report["mode"] = std::string(to_string(cfg.mode));
  report["seed"] = options.seed;
  report["config"] = cfg.resolved;
  const auto finish = [&](int code, std::string_view status) {
    out.exit_code = code;
    report["exit_code"] = code;
    report["status"] = status;
    write_json(out.directory / (cfg.output.stem + "_report.json"), report);
    log << "status: " << status << " (exit " << code << ")\n";
    return out;
  };

  try {
    if (cfg.mode == RunMode::OracleCompare) require_oracle_instance(cfg);
    const ObstacleSet obstacles = cfg.obstacle_set();
    const auto grid = std::make_shared<const ExteriorGrid>(
        build_grid(obstacles, cfg.domain.far_radius, cfg.domain.spacing));
    std::optional<Rejection> reject;
    report["admissibility"] = admissibility(cfg, *grid, options.seed, reject, log);
    if (reject) {
      report["error"] = reject->message;
      return finish(reject->code, "rejected");
    }
    if (cfg.mode == RunMode::Check) return finish(kExitOk, "ok");

    std::optional<TraceWriter> trace;
    if (options.trace) trace.emplace(*options.trace);
    const auto spacings = cfg.spacings();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<LevelResult> levels;
    try {
      levels = minimize_nested(cfg.curvature, cfg.phi, obstacles, cfg.domain.far_radius, spacings, cfg.solver,
                               [&](const IterationRecord& r) {
                                 if (trace) (*trace)(r);
                               });
    } catch (const Error& e) {
      report["error"] = e.what();
      log << "error: " << e.what() << "\n";
      if (e.code() == ErrorCode::NotLipschitzEnough) return finish(kExitRejected, "rejected");
      if (e.code() == ErrorCode::NoFeasibleStart || e.code() == ErrorCode::StalledInfeasible)
        return finish(kExitNotConverged, "not_converged");
      throw;
    }
    log << "solve time: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";

    json level_list = json::array();
    for (const LevelResult& lv : levels) {
      json r = to_json(lv.result.report);
      r.erase("energy_trace");
      level_list.push_back({{"spacing", lv.grid->spacing()},
                            {"nodes", lv.grid->node_count()},
                            {"cells", lv.grid->cell_count()},
                            {"report", r}});
    }
    for (double h : spacings) {
      const bool solved = std::any_of(levels.begin(), levels.end(),
                                      [&](const LevelResult& lv) { return lv.grid->spacing() == h; });
      if (!solved) report["notes"].push_back("level h = " + std::to_string(h) + " skipped: no feasible start");
    }
    const LevelResult& fine = levels.back();
    report["levels"] = level_list;
    report["solve"] = to_json(fine.result.report);
    report["energy"] = to_json(fine.result.report.energy);
    const double phi_sup = report["admissibility"]["phi_sup"].get<double>();
    report["diagnostics"] = diagnostics(cfg, fine, phi_sup, options.seed);

    const std::filesystem::path base = out.directory / cfg.output.stem;
    if (cfg.output.vtk) {
      if (cfg.domain.dimension <= 3)
        write_vtk(fine.result.solution, base.string() + ".vtk");
      else
        report["notes"].push_back("structured-points field skipped: dimension above 3");
    }
    if (cfg.output.dump) write_dump(fine.result.solution, base.string() + ".csv", cfg.output.delimiter);
    if (cfg.mode == RunMode::OracleCompare) report["oracle"] = oracle_compare(cfg, levels, out.directory, log);

    const SolveReport& sr = fine.result.report;
    log << "iterations " << sr.iterations << ", residual " << sr.residual << ", margin " << sr.margin
        << ", termination " << to_string(sr.termination) << "\n";
    if (sr.termination != Termination::Converged) return finish(kExitNotConverged, "not_converged");
    return finish(kExitOk, "ok");
  } catch (const Error& e) {
    report["error"] = e.what();
    log << "error: " << e.what() << "\n";
    return finish(kExitInvalid, "invalid");
  }
}

void oracle_table(const OracleOptions& o) {
  if (o.samples < 2) throw Error(ErrorCode::ConfigInvalid, "oracle table needs at least 2 samples");
  if (!(o.r_max > o.inner_radius)) throw Error(ErrorCode::ConfigInvalid, "r_max must exceed the inner radius");
  const double a = match_boundary_value(o.dimension, o.inner_radius, o.value, o.outer_radius);
  const RadialProfile p = radial_profile(o.dimension, a, o.inner_radius, o.r_max, o.outer_radius);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < o.samples; ++i) {
    const double r = o.inner_radius + (o.r_max - o.inner_radius) * i / (o.samples - 1);
    rows.push_back({r, p.value(r), p.slope(r)});
  }
  write_table(o.out, {"r", "u", "du_dr"}, rows);
}

}  // namespace pmc::cli
