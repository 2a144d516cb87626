// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "pmc/analysis.hpp"
#include "pmc/error.hpp"
#include "pmc/optimizer.hpp"
#include "support.hpp"

using namespace pmc;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::filesystem::path kWork = std::filesystem::temp_directory_path() / "pmc_acceptance";

cli::Outcome run_cli(const std::string& name, const json& cfg, std::optional<RunMode> mode = {}) {
  const auto path = kWork / (name + ".json");
  std::ofstream(path) << cfg.dump(2);
  cli::Options o;
  o.config = path;
  o.mode = mode;
  o.out = kWork / name;
  std::ostringstream log;
  return cli::run(o, log);
}

json two_ball_config(double v, double h) {
  return {{"domain",
           {{"far_radius", 8.0},
            {"spacing", h},
            {"obstacles",
             {{{"type", "ball"}, {"center", {-2, 0, 0}}, {"radius", 1.0}},
              {{"type", "ball"}, {"center", {2, 0, 0}}, {"radius", 1.0}}}}}},
          {"boundary", {{"phi", {-v, v}}}}};
}

CurvatureSpec gaussian_source() {
  return CurvatureSpec::x_only(3, Expression::parse("exp(-r^2)", 3), Expression::parse("3 * exp(-r^2)", 3), 1.2);
}

CurvatureSpec monotone_source() {
  return CurvatureSpec::general(3, Expression::parse("t * exp(-r^2)", 3), Expression::parse("3 * exp(-r^2)", 3), 1.2);
}

// Shared between criteria 8, 9 and 10.
struct Minimizer {
  std::string label;
  ScalarField u;
  CurvatureSpec spec;
  BoundaryDatum phi;
  SolverParams params;
};
std::vector<Minimizer> g_minimizers;
json g_oracle_report;
json g_two_ball_report;

Result zero_instance() {
  const auto t0 = Clock::now();
  const auto grid = std::make_shared<const ExteriorGrid>(build_grid(
      ObstacleSet(3, {Ball{{-2, 0, 0}, 1.0}, Box{{1, -1, -1}, {3, 1, 1}}}), 8.0, 0.25));
  const MinimizeResult r = minimize(CurvatureSpec::zero(3), BoundaryDatum::constant(2, 0.0), grid, SolverParams{});
  const double t = seconds_since(t0);
  const double sup = r.solution.sup_norm();
  const double e = std::fabs(r.report.energy.total);
  return {sup <= 1e-12 && e <= 1e-12 && t < 1.0, fmt("sup %.3g, energy %.3g, %.3f s", sup, e, t)};
}

Result radial_oracle() {
  const json cfg = {{"domain",
                     {{"far_radius", 12.0},
                      {"spacing", 0.125},
                      {"refinement", {0.5, 0.25}},
                      {"obstacles", {{{"type", "ball"}, {"radius", 1.0}}}}}},
                    {"boundary", {{"phi", 0.3}}},
                    {"solver", {{"tol_residual", 1e-6}}},
                    {"output", {{"vtk", false}, {"dump", false}}}};
  const auto t0 = Clock::now();
  const cli::Outcome r = run_cli("radial", cfg, RunMode::OracleCompare);
  const double t = seconds_since(t0);
  if (r.exit_code != cli::kExitOk) return {false, fmt("exit %d", r.exit_code)};
  g_oracle_report = r.report;
  const json& o = r.report["oracle"];
  std::string levels;
  for (const json& lv : o["levels"])
    levels += fmt("h=%g: %.2f%%  ", lv["spacing"].get<double>(), 100.0 * lv["relative"].get<double>());
  const double rel = o["relative_sup_diff"].get<double>();
  const bool monotone = o["monotone"].get<bool>();
  return {rel <= 0.02 && monotone && t <= 600.0,
          levels + fmt("monotone %s, %.0f s", monotone ? "yes" : "no", t)};
}

Result gradient_consistency() {
  const auto grid = fixtures::ball_grid(3, 5.0, 0.5);
  const EnergyModel model(grid, gaussian_source());
  std::mt19937_64 rng(101);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ScalarField u = fixtures::random_field(grid, rng, 0.9);
    ScalarField v(grid);
    for (std::int64_t i = 0; i < grid->node_count(); ++i)
      if (grid->tag(i) == NodeTag::Interior) v[i] = normal(rng);
    const double eps = 1e-6;
    const double fd = (model.total((u + eps * v).values()) - model.total((u - (eps * v)).values())) / (2 * eps);
    const double dv = model.first_variation(u.values(), v.values());
    worst = std::max(worst, std::fabs(dv - fd) / std::fabs(fd));
  }
  return {worst <= 1e-6, fmt("worst relative error %.2e over 20 fields", worst)};
}

Result convexity_sandwich() {
  const auto grid = fixtures::ball_grid(3, 3.0, 0.5);
  const EnergyModel model(grid, CurvatureSpec::zero(3));
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_convex = std::numeric_limits<double>::infinity();
  double worst_sandwich = std::numeric_limits<double>::infinity();
  std::int64_t cells = 0;
  for (int k = 0; k < 1000; ++k) {
    const ScalarField u = fixtures::random_field(grid, rng, 0.999 * unit(rng), 3);
    const ScalarField v = fixtures::random_field(grid, rng, 0.999 * unit(rng), 3);
    const double lambda = unit(rng);
    const double lhs = model.area((lambda * u + (1 - lambda) * v).values());
    const double rhs = lambda * model.area(u.values()) + (1 - lambda) * model.area(v.values());
    worst_convex = std::min(worst_convex, rhs - lhs);
    for (double s : model.cell_slopes(u.values())) {
      const double t = s * s;
      const double f = 1.0 - std::sqrt(1.0 - t);
      worst_sandwich = std::min({worst_sandwich, f - 0.5 * t, t - f});
      ++cells;
    }
  }
  return {worst_convex >= -1e-12 && worst_sandwich >= -1e-12,
          fmt("min convexity slack %.2e over 1000 triples, min sandwich slack %.2e over %lld cells", worst_convex,
              worst_sandwich, static_cast<long long>(cells))};
}

Result coercivity() {
  const auto grid = fixtures::ball_grid(3, 5.0, 0.5);
  const CurvatureSpec spec = gaussian_source();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unit(0.05, 0.99);
  int held = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const ScalarField u = fixtures::random_field(grid, rng, unit(rng));
    const CoercivityCheck c = coercivity_bound(u, spec);
    held += c.holds ? 1 : 0;
    worst = std::min(worst, c.lhs - c.rhs);
  }
  return {held == 20, fmt("%d/20 hold, min slack %.3g", held, worst)};
}

Result displacing() {
  const cli::Outcome bad = run_cli("two_ball_fail", two_ball_config(1.1, 0.25), RunMode::Check);
  const double ratio = bad.report["admissibility"]["displacing"]["worst_ratio"].get<double>();
  json cfg = two_ball_config(0.9, 0.25);
  cfg["output"] = {{"vtk", false}, {"dump", false}};
  const cli::Outcome good = run_cli("two_ball_pass", cfg);
  g_two_ball_report = good.report;
  const double tol = good.report["config"]["solver"]["tol_residual"].get<double>();
  const double res = good.report.contains("solve") ? good.report["solve"]["residual"].get<double>() : -1.0;
  const bool ok = bad.exit_code == cli::kExitRejected && ratio >= 1.05 && good.exit_code == cli::kExitOk &&
                  res >= 0.0 && res <= tol;
  return {ok, fmt("+-1.1: exit %d ratio %.4f; +-0.9: exit %d residual %.2e (tol %.0e)", bad.exit_code, ratio,
                  good.exit_code, res, tol)};
}

Result extension_contract() {
  const auto grid = std::make_shared<const ExteriorGrid>(
      build_grid(ObstacleSet(3, {Ball{{-2, 0, 0}, 1.0}, Ball{{2, 0.5, 0}, 0.8}}), 16.0, 0.25));
  const EnergyModel model(grid, CurvatureSpec::zero(3));
  std::mt19937_64 rng(404);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double eps = 0.3;
  int ok = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  double worst_trace = 0.0;
  std::string failure;
  for (int k = 0; k < 10; ++k) {
    // a.x + b sin(w.x + c) has Lipschitz constant at most |a| + |b||w| = 0.7 (1 - margin).
    Point a(3), w(3);
    for (double& c : a) c = normal(rng);
    for (double& c : w) c = normal(rng);
    const double share = unit(rng);
    const double budget = (1.0 - eps) * (1.0 - 0.05 * unit(rng));
    const double na = norm(a), nw = norm(w);
    for (double& c : a) c *= share * budget / na;
    const double b = (1.0 - share) * budget / nw;
    const double c0 = 0.4 * (unit(rng) - 0.5);
    const std::string text =
        fmt("%.17g + %.17g*x1 + %.17g*x2 + %.17g*x3 + %.17g*sin(%.17g*x1 + %.17g*x2 + %.17g*x3 + %.17g)", c0, a[0],
            a[1], a[2], b, w[0], w[1], w[2], 6.0 * unit(rng));
    const Expression e = Expression::parse(text, 3);
    const BoundaryDatum phi({TraceRule{e}, TraceRule{e}});
    try {
      const Extension ext = extend_to_feasible(phi, grid, eps);
      double trace_err = 0.0;
      for (const BoundaryNode& bn : grid->boundary_nodes())
        trace_err = std::max(trace_err, std::fabs(ext.field[bn.node] - e.eval(bn.surface_point)));
      const double slope = model.gradient_stats(ext.field.values()).max_norm;
      const double bound = ext.phi_sup / ext.r_cut + 1.0 - eps;
      worst_trace = std::max(worst_trace, trace_err);
      worst_gap = std::min(worst_gap, bound - slope);
      if (trace_err == 0.0 && slope <= bound && bound < 1.0) ++ok;
    } catch (const Error& err) {
      failure = err.what();
    }
  }
  return {ok == 10, fmt("%d/10 pass, worst trace error %.2e, min bound slack %.4f", ok, worst_trace, worst_gap) +
                        (failure.empty() ? "" : ", error: " + failure)};
}

void solve_minimizers() {
  const auto grid = fixtures::ball_grid(3, 6.0, 0.25);
  SolverParams p;
  p.tol_residual = 1e-7;
  p.tol_energy = 1e-13;
  const BoundaryDatum phi({TraceRule{Expression::parse("0.3 + 0.1 * x3", 3)}});
  for (auto& [label, spec] :
       std::vector<std::pair<std::string, CurvatureSpec>>{{"gaussian", gaussian_source()},
                                                          {"monotone", monotone_source()},
                                                          {"zero", CurvatureSpec::zero(3)}}) {
    const MinimizeResult r = minimize(spec, phi, grid, p);
    if (r.report.termination == Termination::Converged) g_minimizers.push_back({label, r.solution, spec, phi, p});
  }
}

Result frozen_optimality() {
  if (g_minimizers.size() != 3) return {false, "not every reference minimizer converged"};
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const EnergyModel zero(g_minimizers.front().u.grid_ptr(), CurvatureSpec::zero(3));
  double worst = std::numeric_limits<double>::infinity();
  int total = 0;
  for (const Minimizer& m : g_minimizers) {
    const auto grid = m.u.grid_ptr();
    const NodeConstraints nc = boundary_constraints(m.phi, *grid, m.params.closure);
    const double base = frozen_energy(m.u, m.u, m.spec);
    for (int k = 0; k < 100; ++k) {
      ScalarField w = fixtures::random_field(grid, rng, 1.0, 2 + k % 5);
      for (std::int64_t i = 0; i < grid->node_count(); ++i)
        if (grid->tag(i) != NodeTag::Interior) w[i] = 0.0;
      // Largest step along +-w that keeps every cell below slope 0.995, then a random fraction of it.
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      double lo = 0.0, hi = 4.0;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        ScalarField v = m.u + (sign * mid) * w;
        nc.apply(v.values());
        (zero.gradient_stats(v.values()).max_norm <= 0.995 ? lo : hi) = mid;
      }
      ScalarField v = m.u + (sign * lo * std::pow(unit(rng), 2.0)) * w;
      nc.apply(v.values());
      worst = std::min(worst, frozen_energy(v, m.u, m.spec) + 1e-8 - base);
      ++total;
    }
  }
  return {worst >= 0.0, fmt("min slack %.3e over %d perturbations of 3 minimizers", worst, total)};
}

Result monotone_uniqueness() {
  const auto grid = fixtures::ball_grid(3, 6.0, 0.25);
  SolverParams p;
  p.tol_residual = 1e-7;
  p.tol_energy = 1e-13;
  const BoundaryDatum phi({TraceRule{Expression::parse("0.3 + 0.1 * x3", 3)}});
  const CurvatureSpec spec = monotone_source();
  const MinimizeResult a = minimize(spec, phi, grid, p);
  // Second start: the H = 0 minimizer pushed by a smooth bump.
  SolverParams loose = p;
  loose.tol_residual = 1e-3;
  ScalarField start = minimize(CurvatureSpec::zero(3), phi, grid, loose).solution;
  std::mt19937_64 rng(606);
  ScalarField bump = fixtures::random_field(grid, rng, 0.2);
  for (std::int64_t i = 0; i < grid->node_count(); ++i)
    if (grid->tag(i) != NodeTag::Interior) bump[i] = 0.0;
  start += bump;
  boundary_constraints(phi, *grid, p.closure).apply(start.values());
  const double start_gap = start.sup_distance(a.solution);
  const MinimizeResult b = minimize(spec, phi, grid, p, start);
  const double d = a.solution.sup_distance(b.solution);
  const bool both = a.report.termination == Termination::Converged && b.report.termination == Termination::Converged;
  return {both && d <= 10.0 * p.tol_residual && start_gap > 1e-2,
          fmt("starts %.3f apart, solutions %.2e apart (bound %.0e)", start_gap, d, 10.0 * p.tol_residual)};
}

Result spacelike_minimizers() {
  std::string detail;
  bool ok = true;
  auto from_report = [&](const char* label, const json& r) {
    if (!r.contains("diagnostics")) {
      ok = false;
      detail += fmt("%s: no solution; ", label);
      return;
    }
    const json& d = r["diagnostics"];
    const std::size_t chains = d["light_chains"].size();
    const double margin = d["interior_margin"].get<double>();
    ok = ok && chains == 0 && margin > 0.0;
    detail += fmt("%s: %zu chains, margin %.3f; ", label, chains, margin);
  };
  from_report("radial", g_oracle_report);
  from_report("two-ball", g_two_ball_report);
  const Minimizer* mono = nullptr;
  for (const Minimizer& m : g_minimizers)
    if (m.label == "monotone") mono = &m;
  if (mono == nullptr) {
    ok = false;
    detail += "monotone: no solution";
  } else {
    const std::size_t chains = light_segment_scan(mono->u, 1e-3).size();
    const double margin = interior_margin(mono->u, 1.0);
    ok = ok && chains == 0 && margin > 0.0;
    detail += fmt("monotone: %zu chains, margin %.3f", chains, margin);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  std::filesystem::create_directories(kWork);
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"zero instance", zero_instance},
      {"radial oracle equivalence", radial_oracle},
      {"gradient consistency", gradient_consistency},
      {"convexity and sandwich", convexity_sandwich},
      {"coercivity audit", coercivity},
      {"displacing soundness", displacing},
      {"extension contract", extension_contract},
      {"frozen-functional optimality",
       [] {
         solve_minimizers();
         return frozen_optimality();
       }},
      {"monotone-H uniqueness", monotone_uniqueness},
      {"spacelike minimizers", spacelike_minimizers},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (v.pass ? "PASS" : "FAIL") << " | "
              << v.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
