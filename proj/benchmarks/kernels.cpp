#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "pmc/boundary_data.hpp"
#include "pmc/functional.hpp"
#include "pmc/preconditioner.hpp"

using namespace pmc;

namespace {

std::shared_ptr<const ExteriorGrid> grid_for(double far_radius, double h) {
  return std::make_shared<const ExteriorGrid>(build_grid(ObstacleSet(3, {Ball{{0, 0, 0}, 1.0}}), far_radius, h));
}

ScalarField smooth_field(const std::shared_ptr<const ExteriorGrid>& grid) {
  return ScalarField::from_function(grid, [](std::span<const double> x) {
    const double taper = std::max(0.0, 1.0 - norm(x) / 5.0);
    return taper * (0.3 * std::sin(0.7 * x[0]) * std::cos(0.5 * x[1]) + 0.1 * x[2]);
  });
}

void BM_Energy(benchmark::State& state) {
  const auto grid = grid_for(6.0, 6.0 / static_cast<double>(state.range(0)));
  const EnergyModel model(grid, CurvatureSpec::x_only(3, Expression::parse("exp(-r^2)", 3)));
  const ScalarField u = smooth_field(grid);
  for (auto _ : state) benchmark::DoNotOptimize(model.total(u.values()));
  state.counters["cells"] = static_cast<double>(grid->cells().size());
}

void BM_EnergyAndGradient(benchmark::State& state) {
  const auto grid = grid_for(6.0, 6.0 / static_cast<double>(state.range(0)));
  const EnergyModel model(grid, CurvatureSpec::x_only(3, Expression::parse("exp(-r^2)", 3)));
  const ScalarField u = smooth_field(grid);
  std::vector<double> g(u.values().size());
  for (auto _ : state) benchmark::DoNotOptimize(model.value_and_gradient(u.values(), g));
  state.counters["cells"] = static_cast<double>(grid->cells().size());
}

void BM_PoissonPreconditioner(benchmark::State& state) {
  const auto grid = grid_for(6.0, 6.0 / static_cast<double>(state.range(0)));
  const PoissonPreconditioner p(*grid);
  const ScalarField u = smooth_field(grid);
  std::vector<double> out(u.values().size());
  for (auto _ : state) {
    p.apply(u.values(), out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Extension(benchmark::State& state) {
  const auto grid = grid_for(8.0, 8.0 / static_cast<double>(state.range(0)));
  const BoundaryDatum phi({TraceRule{Expression::parse("0.2 + 0.1 * x1", 3)}});
  for (auto _ : state) benchmark::DoNotOptimize(extend_to_feasible(phi, grid, 0.3).field.values().data());
}

}  // namespace

BENCHMARK(BM_Energy)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnergyAndGradient)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PoissonPreconditioner)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Extension)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
