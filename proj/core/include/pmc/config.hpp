#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmc/boundary_data.hpp"
#include "pmc/curvature.hpp"
#include "pmc/geometry.hpp"
#include "pmc/optimizer.hpp"

namespace pmc {

enum class RunMode { Check, Solve, OracleCompare };
std::string_view to_string(RunMode m);
RunMode parse_run_mode(std::string_view text);

struct DomainConfig {
  int dimension = 3;
  std::vector<Shape> obstacles;
  double far_radius = 8.0;
  double spacing = 0.25;
  /// Coarser spacings solved first; the last solve always uses `spacing`.
  std::vector<double> refinement;
};

struct BoundaryConfig {
  double displacing_margin = 0.0;
  int samples = 64;  ///< surface samples per obstacle for the pair checks
};

struct OutputConfig {
  std::filesystem::path directory = ".";
  std::string stem = "solution";
  bool vtk = true;
  bool dump = true;
  char delimiter = ',';
  double light_threshold = 1e-3;
  double decay_fraction = 0.1;
  int residual_trials = 16;
  double far_shell = 1.0;  ///< width of the far-field shell excluded from the interior margin
  int oracle_samples = 256;
};

/// A fully resolved run description.
struct RunConfig {
  RunMode mode = RunMode::Solve;
  DomainConfig domain;
  BoundaryDatum phi{std::vector<TraceRule>{}};
  BoundaryConfig boundary;
  CurvatureSpec curvature = CurvatureSpec::zero(3);
  SolverParams solver;
  OutputConfig output;
  /// The input with every default filled in.
  nlohmann::json resolved;

  ObstacleSet obstacle_set() const { return ObstacleSet(domain.dimension, domain.obstacles); }
  /// Coarse-to-fine spacings ending at domain.spacing.
  std::vector<double> spacings() const;
};

/// Parses a JSON run description. Syntax errors and bad fields throw
/// Error{ConfigInvalid} naming the source, line and field.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace pmc
