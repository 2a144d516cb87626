#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmc/analysis.hpp"
#include "pmc/boundary_data.hpp"
#include "pmc/curvature.hpp"
#include "pmc/optimizer.hpp"

namespace pmc {

/// Legacy VTK structured-points file with the nodal values and node tags,
/// x fastest. Grids of dimension above 3 throw InvalidGeometry.
void write_vtk(const ScalarField& u, const std::filesystem::path& path, const std::string& name = "u");

/// One row per non-obstacle node: coordinates, tag, value.
void write_dump(const ScalarField& u, const std::filesystem::path& path, char delimiter = ',');

/// Delimited table with a header row.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, char delimiter = ',');

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

std::string_view to_string(NodeTag t);

nlohmann::json to_json(const EnergyBreakdown& e);
nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const DisplacingVerdict& v);
nlohmann::json to_json(const FeasibilityAudit& a);
nlohmann::json to_json(const AssumptionAudit& a);
nlohmann::json to_json(const LightChain& c);
nlohmann::json to_json(const WeakResidual& w);
nlohmann::json to_json(const DecayProfile& d);
nlohmann::json to_json(const IterationRecord& r);

/// Streams iteration records as one JSON object per line.
class TraceWriter {
public:
  explicit TraceWriter(const std::filesystem::path& path);
  void operator()(const IterationRecord& r);

private:
  std::ofstream out_;
};

}  // namespace pmc
