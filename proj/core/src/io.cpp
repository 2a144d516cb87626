#include "pmc/io.hpp"

#include <cstdio>
#include <cstdlib>

#include "pmc/error.hpp"

namespace pmc {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigInvalid, "cannot write " + path.string());
  return out;
}

// Shortest decimal that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

std::string_view to_string(NodeTag t) {
  switch (t) {
    case NodeTag::Obstacle: return "obstacle";
    case NodeTag::Boundary: return "boundary";
    case NodeTag::Interior: return "interior";
    case NodeTag::Farfield: return "farfield";
  }
  return "unknown";
}

void write_vtk(const ScalarField& u, const std::filesystem::path& path, const std::string& name) {
  const ExteriorGrid& grid = u.grid();
  const int n = grid.dimension();
  if (n > 3) throw Error(ErrorCode::InvalidGeometry, "structured-points output needs dimension <= 3");
  std::ofstream out = open_out(path);
  const auto m = grid.nodes_per_axis();
  const double lo = -grid.far_radius();
  out << "# vtk DataFile Version 3.0\n" << name << " on the exterior grid\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS";
  for (int k = 0; k < 3; ++k) out << ' ' << (k < n ? m : 1);
  out << "\nORIGIN";
  for (int k = 0; k < 3; ++k) out << ' ' << (k < n ? fmt(lo) : "0");
  out << "\nSPACING";
  for (int k = 0; k < 3; ++k) out << ' ' << fmt(grid.spacing());
  out << "\nPOINT_DATA " << grid.node_count() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : u.values()) out << fmt(v) << '\n';
  out << "SCALARS tag int 1\nLOOKUP_TABLE default\n";
  for (NodeTag t : grid.tags()) out << static_cast<int>(t) << '\n';
}

void write_dump(const ScalarField& u, const std::filesystem::path& path, char delimiter) {
  const ExteriorGrid& grid = u.grid();
  const int n = grid.dimension();
  std::ofstream out = open_out(path);
  for (int k = 0; k < n; ++k) out << 'x' << (k + 1) << delimiter;
  out << "tag" << delimiter << "u\n";
  Point x(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < grid.node_count(); ++i) {
    if (grid.tag(i) == NodeTag::Obstacle) continue;
    grid.node_coordinates(i, x);
    for (double c : x) out << fmt(c) << delimiter;
    out << to_string(grid.tag(i)) << delimiter << fmt(u[i]) << '\n';
  }
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, char delimiter) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? std::string(1, delimiter) : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? std::string(1, delimiter) : "") << fmt(row[i]);
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json to_json(const EnergyBreakdown& e) {
  return {{"area", e.area},
          {"potential", e.potential},
          {"total", e.total},
          {"gradient_l2", e.gradient_l2},
          {"conjugate_norm", e.conjugate_norm}};
}

nlohmann::json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"energy", to_json(r.energy)},
          {"residual", r.residual},
          {"margin", r.margin},
          {"delta_effective", r.delta_effective},
          {"termination", std::string(to_string(r.termination))},
          {"initial_step", r.initial_step},
          {"backtrack", r.backtrack},
          {"extension_eps", r.extension_eps},
          {"extension_r_cut", r.extension_r_cut},
          {"restarts", r.restarts},
          {"closure", std::string(to_string(r.closure))},
          {"preconditioner", std::string(to_string(r.preconditioner))},
          {"energy_trace", r.energy_trace}};
}

nlohmann::json to_json(const DisplacingVerdict& v) {
  return {{"verdict", std::string(to_string(v.verdict))},
          {"worst_ratio", v.worst_ratio},
          {"worst_x", v.worst_x},
          {"worst_y", v.worst_y},
          {"pairs_tested", v.pairs_tested},
          {"samples", v.samples},
          {"note", v.note}};
}

nlohmann::json to_json(const FeasibilityAudit& a) {
  return {{"margin", a.margin}, {"worst_cell", a.worst_cell}, {"near_light", a.near_light}};
}

nlohmann::json to_json(const AssumptionAudit& a) {
  return {{"worst_ratio", a.worst_ratio},
          {"samples", a.samples},
          {"holds", a.holds},
          {"envelope_norm", a.envelope_norm}};
}

nlohmann::json to_json(const LightChain& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"cells", c.cells.size()},
          {"direction", c.direction},
          {"start", c.start},
          {"end", c.end},
          {"length", c.length},
          {"max_gradient", c.max_gradient}};
}

nlohmann::json to_json(const WeakResidual& w) { return {{"max_ratio", w.max_ratio}, {"trials", w.trials}}; }

nlohmann::json to_json(const DecayProfile& d) {
  nlohmann::json shells = nlohmann::json::array();
  for (const ShellSample& s : d.shells) shells.push_back({{"radius", s.radius}, {"sup", s.sup}, {"nodes", s.nodes}});
  return {{"shells", shells},
          {"non_increasing", d.non_increasing},
          {"final_below", d.final_below},
          {"fraction", d.fraction},
          {"decays", d.decays()}};
}

nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration}, {"energy", r.energy}, {"residual", r.residual}, {"margin", r.margin}};
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(open_out(path)) {}

void TraceWriter::operator()(const IterationRecord& r) { out_ << to_json(r).dump() << '\n'; }

}  // namespace pmc
