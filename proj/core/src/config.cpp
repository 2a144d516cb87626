#include "pmc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pmc/error.hpp"

namespace pmc {

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::Check: return "check";
    case RunMode::Solve: return "solve";
    case RunMode::OracleCompare: return "oracle-compare";
  }
  return "unknown";
}

RunMode parse_run_mode(std::string_view text) {
  if (text == "check") return RunMode::Check;
  if (text == "solve") return RunMode::Solve;
  if (text == "oracle-compare") return RunMode::OracleCompare;
  throw Error(ErrorCode::ConfigInvalid, "unknown mode '" + std::string(text) + "' (check, solve, oracle-compare)");
}

std::vector<double> RunConfig::spacings() const {
  std::vector<double> out;
  for (double h : domain.refinement)
    if (h > domain.spacing) out.push_back(h);
  std::sort(out.begin(), out.end(), std::greater<>());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.push_back(domain.spacing);
  return out;
}

namespace {

using nlohmann::json;

int line_of(std::string_view text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
public:
  Reader(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string field;
    std::size_t pos = 0;
    bool found = true;
    for (const std::string& key : path) {
      if (!field.empty()) field += '.';
      field += key;
      if (key.front() == '[') continue;
      const std::size_t at = text_.find('"' + key + '"', pos);
      if (at == std::string_view::npos) {
        found = false;
      } else if (found) {
        pos = at;
      }
    }
    std::ostringstream msg;
    msg << source_;
    if (found && !path.empty()) msg << ":" << line_of(text_, pos);
    msg << ": field '" << (field.empty() ? "<root>" : field) << "': " << what;
    throw Error(ErrorCode::ConfigInvalid, msg.str());
  }

  void only(const json& obj, const std::vector<std::string>& path, std::initializer_list<std::string_view> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        auto p = path;
        p.push_back(k);
        fail(p, "unknown field");
      }
    }
  }

  double number(const json& obj, std::vector<std::string> path, const std::string& key, std::optional<double> fallback) const {
    path.push_back(key);
    if (!obj.contains(key)) {
      if (!fallback) fail(path, "required field is missing");
      return *fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }

  int integer(const json& obj, std::vector<std::string> path, const std::string& key, int fallback) const {
    path.push_back(key);
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const json& obj, std::vector<std::string> path, const std::string& key, bool fallback) const {
    path.push_back(key);
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  std::optional<std::string> string(const json& obj, std::vector<std::string> path, const std::string& key) const {
    path.push_back(key);
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  Point point(const json& v, const std::vector<std::string>& path, int n) const {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
      fail(path, "expected an array of " + std::to_string(n) + " numbers");
    Point p;
    for (const json& c : v) {
      if (!c.is_number()) fail(path, "expected an array of numbers");
      p.push_back(c.get<double>());
    }
    return p;
  }

  Expression expression(const std::string& text, const std::vector<std::string>& path, int n) const {
    try {
      return Expression::parse(text, n);
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }

private:
  std::string_view text_;
  std::string_view source_;
};

using Path = std::vector<std::string>;

Path at(Path p, std::string key) {
  p.push_back(std::move(key));
  return p;
}

Path at(Path p, std::size_t index) {
  p.push_back("[" + std::to_string(index) + "]");
  return p;
}

DomainConfig read_domain(const Reader& rd, const json& j, json& out) {
  const Path path{"domain"};
  rd.only(j, path, {"dimension", "far_radius", "spacing", "refinement", "obstacles"});
  DomainConfig d;
  d.dimension = rd.integer(j, path, "dimension", 3);
  if (d.dimension < 3 || d.dimension > 6) rd.fail(at(path, "dimension"), "must lie in 3..6");
  d.far_radius = rd.number(j, path, "far_radius", std::nullopt);
  if (!(d.far_radius > 0.0)) rd.fail(at(path, "far_radius"), "must be positive");
  d.spacing = rd.number(j, path, "spacing", std::nullopt);
  if (!(d.spacing > 0.0 && d.spacing < d.far_radius)) rd.fail(at(path, "spacing"), "must lie in (0, far_radius)");
  if (j.contains("refinement")) {
    const json& r = j.at("refinement");
    if (!r.is_array()) rd.fail(at(path, "refinement"), "expected an array of spacings");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r[i].is_number() || !(r[i].get<double>() > 0.0))
        rd.fail(at(at(path, "refinement"), i), "expected a positive spacing");
      d.refinement.push_back(r[i].get<double>());
    }
  }
  if (!j.contains("obstacles") || !j.at("obstacles").is_array() || j.at("obstacles").empty())
    rd.fail(at(path, "obstacles"), "expected a non-empty array of obstacles");
  json shapes = json::array();
  const json& obs = j.at("obstacles");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Path p = at(at(path, "obstacles"), i);
    const json& o = obs[i];
    const auto type = rd.string(o, p, "type");
    if (type == "ball") {
      rd.only(o, p, {"type", "center", "radius"});
      Ball b;
      b.center = o.contains("center") ? rd.point(o.at("center"), at(p, "center"), d.dimension)
                                      : Point(static_cast<std::size_t>(d.dimension), 0.0);
      b.radius = rd.number(o, p, "radius", std::nullopt);
      if (!(b.radius > 0.0)) rd.fail(at(p, "radius"), "must be positive");
      shapes.push_back({{"type", "ball"}, {"center", b.center}, {"radius", b.radius}});
      d.obstacles.emplace_back(std::move(b));
    } else if (type == "box") {
      rd.only(o, p, {"type", "lower", "upper"});
      if (!o.contains("lower") || !o.contains("upper")) rd.fail(p, "a box needs lower and upper corners");
      Box b{rd.point(o.at("lower"), at(p, "lower"), d.dimension), rd.point(o.at("upper"), at(p, "upper"), d.dimension)};
      for (int k = 0; k < d.dimension; ++k)
        if (!(b.lower[static_cast<std::size_t>(k)] < b.upper[static_cast<std::size_t>(k)]))
          rd.fail(at(p, "upper"), "must exceed lower in every coordinate");
      shapes.push_back({{"type", "box"}, {"lower", b.lower}, {"upper", b.upper}});
      d.obstacles.emplace_back(std::move(b));
    } else {
      rd.fail(at(p, "type"), "expected \"ball\" or \"box\"");
    }
  }
  out = {{"dimension", d.dimension},
         {"far_radius", d.far_radius},
         {"spacing", d.spacing},
         {"refinement", d.refinement},
         {"obstacles", shapes}};
  return d;
}

TraceRule read_rule(const Reader& rd, const json& v, const Path& p, int n, json& out) {
  if (v.is_number()) {
    out = v.get<double>();
    return v.get<double>();
  }
  if (v.is_string()) {
    out = {{"expression", v.get<std::string>()}};
    return rd.expression(v.get<std::string>(), p, n);
  }
  if (v.is_object() && v.contains("constant")) {
    rd.only(v, p, {"constant"});
    const double c = rd.number(v, p, "constant", std::nullopt);
    out = c;
    return c;
  }
  if (v.is_object() && v.contains("expression")) {
    rd.only(v, p, {"expression"});
    const std::string text = *rd.string(v, p, "expression");
    out = {{"expression", text}};
    return rd.expression(text, at(p, "expression"), n);
  }
  if (v.is_object() && v.contains("table")) {
    rd.only(v, p, {"table"});
    const Path tp = at(p, "table");
    const json& t = v.at("table");
    rd.only(t, tp, {"points", "values"});
    if (!t.contains("points") || !t.at("points").is_array() || !t.contains("values") || !t.at("values").is_array() ||
        t.at("points").size() != t.at("values").size() || t.at("points").empty())
      rd.fail(tp, "a table needs non-empty points and values arrays of equal length");
    TabulatedTrace trace;
    for (std::size_t i = 0; i < t.at("points").size(); ++i) {
      trace.points.push_back(rd.point(t.at("points")[i], at(at(tp, "points"), i), n));
      const json& val = t.at("values")[i];
      if (!val.is_number()) rd.fail(at(at(tp, "values"), i), "expected a number");
      trace.values.push_back(val.get<double>());
    }
    out = {{"table", {{"points", trace.points}, {"values", trace.values}}}};
    return trace;
  }
  rd.fail(p, "expected a number, an expression string, or an object with constant, expression or table");
}

BoundaryDatum read_boundary(const Reader& rd, const json& j, const DomainConfig& d, BoundaryConfig& cfg, json& out) {
  const Path path{"boundary"};
  rd.only(j, path, {"phi", "displacing_margin", "samples"});
  cfg.displacing_margin = rd.number(j, path, "displacing_margin", 0.0);
  if (!(cfg.displacing_margin >= 0.0 && cfg.displacing_margin < 1.0))
    rd.fail(at(path, "displacing_margin"), "must lie in [0, 1)");
  cfg.samples = rd.integer(j, path, "samples", 64);
  if (cfg.samples < 0) rd.fail(at(path, "samples"), "must be non-negative");
  if (!j.contains("phi")) rd.fail(at(path, "phi"), "required field is missing");
  const json& phi = j.at("phi");
  const std::size_t count = d.obstacles.size();
  std::vector<TraceRule> rules;
  json rules_out = json::array();
  if (phi.is_array()) {
    if (phi.size() != count)
      rd.fail(at(path, "phi"), "expected one entry per obstacle (" + std::to_string(count) + ")");
    for (std::size_t i = 0; i < count; ++i) {
      json r;
      rules.push_back(read_rule(rd, phi[i], at(at(path, "phi"), i), d.dimension, r));
      rules_out.push_back(r);
    }
  } else {
    json r;
    const TraceRule rule = read_rule(rd, phi, at(path, "phi"), d.dimension, r);
    rules.assign(count, rule);
    for (std::size_t i = 0; i < count; ++i) rules_out.push_back(r);
  }
  out = {{"phi", rules_out}, {"displacing_margin", cfg.displacing_margin}, {"samples", cfg.samples}};
  return BoundaryDatum(std::move(rules));
}

CurvatureSpec read_curvature(const Reader& rd, const json& j, int n, json& out) {
  const Path path{"curvature"};
  rd.only(j, path, {"form", "f", "g", "H", "envelope", "exponent"});
  const std::string form = rd.string(j, path, "form").value_or("zero");
  auto expr = [&](const char* key, bool required) -> std::optional<Expression> {
    const auto text = rd.string(j, path, key);
    if (!text) {
      if (required) rd.fail(at(path, key), "required for form '" + form + "'");
      return std::nullopt;
    }
    return rd.expression(*text, at(path, key), n);
  };
  auto exponent = [&](bool required) -> std::optional<double> {
    if (!j.contains("exponent")) {
      if (required) rd.fail(at(path, "exponent"), "required for form '" + form + "'");
      return std::nullopt;
    }
    const double s = rd.number(j, path, "exponent", std::nullopt);
    const double top = 2.0 * n / (n + 2.0);
    if (!(s >= 1.0 && s <= top + 1e-12))
      rd.fail(at(path, "exponent"), "must lie in [1, 2n/(n+2)] = [1, " + std::to_string(top) + "]");
    return s;
  };
  out = {{"form", form}};
  try {
    if (form == "zero") {
      return CurvatureSpec::zero(n);
    }
    if (form == "x_only") {
      Expression f = *expr("f", true);
      auto env = expr("envelope", false);
      auto s = exponent(env.has_value());
      out["f"] = f.text();
      if (env) out["envelope"] = env->text();
      if (s) out["exponent"] = *s;
      return CurvatureSpec::x_only(n, std::move(f), std::move(env), s);
    }
    if (form == "separable") {
      Expression f = *expr("f", true);
      Expression g = *expr("g", true);
      Expression env = *expr("envelope", true);
      const double s = *exponent(true);
      out.update({{"f", f.text()}, {"g", g.text()}, {"envelope", env.text()}, {"exponent", s}});
      return CurvatureSpec::separable(n, std::move(f), std::move(g), std::move(env), s);
    }
    if (form == "general") {
      Expression h = *expr("H", true);
      Expression env = *expr("envelope", true);
      const double s = *exponent(true);
      out.update({{"H", h.text()}, {"envelope", env.text()}, {"exponent", s}});
      return CurvatureSpec::general(n, std::move(h), std::move(env), s);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid && std::string_view(e.what()).find("field '") != std::string_view::npos)
      throw;
    rd.fail(path, e.what());
  }
  rd.fail(at(path, "form"), "expected zero, x_only, separable or general");
}

SolverParams read_solver(const Reader& rd, const json& j, json& out) {
  const Path path{"solver"};
  rd.only(j, path,
          {"max_iterations", "tol_energy", "tol_residual", "delta_start", "delta_floor", "backtrack", "initial_step",
           "accelerate", "extension_eps", "closure", "preconditioner"});
  SolverParams p;
  p.max_iterations = rd.integer(j, path, "max_iterations", p.max_iterations);
  p.tol_energy = rd.number(j, path, "tol_energy", p.tol_energy);
  p.tol_residual = rd.number(j, path, "tol_residual", p.tol_residual);
  p.delta_start = rd.number(j, path, "delta_start", p.delta_start);
  p.delta_floor = rd.number(j, path, "delta_floor", p.delta_floor);
  p.backtrack = rd.number(j, path, "backtrack", p.backtrack);
  p.initial_step = rd.number(j, path, "initial_step", p.initial_step);
  p.accelerate = rd.boolean(j, path, "accelerate", p.accelerate);
  p.extension_eps = rd.number(j, path, "extension_eps", p.extension_eps);
  if (const auto c = rd.string(j, path, "closure")) {
    if (*c == "pinned") {
      p.closure = BoundaryClosure::Pinned;
    } else if (*c == "extrapolated") {
      p.closure = BoundaryClosure::Extrapolated;
    } else {
      rd.fail(at(path, "closure"), "expected \"pinned\" or \"extrapolated\"");
    }
  }
  if (const auto c = rd.string(j, path, "preconditioner")) {
    if (*c == "poisson") {
      p.preconditioner = Preconditioner::Poisson;
    } else if (*c == "jacobi") {
      p.preconditioner = Preconditioner::Jacobi;
    } else {
      rd.fail(at(path, "preconditioner"), "expected \"poisson\" or \"jacobi\"");
    }
  }
  try {
    p.validate();
  } catch (const Error& e) {
    std::string what = e.what();
    const std::size_t dot = what.find("solver.");
    std::string rest = dot == std::string::npos ? what : what.substr(dot + 7);
    const std::string key = rest.substr(0, rest.find(' '));
    rd.fail(at(path, key), rest.substr(std::min(rest.size(), key.size() + 1)));
  }
  out = {{"max_iterations", p.max_iterations}, {"tol_energy", p.tol_energy},   {"tol_residual", p.tol_residual},
         {"delta_start", p.delta_start},       {"delta_floor", p.delta_floor}, {"backtrack", p.backtrack},
         {"initial_step", p.initial_step},     {"accelerate", p.accelerate},   {"extension_eps", p.extension_eps},
         {"closure", std::string(to_string(p.closure))},
         {"preconditioner", std::string(to_string(p.preconditioner))}};
  return p;
}

OutputConfig read_output(const Reader& rd, const json& j, json& out) {
  const Path path{"output"};
  rd.only(j, path,
          {"directory", "stem", "vtk", "dump", "delimiter", "light_threshold", "decay_fraction", "residual_trials",
           "far_shell", "oracle_samples"});
  OutputConfig o;
  if (const auto dir = rd.string(j, path, "directory")) o.directory = *dir;
  if (const auto stem = rd.string(j, path, "stem")) {
    if (stem->empty() || stem->find('/') != std::string::npos) rd.fail(at(path, "stem"), "must be a plain file name");
    o.stem = *stem;
  }
  o.vtk = rd.boolean(j, path, "vtk", o.vtk);
  o.dump = rd.boolean(j, path, "dump", o.dump);
  if (const auto delim = rd.string(j, path, "delimiter")) {
    if (delim->size() != 1) rd.fail(at(path, "delimiter"), "expected a single character");
    o.delimiter = delim->front();
  }
  o.light_threshold = rd.number(j, path, "light_threshold", o.light_threshold);
  if (!(o.light_threshold > 0.0 && o.light_threshold < 0.1)) rd.fail(at(path, "light_threshold"), "must lie in (0, 0.1)");
  o.decay_fraction = rd.number(j, path, "decay_fraction", o.decay_fraction);
  if (!(o.decay_fraction > 0.0 && o.decay_fraction <= 1.0)) rd.fail(at(path, "decay_fraction"), "must lie in (0, 1]");
  o.residual_trials = rd.integer(j, path, "residual_trials", o.residual_trials);
  if (o.residual_trials < 0) rd.fail(at(path, "residual_trials"), "must be non-negative");
  o.far_shell = rd.number(j, path, "far_shell", o.far_shell);
  if (!(o.far_shell >= 0.0)) rd.fail(at(path, "far_shell"), "must be non-negative");
  o.oracle_samples = rd.integer(j, path, "oracle_samples", o.oracle_samples);
  if (o.oracle_samples < 2) rd.fail(at(path, "oracle_samples"), "must be at least 2");
  out = {{"directory", o.directory.string()},
         {"stem", o.stem},
         {"vtk", o.vtk},
         {"dump", o.dump},
         {"delimiter", std::string(1, o.delimiter)},
         {"light_threshold", o.light_threshold},
         {"decay_fraction", o.decay_fraction},
         {"residual_trials", o.residual_trials},
         {"far_shell", o.far_shell},
         {"oracle_samples", o.oracle_samples}};
  return o;
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source) {
  const Reader rd(text, source);
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << line_of(text, e.byte > 0 ? e.byte - 1 : 0) << ": syntax error: " << e.what();
    throw Error(ErrorCode::ConfigInvalid, msg.str());
  }
  rd.only(root, {}, {"mode", "domain", "boundary", "curvature", "solver", "output"});

  RunConfig cfg;
  if (const auto mode = rd.string(root, {}, "mode")) {
    try {
      cfg.mode = parse_run_mode(*mode);
    } catch (const Error& e) {
      rd.fail({"mode"}, e.what());
    }
  }
  if (!root.contains("domain")) rd.fail({"domain"}, "required section is missing");
  if (!root.contains("boundary")) rd.fail({"boundary"}, "required section is missing");
  const json empty = json::object();
  json out_domain, out_boundary, out_curvature, out_solver, out_output;
  cfg.domain = read_domain(rd, root.at("domain"), out_domain);
  cfg.phi = read_boundary(rd, root.at("boundary"), cfg.domain, cfg.boundary, out_boundary);
  cfg.curvature = read_curvature(rd, root.contains("curvature") ? root.at("curvature") : empty, cfg.domain.dimension,
                                 out_curvature);
  cfg.solver = read_solver(rd, root.contains("solver") ? root.at("solver") : empty, out_solver);
  cfg.output = read_output(rd, root.contains("output") ? root.at("output") : empty, out_output);
  cfg.resolved = {{"mode", std::string(to_string(cfg.mode))},
                  {"domain", out_domain},
                  {"boundary", out_boundary},
                  {"curvature", out_curvature},
                  {"solver", out_solver},
                  {"output", out_output}};
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace pmc
