#include "dilute/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dilute/errors.hpp"

namespace dilute {

using nlohmann::json;

namespace {

// Reads an object's fields by name; finish() rejects whatever was not read.
class Fields {
 public:
  Fields(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  std::string path(const std::string& key) const { return ctx_.empty() ? key : ctx_ + "." + key; }

  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(path(key) + ": required field missing");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path(key) + ": must be >= 0");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(path(it.key()) + ": unknown key");
  }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> used_;
};

// Re-throws a validation error with the enclosing field path prepended.
template <typename Fn>
auto scoped(const std::string& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    if (ctx.empty()) throw;
    throw ConfigError(ctx + "." + e.what());
  }
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) throw ConfigError(ctx + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw ConfigError(ctx + ": expected a non-empty array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(ctx + ": rows must all have the same length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ConfigError(ctx + ": entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

GeometryOptions geometry_from_json(const json& j) {
  Fields f(j, "geometry");
  GeometryOptions g;
  const std::string method = f.get_or<std::string>("method", "montecarlo");
  if (method == "montecarlo") g.method = GeometryOptions::Method::montecarlo;
  else if (method == "raster") g.method = GeometryOptions::Method::raster;
  else throw ConfigError("geometry.method: expected montecarlo or raster");
  g.probes = f.get_or<std::int64_t>("probes", g.probes);
  g.raster_n = f.get_or<int>("raster_n", g.raster_n);
  if (g.probes < 1) throw ConfigError("geometry.probes: must be >= 1");
  if (g.raster_n < 8) throw ConfigError("geometry.raster_n: must be >= 8");
  f.finish();
  return g;
}

int dimension_field(Fields& f) {
  const int d = f.get_or<int>("d", 2);
  if (d != 2 && d != 3) throw ConfigError(f.path("d") + ": must be 2 or 3");
  return d;
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

ProcessSpec process_from_json(const json& j) {
  Fields f(j, "process");
  const std::string kind = f.get_or<std::string>("kind", "poisson");
  ProcessSpec out;
  if (kind == "poisson") {
    out = PoissonProcess{f.get<double>("lambda")};
  } else if (kind == "matern2") {
    out = MaternIIProcess{f.get<double>("lambda_parent"), f.get_or<double>("r_hard", 4.0)};
  } else if (kind == "jittered_lattice") {
    out = JitteredLatticeProcess{f.get<double>("spacing"), f.get_or<double>("jitter", 0.0)};
  } else {
    throw ConfigError("process.kind: expected poisson, matern2 or jittered_lattice");
  }
  f.finish();
  scoped("process", [&] { validate_process(out); return 0; });
  return out;
}

json process_to_json(const ProcessSpec& process) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PoissonProcess>) return {{"kind", "poisson"}, {"lambda", p.lambda}};
        else if constexpr (std::is_same_v<P, MaternIIProcess>)
          return {{"kind", "matern2"}, {"lambda_parent", p.lambda_parent}, {"r_hard", p.r_hard}};
        else return {{"kind", "jittered_lattice"}, {"spacing", p.spacing}, {"jitter", p.jitter}};
      },
      process);
}

PhaseModel phases_from_json(const json& j, int d) {
  Fields f(j, "phases");
  PhaseModel out;
  const bool scalar = f.has("alpha") || f.has("beta");
  const bool matrix = f.has("A1") || f.has("A2");
  if (scalar == matrix) throw ConfigError("phases: give either alpha/beta or A1/A2");
  if (scalar) {
    const double alpha = f.get_or<double>("alpha", 1.0), beta = f.get_or<double>("beta", 2.0);
    if (!(alpha > 0.0)) throw ConfigError("phases.alpha: must be > 0");
    if (!(beta > 0.0)) throw ConfigError("phases.beta: must be > 0");
    out = PhaseModel::from_scalars(alpha, beta, d);
  } else {
    out = PhaseModel::from_matrices(matrix_from_json(f.raw("A1"), "phases.A1"),
                                    matrix_from_json(f.raw("A2"), "phases.A2"));
    if (out.dim() != d) throw ConfigError("phases: matrix size must equal d");
  }
  f.finish();
  return out;
}

json phases_to_json(const PhaseModel& phases) {
  if (phases.isotropic) return {{"alpha", phases.isotropic->alpha}, {"beta", phases.isotropic->beta}};
  return {{"A1", matrix_to_json(phases.A1)}, {"A2", matrix_to_json(phases.A2)}};
}

SolverConfig solver_from_json(const json& j) {
  Fields f(j, "solver");
  SolverConfig c;
  if (f.has("scheme")) c.scheme = scoped("solver", [&] { return parse_scheme(f.get<std::string>("scheme")); });
  c.alpha0 = f.get_or<double>("alpha0", c.alpha0);
  c.tol = f.get_or<double>("tol", c.tol);
  c.max_iter = f.get_or<int>("max_iter", c.max_iter);
  c.threads = f.get_or<int>("threads", c.threads);
  f.finish();
  scoped("solver", [&] { c.validate(); return 0; });
  return c;
}

json solver_to_json(const SolverConfig& c) {
  return {{"scheme", scheme_name(c.scheme)},
          {"alpha0", c.alpha0},
          {"tol", c.tol},
          {"max_iter", c.max_iter},
          {"threads", c.threads}};
}

namespace {

SweepConfig sweep_fields(Fields& f) {
  SweepConfig c;
  c.process = f.get_or<std::string>("process", c.process);
  if (!f.has("intensities")) throw ConfigError("intensities: required field missing");
  c.intensities = f.get<std::vector<double>>("intensities");
  c.r_hard = f.get_or<double>("r_hard", c.r_hard);
  c.jitter = f.get_or<double>("jitter", c.jitter);
  c.d = dimension_field(f);
  if (!f.has("levels")) throw ConfigError("levels: required field missing");
  const json& levels = f.raw("levels");
  if (!levels.is_array()) throw ConfigError("levels: expected an array of {L, N} objects");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    Fields lf(levels[i], "levels[" + std::to_string(i) + "]");
    ResolutionLevel lv;
    lv.L = lf.get<double>("L");
    const json& n = lf.raw("N");
    if (n.is_number_integer()) lv.N = {n.get<int>()};
    else lv.N = lf.get<std::vector<int>>("N");
    lf.finish();
    c.levels.push_back(lv);
  }
  c.ensemble_size = f.get_or<int>("ensemble_size", c.ensemble_size);
  c.phases = f.has("phases") ? phases_from_json(f.raw("phases"), c.d) : PhaseModel::from_scalars(1.0, 2.0, c.d);
  if (f.has("hatA2")) c.hatA2 = matrix_from_json(f.raw("hatA2"), "hatA2");
  if (f.has("solver")) c.solver = solver_from_json(f.raw("solver"));
  c.seed = f.get_or<std::uint64_t>("seed", c.seed);
  c.contact_scale = f.get_or<double>("contact_scale", c.contact_scale);
  c.lambda2_bin = f.get_or<double>("lambda2_bin", c.lambda2_bin);
  if (c.contact_scale < 0.0) throw ConfigError("contact_scale: must be >= 0");
  if (!(c.lambda2_bin > 0.0)) throw ConfigError("lambda2_bin: must be > 0");
  c.validate();
  return c;
}

}  // namespace

SweepConfig sweep_from_json(const json& j) {
  Fields f(j, "");
  SweepConfig c = sweep_fields(f);
  f.finish();
  return c;
}

json sweep_to_json(const SweepConfig& c) {
  json levels = json::array();
  for (const auto& lv : c.levels) levels.push_back({{"L", lv.L}, {"N", lv.N}});
  json out = {{"process", c.process},
              {"intensities", c.intensities},
              {"r_hard", c.r_hard},
              {"jitter", c.jitter},
              {"d", c.d},
              {"levels", levels},
              {"ensemble_size", c.ensemble_size},
              {"phases", phases_to_json(c.phases)},
              {"solver", solver_to_json(c.solver)},
              {"seed", c.seed},
              {"contact_scale", c.contact_scale},
              {"lambda2_bin", c.lambda2_bin}};
  if (c.hatA2) out["hatA2"] = matrix_to_json(*c.hatA2);
  return out;
}

SampleRun sample_run_from_json(const json& j) {
  Fields f(j, "");
  SampleRun r;
  if (f.has("process")) r.process = process_from_json(f.raw("process"));
  r.d = dimension_field(f);
  r.L = f.get_or<double>("L", r.L);
  r.seed = f.get_or<std::uint64_t>("seed", r.seed);
  r.count = f.get_or<int>("count", r.count);
  r.output = f.get_or<std::string>("output", r.output);
  if (f.has("geometry")) r.geometry = geometry_from_json(f.raw("geometry"));
  r.verbosity = f.get_or<int>("verbosity", r.verbosity);
  f.finish();
  scoped("", [&] { TorusSpec{r.d, r.L}.validate(); return 0; });
  if (r.count < 1) throw ConfigError("count: must be >= 1");
  if (r.output.empty()) throw ConfigError("output: must not be empty");
  return r;
}

SolveRun solve_run_from_json(const json& j) {
  Fields f(j, "");
  SolveRun r;
  r.input = f.get_or<std::string>("input", r.input);
  if (f.has("process")) r.process = process_from_json(f.raw("process"));
  r.fixture = f.get_or<std::string>("fixture", r.fixture);
  r.laminate_axis = f.get_or<int>("laminate_axis", r.laminate_axis);
  r.laminate_period = f.get_or<int>("laminate_period", r.laminate_period);
  r.d = dimension_field(f);
  r.L = f.get_or<double>("L", r.L);
  r.seed = f.get_or<std::uint64_t>("seed", r.seed);
  r.N = f.get_or<int>("N", r.N);
  r.phases = f.has("phases") ? phases_from_json(f.raw("phases"), r.d) : PhaseModel::from_scalars(1.0, 2.0, r.d);
  if (f.has("solver")) r.solver = solver_from_json(f.raw("solver"));
  r.output = f.get_or<std::string>("output", r.output);
  r.fields = f.get_or<std::string>("fields", r.fields);
  r.verbosity = f.get_or<int>("verbosity", r.verbosity);
  f.finish();
  const int sources = !r.input.empty() + r.process.has_value() + !r.fixture.empty();
  if (sources != 1) throw ConfigError("input: give exactly one of input, process or fixture");
  if (!r.fixture.empty() && r.fixture != "homogeneous" && r.fixture != "laminate")
    throw ConfigError("fixture: expected homogeneous or laminate");
  if (r.input.empty()) scoped("", [&] { TorusSpec{r.d, r.L}.validate(); return 0; });
  if (r.output.empty()) throw ConfigError("output: must not be empty");
  return r;
}

SweepRun sweep_run_from_json(const json& j) {
  Fields f(j, "");
  SweepRun r;
  r.output = f.get_or<std::string>("output", r.output);
  r.checkpoint = f.get_or<std::string>("checkpoint", r.checkpoint);
  r.verbosity = f.get_or<int>("verbosity", r.verbosity);
  r.sweep = sweep_fields(f);
  f.finish();
  if (r.output.empty()) throw ConfigError("output: must not be empty");
  if (r.checkpoint.empty()) r.checkpoint = r.output + ".checkpoint.jsonl";
  return r;
}

}  // namespace dilute
