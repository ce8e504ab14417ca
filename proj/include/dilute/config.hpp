#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "dilute/corrector.hpp"
#include "dilute/dilute_experiment.hpp"
#include "dilute/microstructure.hpp"
#include "dilute/phase_model.hpp"
#include "dilute/point_process.hpp"

namespace dilute {

/// Parses JSON text; syntax errors become ConfigError with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json load_json_file(const std::string& path);  ///< IoError when unreadable

// Converters reject unknown keys and name the offending field in ConfigError.
ProcessSpec process_from_json(const nlohmann::json& j);
nlohmann::json process_to_json(const ProcessSpec& process);
PhaseModel phases_from_json(const nlohmann::json& j, int d);
nlohmann::json phases_to_json(const PhaseModel& phases);
SolverConfig solver_from_json(const nlohmann::json& j);
nlohmann::json solver_to_json(const SolverConfig& cfg);
SweepConfig sweep_from_json(const nlohmann::json& j);
nlohmann::json sweep_to_json(const SweepConfig& cfg);

/// `sample` subcommand.
struct SampleRun {
  ProcessSpec process = PoissonProcess{0.01};
  int d = 2;
  double L = 64.0;
  std::uint64_t seed = 1;
  int count = 1;  ///< independent samples, streams 0..count-1
  std::string output = "sample";  ///< prefix: <output>.txt / <output>_<k>.txt plus .geometry
  GeometryOptions geometry;
  int verbosity = 0;
};

/// `solve` subcommand: an inclusion sample (file or inline process) or a
/// synthetic fixture rasterized at N cells per side.
struct SolveRun {
  std::string input;                    ///< sample file; empty = use process/fixture
  std::optional<ProcessSpec> process;   ///< inline sample
  std::string fixture;                  ///< "", "homogeneous" or "laminate"
  int laminate_axis = 0;
  int laminate_period = 2;
  int d = 2;
  double L = 64.0;
  std::uint64_t seed = 1;
  int N = 256;
  PhaseModel phases = PhaseModel::from_scalars(1.0, 2.0, 2);
  SolverConfig solver;
  std::string output = "solve.json";
  std::string fields;  ///< prefix for gradient dumps; empty = none
  int verbosity = 0;
};

/// `sweep` subcommand.
struct SweepRun {
  SweepConfig sweep;
  std::string output = "sweep";  ///< <output>.csv / .json / _gap.csv / _*.svg
  std::string checkpoint;        ///< default <output>.checkpoint.jsonl
  int verbosity = 0;
};

SampleRun sample_run_from_json(const nlohmann::json& j);
SolveRun solve_run_from_json(const nlohmann::json& j);
SweepRun sweep_run_from_json(const nlohmann::json& j);

}  // namespace dilute
