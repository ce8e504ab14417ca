// Batch front end: sample | solve | sweep | plot.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dilute/config.hpp"
#include "dilute/corrector.hpp"
#include "dilute/dilute_experiment.hpp"
#include "dilute/errors.hpp"
#include "dilute/grid_field.hpp"
#include "dilute/microstructure.hpp"
#include "dilute/parallel.hpp"
#include "dilute/report_io.hpp"
#include "dilute/rng.hpp"
#include "dilute/svg_plot.hpp"

using namespace dilute;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kIo = 2, kNonConvergence = 3, kInterrupted = 130 };

struct Common {
  std::string config;
  int threads = 0;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON configuration file");
  cmd->add_option("--threads", c.threads, "worker threads (default: $DILUTE_HOMOG_THREADS, else all cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("-v,--verbose", c.verbosity, "more progress output on stderr");
}

json base_config(const Common& c) { return c.config.empty() ? json::object() : load_json_file(c.config); }

void apply_threads(const Common& c) {
  if (c.threads > 0) set_worker_count(c.threads);
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// process flags shared by sample and solve
struct ProcessFlags {
  std::optional<std::string> kind;
  std::optional<double> lambda, lambda_parent, r_hard, spacing, jitter;

  void add(CLI::App* cmd) {
    cmd->add_option("--process", kind, "poisson | matern2 | jittered_lattice");
    cmd->add_option("--lambda", lambda, "Poisson intensity");
    cmd->add_option("--lambda-parent", lambda_parent, "Matern II parent intensity");
    cmd->add_option("--r-hard", r_hard, "Matern II hardcore distance");
    cmd->add_option("--spacing", spacing, "lattice spacing");
    cmd->add_option("--jitter", jitter, "lattice jitter amplitude");
  }

  bool any() const { return kind || lambda || lambda_parent || r_hard || spacing || jitter; }

  void apply(json& j) const {
    if (!any()) return;
    json& p = j["process"];
    if (!p.is_object()) p = json::object();
    put(p, "kind", kind);
    put(p, "lambda", lambda);
    put(p, "lambda_parent", lambda_parent);
    put(p, "r_hard", r_hard);
    put(p, "spacing", spacing);
    put(p, "jitter", jitter);
  }
};

int cmd_sample(const Common& common, const json& cfg_json) {
  const SampleRun run = sample_run_from_json(cfg_json);
  apply_threads(common);
  const TorusSpec torus{run.d, run.L};
  std::vector<PointSample> samples;
  std::ostringstream table;
  table << "sample," << geometry_csv_header() << '\n';
  bool consistent = true;
  for (int k = 0; k < run.count; ++k) {
    const PointSample s = sample_process(run.process, torus, derive_seed(run.seed, static_cast<std::uint64_t>(k)));
    const std::string stem = run.count == 1 ? run.output : run.output + "_" + std::to_string(k);
    save_sample(stem + ".txt", s);
    const GeometryReport g = geometry_report(s, run.geometry);
    std::ostringstream text;
    write_geometry_report(text, g);
    write_text(stem + ".geometry.txt", text.str());
    table << k << ',' << geometry_csv_row(g) << '\n';
    consistent = consistent && g.singleton_rho_consistent();
    if (run.verbosity || common.verbosity)
      std::cerr << stem << ".txt: " << s.size() << " points, phi = " << g.volume_fraction << '\n';
    samples.push_back(s);
  }
  write_text(run.output + "_geometry.csv", table.str());
  std::cout << "wrote " << run.count << " sample(s) with prefix " << run.output << '\n';
  if (run.count >= 2) {
    const auto est = estimate_lambda2(samples, analytic_min_length(run.process).value_or(0.0));
    std::cout << "lambda2_estimate = " << est.value << " (sigma " << est.sigma << ")\n";
  }
  std::cout << "singleton_iff_rho_ge_2 = " << (consistent ? "true" : "false") << '\n';
  return kOk;
}

GridField solve_field(const SolveRun& run, PointSample* inclusions) {
  if (!run.input.empty()) {
    *inclusions = load_sample(run.input);
    return rasterize(*inclusions, run.phases, run.N);
  }
  const TorusSpec torus{run.d, run.L};
  if (run.process) {
    *inclusions = sample_process(*run.process, torus, run.seed);
    return rasterize(*inclusions, run.phases, run.N);
  }
  if (run.fixture == "laminate") return laminate(torus, run.N, run.phases, run.laminate_axis, run.laminate_period);
  inclusions->torus = torus;
  inclusions->centers.resize(run.d, 0);
  return rasterize(*inclusions, run.phases, run.N);
}

int cmd_solve(const Common& common, const json& cfg_json) {
  SolveRun run = solve_run_from_json(cfg_json);
  apply_threads(common);
  run.solver.threads = worker_count();
  PointSample inclusions;
  const GridField field = solve_field(run, &inclusions);
  SolverConfig solver = run.solver;
  solver.keep_fields = !run.fields.empty();
  json record;
  try {
    const CorrectorSolution sol = effective_tensor(field, solver);
    record = solve_record_json(sol);
    record["status"] = "converged";
    record["phi"] = field.inclusion_fraction();
    record["N"] = field.N;
    record["L"] = field.torus.L;
    write_text(run.output, dump(record));
    if (!run.fields.empty()) {
      save_grid_field(run.fields + "_phase.bin", field);
      for (std::size_t k = 0; k < sol.directions.size(); ++k)
        save_vector_field(run.fields + "_g" + std::to_string(k + 1) + ".bin", field, sol.directions[k].gradient);
    }
    std::cout << "Abar =\n" << matrix_csv(sol.Abar);
  } catch (const NonConvergenceError& e) {
    record = {{"status", "nonconvergence"},
              {"message", e.what()},
              {"scheme", scheme_name(solver.scheme)},
              {"alpha0", resolve_alpha0(solver, run.phases)},
              {"iterations", e.residuals().empty() ? 0 : e.residuals().size() - 1},
              {"final_residual", e.residuals().empty() ? 0.0 : e.residuals().back()},
              {"residual_history", e.residuals()}};
    write_text(run.output, dump(record));
    throw;
  }
  return kOk;
}

int cmd_sweep(const Common& common, const json& cfg_json, bool resume, bool plot, long stop_after) {
  const SweepRun run = sweep_run_from_json(cfg_json);
  apply_threads(common);
  SweepOptions opts;
  opts.checkpoint = run.checkpoint;
  opts.resume = resume;
  opts.workers = worker_count();
  opts.stop_after = stop_after;
  DiluteSweepReport report;
  try {
    report = run_sweep(run.sweep, opts);
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.rfind("sweep interrupted", 0) == 0) {
      std::cerr << what << "; rerun with --resume\n";
      std::exit(kInterrupted);
    }
    if (what.find("failed to converge") != std::string::npos) throw NonConvergenceError(what, {});
    throw;
  }
  std::ostringstream csv;
  write_report_csv(csv, report.rows, run.sweep.d);
  write_text(run.output + ".csv", csv.str());
  write_text(run.output + ".json", dump(report_to_json(report)));
  const GapTable gap = cm_gap_table(report);
  write_text(run.output + "_gap.csv", gap.csv);
  std::cout << gap.text;
  const ScalingFit fit = fit_error_scaling(report);
  std::cout << "error scaling fit: " << fit.status;
  if (fit.status == "ok") std::cout << ", slope " << fit.slope << ", constant " << fit.constant << ", R2 " << fit.r2;
  std::cout << '\n';
  if (plot) {
    write_text(run.output + "_error.svg", render_svg(error_scaling_plot(report)));
    write_text(run.output + "_cm.svg", render_svg(cm_plot(report)));
  }
  if (run.verbosity || common.verbosity) std::cerr << "sweep finished in " << report.seconds << " s\n";
  return kOk;
}

int cmd_plot(const std::string& input, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw IoError("cannot read " + input);
  DiluteSweepReport report;
  int d = 2;
  report.rows = read_report_csv(in, d);
  report.config.d = d;
  for (const auto& r : report.rows)
    if (r.lambda_index >= report.config.intensities.size()) report.config.intensities.push_back(r.lambda);
  write_text(output + "_error.svg", render_svg(error_scaling_plot(report)));
  write_text(output + "_cm.svg", render_svg(cm_plot(report)));
  std::cout << "wrote " << output << "_error.svg and " << output << "_cm.svg\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dilute-limit homogenization experiments on random spherical inclusions"};
  app.require_subcommand(1);

  Common sample_c, solve_c, sweep_c;
  ProcessFlags sample_p, solve_p;

  auto* sample = app.add_subcommand("sample", "draw point samples and geometry reports");
  add_common(sample, sample_c);
  sample_p.add(sample);
  std::optional<double> s_L;
  std::optional<int> s_d, s_count;
  std::optional<std::uint64_t> s_seed;
  std::optional<std::string> s_out;
  sample->add_option("--L", s_L, "torus side length");
  sample->add_option("--d", s_d, "dimension (2 or 3)");
  sample->add_option("--seed", s_seed, "seed base");
  sample->add_option("--count", s_count, "number of samples");
  sample->add_option("-o,--output", s_out, "output prefix");

  auto* solve = app.add_subcommand("solve", "effective tensor of one configuration");
  add_common(solve, solve_c);
  solve_p.add(solve);
  std::optional<std::string> v_input, v_fixture, v_out, v_fields, v_scheme;
  std::optional<double> v_L, v_alpha, v_beta, v_alpha0, v_tol;
  std::optional<int> v_d, v_N, v_axis, v_period, v_maxit;
  std::optional<std::uint64_t> v_seed;
  solve->add_option("--input", v_input, "point-sample file");
  solve->add_option("--fixture", v_fixture, "homogeneous | laminate");
  solve->add_option("--axis", v_axis, "laminate normal axis (0-based)");
  solve->add_option("--period", v_period, "laminate period in cells");
  solve->add_option("--L", v_L, "torus side length");
  solve->add_option("--d", v_d, "dimension");
  solve->add_option("--seed", v_seed, "seed for an inline process");
  solve->add_option("--N", v_N, "cells per side");
  solve->add_option("--alpha", v_alpha, "matrix conductivity");
  solve->add_option("--beta", v_beta, "inclusion conductivity");
  solve->add_option("--scheme", v_scheme, "fixed_point | conjugate_gradient");
  solve->add_option("--alpha0", v_alpha0, "reference conductivity");
  solve->add_option("--tol", v_tol, "residual tolerance");
  solve->add_option("--max-iter", v_maxit, "iteration cap");
  solve->add_option("-o,--output", v_out, "JSON record path");
  solve->add_option("--fields", v_fields, "prefix for gradient field dumps");

  auto* sweep = app.add_subcommand("sweep", "ensemble sweep over intensities");
  add_common(sweep, sweep_c);
  std::optional<std::uint64_t> w_seed;
  std::optional<int> w_M;
  std::optional<std::string> w_out, w_ckpt;
  bool w_resume = false, w_plot = false;
  long w_stop = -1;
  sweep->add_option("--seed", w_seed, "seed base");
  sweep->add_option("--M", w_M, "ensemble size");
  sweep->add_option("-o,--output", w_out, "output prefix");
  sweep->add_option("--checkpoint", w_ckpt, "checkpoint file (JSON lines)");
  sweep->add_flag("--resume", w_resume, "reuse completed members from the checkpoint");
  sweep->add_flag("--plot", w_plot, "also write SVG plots");
  sweep->add_option("--stop-after", w_stop, "stop after this many new members (resume testing)")->group("");

  auto* plot = app.add_subcommand("plot", "re-plot from a sweep CSV");
  std::string p_in, p_out;
  plot->add_option("-i,--input", p_in, "sweep CSV")->required();
  plot->add_option("-o,--output", p_out, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*sample) {
      json j = base_config(sample_c);
      sample_p.apply(j);
      put(j, "L", s_L);
      put(j, "d", s_d);
      put(j, "seed", s_seed);
      put(j, "count", s_count);
      put(j, "output", s_out);
      return cmd_sample(sample_c, j);
    }
    if (*solve) {
      json j = base_config(solve_c);
      solve_p.apply(j);
      put(j, "input", v_input);
      put(j, "fixture", v_fixture);
      put(j, "laminate_axis", v_axis);
      put(j, "laminate_period", v_period);
      put(j, "L", v_L);
      put(j, "d", v_d);
      put(j, "seed", v_seed);
      put(j, "N", v_N);
      if (v_alpha || v_beta) {
        json& p = j["phases"];
        if (!p.is_object()) p = json::object();
        put(p, "alpha", v_alpha);
        put(p, "beta", v_beta);
      }
      if (v_scheme || v_alpha0 || v_tol || v_maxit) {
        json& s = j["solver"];
        if (!s.is_object()) s = json::object();
        put(s, "scheme", v_scheme);
        put(s, "alpha0", v_alpha0);
        put(s, "tol", v_tol);
        put(s, "max_iter", v_maxit);
      }
      put(j, "output", v_out);
      put(j, "fields", v_fields);
      return cmd_solve(solve_c, j);
    }
    if (*sweep) {
      if (sweep_c.config.empty()) throw ConfigError("sweep: --config is required");
      json j = base_config(sweep_c);
      put(j, "seed", w_seed);
      put(j, "ensemble_size", w_M);
      put(j, "output", w_out);
      put(j, "checkpoint", w_ckpt);
      return cmd_sweep(sweep_c, j, w_resume, w_plot, w_stop);
    }
    return cmd_plot(p_in, p_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const NonConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
}
