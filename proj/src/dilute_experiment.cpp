#include "dilute/dilute_experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include <Eigen/SVD>

#include "dilute/errors.hpp"
#include "dilute/grid_field.hpp"
#include "dilute/microstructure.hpp"
#include "dilute/parallel.hpp"
#include "dilute/report_io.hpp"
#include "dilute/richardson.hpp"
#include "dilute/rng.hpp"
#include "dilute/single_inclusion.hpp"

namespace dilute {

void SweepConfig::validate() const {
  if (process != "poisson" && process != "matern2" && process != "jittered_lattice")
    throw ConfigError("process: expected poisson, matern2 or jittered_lattice");
  if (d != 2 && d != 3) throw ConfigError("d: must be 2 or 3");
  if (intensities.empty()) throw ConfigError("intensities: at least one intensity required");
  for (std::size_t i = 0; i < intensities.size(); ++i) {
    if (!(intensities[i] > 0.0)) throw ConfigError("intensities: values must be > 0");
    if (i && !(intensities[i] > intensities[i - 1]))
      throw ConfigError("intensities: grid must be strictly increasing");
  }
  if (ensemble_size < 1) throw ConfigError("ensemble_size: must be >= 1");
  if (levels.empty()) throw ConfigError("levels: at least one (L, N) level required");
  std::size_t combos = 0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const auto& lv = levels[j];
    TorusSpec{d, lv.L}.validate();
    if (j && !(lv.L > levels[j - 1].L)) throw ConfigError("levels: torus sizes must be strictly increasing");
    if (lv.N.empty()) throw ConfigError("levels: every torus size needs at least one resolution");
    for (std::size_t r = 0; r < lv.N.size(); ++r) {
      if (lv.N[r] < kMinGridCells || lv.N[r] % 2 != 0) throw ConfigError("levels: N must be even and >= 64");
      if (lv.L / lv.N[r] > kMaxGridStep) throw ConfigError("levels: resolution guard violated, need L/N <= 1/4");
      if (r && !(lv.N[r] > lv.N[r - 1])) throw ConfigError("levels: resolutions must be strictly increasing");
    }
    combos += lv.N.size();
  }
  if (combos < 2) throw ConfigError("levels: at least two (L, N) combinations are needed for extrapolation");
  if (phases.dim() != d) throw ConfigError("phases: matrix size must equal d");
  if (!phases.isotropic && hatA2 && (hatA2->rows() != d || hatA2->cols() != d))
    throw ConfigError("hatA2: must be a d x d matrix");
  solver.validate();
  for (std::size_t i = 0; i < intensities.size(); ++i) validate_process(process_at(i));
}

ProcessSpec SweepConfig::process_at(std::size_t lambda_index) const {
  const double lambda = intensities.at(lambda_index);
  if (process == "poisson") return PoissonProcess{lambda};
  if (process == "matern2") return MaternIIProcess{lambda, r_hard};
  return JitteredLatticeProcess{std::pow(lambda, -1.0 / d), jitter};
}

std::uint64_t member_stream(const SweepConfig& cfg, std::size_t lambda_index, std::size_t level_index, int member) {
  return (static_cast<std::uint64_t>(lambda_index) * cfg.levels.size() + level_index) *
             static_cast<std::uint64_t>(cfg.ensemble_size) +
         static_cast<std::uint64_t>(member);
}

namespace {

PointSample member_sample(const SweepConfig& cfg, std::size_t li, std::size_t lj, int m) {
  const std::uint64_t seed = derive_seed(cfg.seed, member_stream(cfg, li, lj, m));
  return sample_process(cfg.process_at(li), TorusSpec{cfg.d, cfg.levels[lj].L}, seed);
}

}  // namespace

MemberRecord run_member(const SweepConfig& cfg, std::size_t lambda_index, std::size_t level_index, int member) {
  MemberRecord rec;
  rec.lambda_index = lambda_index;
  rec.level_index = level_index;
  rec.member = member;
  rec.stream = member_stream(cfg, lambda_index, level_index, member);
  rec.seed = derive_seed(cfg.seed, rec.stream);
  const PointSample sample = member_sample(cfg, lambda_index, level_index, member);
  rec.points = static_cast<std::size_t>(sample.size());
  SolverConfig solver = cfg.solver;
  solver.keep_fields = false;
  try {
    for (int N : cfg.levels[level_index].N) {
      const GridField field = rasterize(sample, cfg.phases, N);
      const CorrectorSolution sol = effective_tensor(field, solver);
      rec.phi.push_back(field.inclusion_fraction());
      rec.abar.push_back(sol.Abar);
      int its = 0;
      for (const auto& dir : sol.directions) its += dir.iterations;
      rec.iterations.push_back(its);
    }
  } catch (const NonConvergenceError& err) {
    rec.failed = true;
    rec.error = err.what();
    rec.phi.clear();
    rec.abar.clear();
    rec.iterations.clear();
  }
  return rec;
}

std::string row_kind_name(RowKind kind) {
  switch (kind) {
    case RowKind::raw: return "raw";
    case RowKind::n_extrapolated: return "n_extrapolated";
    case RowKind::l_extrapolated: return "l_extrapolated";
  }
  return "raw";
}

RowKind parse_row_kind(const std::string& name) {
  if (name == "raw") return RowKind::raw;
  if (name == "n_extrapolated") return RowKind::n_extrapolated;
  if (name == "l_extrapolated") return RowKind::l_extrapolated;
  throw ConfigError("unknown row kind '" + name + "'");
}

namespace {

double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

struct Moments {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd se;
};

Moments moments(const std::vector<Eigen::MatrixXd>& xs) {
  const auto n = static_cast<double>(xs.size());
  Moments out{Eigen::MatrixXd::Zero(xs.front().rows(), xs.front().cols()), {}};
  for (const auto& x : xs) out.mean += x;
  out.mean /= n;
  out.se = Eigen::MatrixXd::Zero(out.mean.rows(), out.mean.cols());
  if (xs.size() < 2) return out;
  for (const auto& x : xs) out.se += (x - out.mean).cwiseAbs2();
  out.se = (out.se / (n - 1.0) / n).cwiseSqrt();
  return out;
}

Eigen::MatrixXd scalar_matrix(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

// Per-member quantities at one resolution (or one extrapolated resolution).
struct MemberValues {
  std::vector<Eigen::MatrixXd> abar, gap, phi;
};

void finish_row(ReportRow& row, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& hatA2) {
  row.cm = A1 + row.phi * hatA2;
  row.eps = operator_norm(row.gap);
  row.eps_se = row.gap_se.norm();
  row.above_noise = row.eps > 3.0 * row.eps_se;
}

ReportRow row_from_members(const MemberValues& v, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& hatA2) {
  ReportRow row;
  const Moments ab = moments(v.abar), gp = moments(v.gap), ph = moments(v.phi);
  row.abar = ab.mean;
  row.abar_se = ab.se;
  row.gap = gp.mean;
  row.gap_se = gp.se;
  row.phi = ph.mean(0, 0);
  row.phi_se = ph.se(0, 0);
  row.members = static_cast<int>(v.abar.size());
  finish_row(row, A1, hatA2);
  return row;
}

}  // namespace

std::vector<ReportRow> aggregate(const SweepConfig& cfg, const Eigen::MatrixXd& hatA2,
                                 const std::vector<MemberRecord>& records) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const MemberRecord*>> groups;
  for (const auto& r : records) groups[{r.lambda_index, r.level_index}].push_back(&r);
  for (auto& [key, g] : groups)
    std::sort(g.begin(), g.end(), [](const auto* a, const auto* b) { return a->member < b->member; });

  const Eigen::MatrixXd& A1 = cfg.phases.A1;
  std::vector<ReportRow> rows;
  for (std::size_t li = 0; li < cfg.intensities.size(); ++li) {
    const ProcessSpec process = cfg.process_at(li);
    const double lambda = process_intensity(process, cfg.d);
    std::vector<ReportRow> best;  // per level
    for (std::size_t lj = 0; lj < cfg.levels.size(); ++lj) {
      const auto it = groups.find({li, lj});
      if (it == groups.end()) continue;
      const auto& level = cfg.levels[lj];
      std::vector<const MemberRecord*> ok;
      int failed = 0;
      for (const auto* r : it->second) {
        if (r->failed) ++failed;
        else ok.push_back(r);
      }

      std::optional<double> lambda2 = analytic_lambda2(process, cfg.d);
      std::string source = "analytic";
      if (!lambda2) {
        std::vector<PointSample> samples;
        for (const auto* r : it->second) samples.push_back(member_sample(cfg, li, lj, r->member));
        double ell = cfg.contact_scale;
        if (!(ell > 0.0)) {
          if (auto m = analytic_min_length(process)) ell = *m;
          else if (const auto* mp = std::get_if<MaternIIProcess>(&process)) ell = mp->r_hard / std::sqrt(double(cfg.d));
        }
        Lambda2Options opts;
        opts.bin_width = cfg.lambda2_bin;
        lambda2 = estimate_lambda2(samples, ell, opts).value;
        source = "estimated";
      }

      auto stamp = [&](ReportRow& row, RowKind kind, int N) {
        row.kind = kind;
        row.lambda_index = li;
        row.lambda = lambda;
        row.L = level.L;
        row.N = N;
        row.h = N > 0 ? level.L / N : 0.0;
        row.failed = failed;
        row.stream_first = member_stream(cfg, li, lj, 0);
        row.stream_last = member_stream(cfg, li, lj, cfg.ensemble_size - 1);
        row.lambda2 = lambda2;
        row.lambda2_source = source;
      };

      if (ok.empty()) continue;
      std::vector<MemberValues> per_res(level.N.size());
      for (std::size_t r = 0; r < level.N.size(); ++r) {
        for (const auto* m : ok) {
          per_res[r].abar.push_back(m->abar[r]);
          per_res[r].gap.push_back(m->abar[r] - A1 - m->phi[r] * hatA2);
          per_res[r].phi.push_back(scalar_matrix(m->phi[r]));
        }
        ReportRow row = row_from_members(per_res[r], A1, hatA2);
        stamp(row, RowKind::raw, level.N[r]);
        rows.push_back(row);
      }
      ReportRow level_best = rows.back();
      if (level.N.size() >= 2) {
        const std::size_t a = level.N.size() - 2, b = level.N.size() - 1;
        const double ha = level.L / level.N[a], hb = level.L / level.N[b];
        MemberValues ext;
        for (std::size_t k = 0; k < ok.size(); ++k) {
          ext.abar.push_back(richardson_to_zero(ha, per_res[a].abar[k], hb, per_res[b].abar[k]));
          ext.gap.push_back(richardson_to_zero(ha, per_res[a].gap[k], hb, per_res[b].gap[k]));
          ext.phi.push_back(richardson_to_zero(ha, per_res[a].phi[k], hb, per_res[b].phi[k]));
        }
        ReportRow row = row_from_members(ext, A1, hatA2);
        stamp(row, RowKind::n_extrapolated, 0);
        rows.push_back(row);
        level_best = row;
      }
      best.push_back(level_best);
    }

    if (best.size() >= 2) {
      const ReportRow& p = best[best.size() - 2];
      const ReportRow& q = best.back();
      const double xp = std::pow(p.L, -cfg.d), xq = std::pow(q.L, -cfg.d);
      const double wq = xp / (xp - xq), wp = -xq / (xp - xq);
      auto combine_se = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) -> Eigen::MatrixXd {
        return (wp * wp * a.cwiseAbs2() + wq * wq * b.cwiseAbs2()).cwiseSqrt();
      };
      ReportRow row;
      row.kind = RowKind::l_extrapolated;
      row.lambda_index = li;
      row.lambda = lambda;
      row.L = std::numeric_limits<double>::infinity();
      row.N = 0;
      row.h = 0.0;
      row.members = p.members + q.members;
      row.failed = p.failed + q.failed;
      row.stream_first = std::min(p.stream_first, q.stream_first);
      row.stream_last = std::max(p.stream_last, q.stream_last);
      row.lambda2 = q.lambda2;
      row.lambda2_source = q.lambda2_source;
      row.abar = richardson_to_zero(xp, p.abar, xq, q.abar);
      row.abar_se = combine_se(p.abar_se, q.abar_se);
      row.gap = richardson_to_zero(xp, p.gap, xq, q.gap);
      row.gap_se = combine_se(p.gap_se, q.gap_se);
      row.phi = richardson_to_zero(xp, p.phi, xq, q.phi);
      row.phi_se = std::hypot(wp * p.phi_se, wq * q.phi_se);
      finish_row(row, A1, hatA2);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ReportRow> DiluteSweepReport::final_rows() const {
  std::vector<ReportRow> out;
  for (std::size_t li = 0; li < config.intensities.size(); ++li) {
    const ReportRow* pick = nullptr;
    auto rank = [](const ReportRow& r) {
      return std::tuple{static_cast<int>(r.kind), r.L, r.N};
    };
    for (const auto& r : rows)
      if (r.lambda_index == li && (!pick || rank(r) > rank(*pick))) pick = &r;
    if (pick) out.push_back(*pick);
  }
  return out;
}

DiluteSweepReport run_sweep(const SweepConfig& cfg, const SweepOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  DiluteSweepReport report;
  report.config = cfg;
  if (cfg.phases.isotropic || cfg.hatA2) {
    report.hatA2 = hatA2_for(cfg.phases, cfg.hatA2 ? &*cfg.hatA2 : nullptr);
  } else {
    HatA2Options opts;
    opts.solver = cfg.solver;
    report.hatA2 = hatA2_numeric(cfg.phases.A1, cfg.phases.A2, opts).value;
  }

  std::map<std::uint64_t, MemberRecord> done;
  if (options.resume && !options.checkpoint.empty()) {
    std::ifstream in(options.checkpoint);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        MemberRecord r = member_from_json(nlohmann::json::parse(line));
        done[r.stream] = std::move(r);
      } catch (const nlohmann::json::exception&) {
        break;  // torn final line from an interrupted write
      }
    }
  }

  struct Job {
    std::size_t li, lj;
    int m;
  };
  std::vector<Job> jobs;
  for (std::size_t li = 0; li < cfg.intensities.size(); ++li)
    for (std::size_t lj = 0; lj < cfg.levels.size(); ++lj)
      for (int m = 0; m < cfg.ensemble_size; ++m)
        if (!done.count(member_stream(cfg, li, lj, m))) jobs.push_back({li, lj, m});

  std::ofstream checkpoint;
  if (!options.checkpoint.empty()) {
    if (!options.resume) std::ofstream(options.checkpoint, std::ios::trunc);
    checkpoint.open(options.checkpoint, std::ios::app);
    if (!checkpoint) throw IoError("cannot write checkpoint " + options.checkpoint);
  }

  const int workers = options.workers > 0 ? options.workers : worker_count();
  SweepConfig run_cfg = cfg;
  if (workers > 1) run_cfg.solver.threads = 1;
  std::mutex mutex;
  long computed = 0;
  bool interrupted = false;
  parallel_tasks(jobs.size(), workers, [&](std::size_t k) {
    {
      std::lock_guard lock(mutex);
      if (options.stop_after >= 0 && computed >= options.stop_after) {
        interrupted = true;
        return;
      }
      ++computed;
    }
    MemberRecord rec = run_member(run_cfg, jobs[k].li, jobs[k].lj, jobs[k].m);
    std::lock_guard lock(mutex);
    if (checkpoint.is_open()) checkpoint << member_to_json(rec).dump() << '\n' << std::flush;
    done[rec.stream] = std::move(rec);
  });
  if (interrupted) throw std::runtime_error("sweep interrupted after " + std::to_string(computed) + " members");

  std::size_t failures = 0;
  for (auto& [stream, rec] : done) {
    failures += rec.failed;
    report.records.push_back(std::move(rec));
  }
  if (!report.records.empty() && failures * 5 > report.records.size())
    throw std::runtime_error("sweep: more than 20% of the ensemble members failed to converge");
  report.rows = aggregate(cfg, report.hatA2, report.records);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double lambda2_log_abscissa(double lambda2) { return lambda2 * std::abs(std::log(lambda2)); }

ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  ScalingFit fit;
  fit.points = static_cast<int>(x.size());
  if (x.size() != y.size() || x.size() < 2) {
    fit.status = "inconclusive";
    return fit;
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      fit.status = "inconclusive";
      return fit;
    }
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx, dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    fit.status = "inconclusive";
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.constant = std::exp(my - fit.slope * mx);
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.status = "ok";
  return fit;
}

namespace {

ScalingFit fit_final(const DiluteSweepReport& report, bool against_lambda2) {
  std::vector<double> x, y;
  for (const auto& row : report.final_rows()) {
    if (!row.above_noise) continue;
    if (against_lambda2) {
      if (!row.lambda2 || !(*row.lambda2 > 0.0) || !(*row.lambda2 < 1.0)) continue;
      x.push_back(lambda2_log_abscissa(*row.lambda2));
    } else {
      x.push_back(row.phi);
    }
    y.push_back(row.eps);
  }
  if (x.size() < 3) {
    ScalingFit fit;
    fit.status = "inconclusive";
    fit.points = static_cast<int>(x.size());
    return fit;
  }
  return fit_power_law(x, y);
}

}  // namespace

ScalingFit fit_error_scaling(const DiluteSweepReport& report) { return fit_final(report, true); }

ScalingFit fit_phi_exponent(const DiluteSweepReport& report) { return fit_final(report, false); }

GapTable cm_gap_table(const DiluteSweepReport& report) {
  GapTable t;
  std::ostringstream csv, text;
  csv << "lambda,phi,abar_11,cm_11,eps,eps_over_l2log\n";
  text << std::left << std::setw(14) << "lambda" << std::setw(14) << "phi" << std::setw(16) << "abar_11"
       << std::setw(16) << "cm_11" << std::setw(14) << "eps" << "eps/(l2|log l2|)\n";
  csv << std::setprecision(17);
  for (const auto& row : report.final_rows()) {
    const double ratio = row.lambda2 && *row.lambda2 > 0.0 && *row.lambda2 < 1.0
                             ? row.eps / lambda2_log_abscissa(*row.lambda2)
                             : std::numeric_limits<double>::quiet_NaN();
    csv << row.lambda << ',' << row.phi << ',' << row.abar(0, 0) << ',' << row.cm(0, 0) << ',' << row.eps << ','
        << ratio << '\n';
    text << std::setprecision(6) << std::left << std::setw(14) << row.lambda << std::setw(14) << row.phi
         << std::setprecision(10) << std::setw(16) << row.abar(0, 0) << std::setw(16) << row.cm(0, 0)
         << std::setprecision(4) << std::setw(14) << row.eps << ratio << '\n';
  }
  t.csv = csv.str();
  t.text = text.str();
  return t;
}

}  // namespace dilute
