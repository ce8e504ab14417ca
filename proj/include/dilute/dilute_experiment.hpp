#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dilute/corrector.hpp"
#include "dilute/phase_model.hpp"
#include "dilute/point_process.hpp"

namespace dilute {

/// One torus size with the grid resolutions solved on it (coarse to fine).
struct ResolutionLevel {
  double L = 128.0;
  std::vector<int> N;
};

struct SweepConfig {
  std::string process = "poisson";  ///< poisson | matern2 | jittered_lattice
  std::vector<double> intensities;  ///< λ (Matérn II: parent intensity)
  double r_hard = 4.0;              ///< matern2 only
  double jitter = 0.0;              ///< jittered_lattice only (spacing = λ^{-1/d})
  int d = 2;
  std::vector<ResolutionLevel> levels;
  int ensemble_size = 16;
  PhaseModel phases = PhaseModel::from_scalars(1.0, 2.0, 2);
  std::optional<Eigen::MatrixXd> hatA2;  ///< required for anisotropic phases
  SolverConfig solver;
  std::uint64_t seed = 1;
  double contact_scale = 0.0;  ///< ℓ override for λ̂₂; 0 = process default
  double lambda2_bin = 1.0;    ///< bin width when ℓ = 0

  void validate() const;
  ProcessSpec process_at(std::size_t lambda_index) const;
};

/// Solver output for one ensemble member at every resolution of its level.
struct MemberRecord {
  std::size_t lambda_index = 0;
  std::size_t level_index = 0;
  int member = 0;
  std::uint64_t stream = 0;
  std::uint64_t seed = 0;
  std::size_t points = 0;
  bool failed = false;
  std::string error;
  std::vector<double> phi;             ///< raster φ̂ per resolution
  std::vector<Eigen::MatrixXd> abar;   ///< Ā_R per resolution
  std::vector<int> iterations;         ///< summed over directions, per resolution
};

std::uint64_t member_stream(const SweepConfig& cfg, std::size_t lambda_index, std::size_t level_index, int member);

/// Samples, rasterizes and solves one member at every resolution.
MemberRecord run_member(const SweepConfig& cfg, std::size_t lambda_index, std::size_t level_index, int member);

enum class RowKind { raw, n_extrapolated, l_extrapolated };
std::string row_kind_name(RowKind kind);
RowKind parse_row_kind(const std::string& name);

struct ReportRow {
  RowKind kind = RowKind::raw;
  std::size_t lambda_index = 0;
  double lambda = 0.0;          ///< process intensity λ
  double L = 0.0;               ///< +inf for L-extrapolated rows
  int N = 0;                    ///< 0 for extrapolated rows
  double h = 0.0;               ///< 0 for extrapolated rows
  int members = 0;
  int failed = 0;
  std::uint64_t stream_first = 0;
  std::uint64_t stream_last = 0;
  double phi = 0.0;
  double phi_se = 0.0;
  std::optional<double> lambda2;
  std::string lambda2_source;   ///< analytic | estimated
  Eigen::MatrixXd abar, abar_se, cm;
  Eigen::MatrixXd gap, gap_se;  ///< Ā - (A₁ + φ̂ Â₂) and its elementwise standard error
  double eps = 0.0;             ///< operator norm of gap
  double eps_se = 0.0;          ///< Frobenius norm of gap_se
  bool above_noise = false;     ///< eps > 3 eps_se
};

struct ScalingFit {
  std::string status;  ///< ok | inconclusive
  double slope = 0.0;
  double constant = 0.0;
  double r2 = 0.0;
  int points = 0;
};

struct DiluteSweepReport {
  SweepConfig config;
  Eigen::MatrixXd hatA2;
  std::vector<MemberRecord> records;
  std::vector<ReportRow> rows;
  double seconds = 0.0;  ///< timing metadata, excluded from reproducibility checks

  /// Per intensity, the most extrapolated row available.
  std::vector<ReportRow> final_rows() const;
};

struct SweepOptions {
  std::string checkpoint;  ///< JSON-lines file of completed members; empty disables
  bool resume = false;     ///< reuse members found in the checkpoint
  int workers = 0;         ///< concurrent members; 0 = worker_count()
  /// Stop after this many newly computed members (testing the resume path); -1 = no limit.
  long stop_after = -1;
};

/// Runs every (λ, L, member) job, then aggregates. Failed members are
/// flagged and skipped; more than 20% failures throws std::runtime_error.
DiluteSweepReport run_sweep(const SweepConfig& cfg, const SweepOptions& options = {});

/// Rebuilds aggregate rows from member records (used by run_sweep and resume).
std::vector<ReportRow> aggregate(const SweepConfig& cfg, const Eigen::MatrixXd& hatA2,
                                 const std::vector<MemberRecord>& records);

/// Least-squares fit of log y = slope log x + log constant.
ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// λ₂ |log λ₂|.
double lambda2_log_abscissa(double lambda2);

/// Fit of log ε against log(λ₂|log λ₂|) over the final rows. Needs at least
/// three rows above the noise floor, otherwise status = inconclusive.
ScalingFit fit_error_scaling(const DiluteSweepReport& report);

/// Fit of log ε against log φ̂ over the final rows, same noise rule.
ScalingFit fit_phi_exponent(const DiluteSweepReport& report);

struct GapTable {
  std::string csv;
  std::string text;
};

/// Per-λ comparison: φ̂, Ā₁₁, CM₁₁, ε, ε/(λ₂|log λ₂|).
GapTable cm_gap_table(const DiluteSweepReport& report);

}  // namespace dilute
