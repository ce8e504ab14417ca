#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "dilute/corrector.hpp"
#include "dilute/dilute_experiment.hpp"

namespace dilute {

nlohmann::json member_to_json(const MemberRecord& record);
MemberRecord member_from_json(const nlohmann::json& j);

/// Sweep CSV, one row per aggregate. Column order:
///   kind, lambda, L, N, h, members, failed, stream_first, stream_last,
///   phi, phi_se, lambda2, lambda2_source,
///   abar_ij, abar_se_ij, cm_ij, gap_ij, gap_se_ij   (each d×d, row-major),
///   eps, eps_se, above_noise
std::string report_csv_header(int d);
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, int d);
/// Parses a CSV written by write_report_csv; `d` receives the dimension.
std::vector<ReportRow> read_report_csv(std::istream& in, int& d);

/// Full report: embedded config (for replay), Â₂, rows, fits, timing.
nlohmann::json report_to_json(const DiluteSweepReport& report);

/// Per-solve diagnostics record {iterations, final_residual, alpha0, scheme,
/// Abar (row-major), residual histories}.
nlohmann::json solve_record_json(const CorrectorSolution& solution);

/// Row-major CSV fragment of a matrix, 17 significant digits.
std::string matrix_csv(const Eigen::MatrixXd& m);

}  // namespace dilute
