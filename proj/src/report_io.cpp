#include "dilute/report_io.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "dilute/config.hpp"
#include "dilute/errors.hpp"

namespace dilute {

using nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json flat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

Eigen::MatrixXd unflat(const json& j) {
  const auto n = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(j.size()))));
  if (n * n != static_cast<Eigen::Index>(j.size())) throw ConfigError("record: matrix is not square");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = j.at(static_cast<std::size_t>(r * n + c)).get<double>();
  return m;
}

json fit_json(const ScalingFit& f) {
  json out = {{"status", f.status}, {"points", f.points}};
  if (f.status == "ok") {
    out["slope"] = f.slope;
    out["constant"] = f.constant;
    out["r2"] = f.r2;
  }
  return out;
}

const char* kMatrixBlocks[] = {"abar", "abar_se", "cm", "gap", "gap_se"};

const Eigen::MatrixXd& block(const ReportRow& r, int k) {
  switch (k) {
    case 0: return r.abar;
    case 1: return r.abar_se;
    case 2: return r.cm;
    case 3: return r.gap;
    default: return r.gap_se;
  }
}

Eigen::MatrixXd& block(ReportRow& r, int k) {
  return const_cast<Eigen::MatrixXd&>(block(static_cast<const ReportRow&>(r), k));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

json member_to_json(const MemberRecord& r) {
  json abar = json::array();
  for (const auto& m : r.abar) abar.push_back(flat(m));
  return {{"lambda_index", r.lambda_index},
          {"level_index", r.level_index},
          {"member", r.member},
          {"stream", r.stream},
          {"seed", r.seed},
          {"points", r.points},
          {"failed", r.failed},
          {"error", r.error},
          {"phi", r.phi},
          {"abar", abar},
          {"iterations", r.iterations}};
}

MemberRecord member_from_json(const json& j) {
  MemberRecord r;
  r.lambda_index = j.at("lambda_index").get<std::size_t>();
  r.level_index = j.at("level_index").get<std::size_t>();
  r.member = j.at("member").get<int>();
  r.stream = j.at("stream").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.points = j.at("points").get<std::size_t>();
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.phi = j.at("phi").get<std::vector<double>>();
  for (const auto& m : j.at("abar")) r.abar.push_back(unflat(m));
  r.iterations = j.at("iterations").get<std::vector<int>>();
  if (r.abar.size() != r.phi.size()) throw ConfigError("record: phi and abar lengths differ");
  return r;
}

std::string report_csv_header(int d) {
  std::ostringstream os;
  os << "kind,lambda,L,N,h,members,failed,stream_first,stream_last,phi,phi_se,lambda2,lambda2_source";
  for (const char* name : kMatrixBlocks)
    for (int i = 1; i <= d; ++i)
      for (int j = 1; j <= d; ++j) os << ',' << name << '_' << i << j;
  os << ",eps,eps_se,above_noise";
  return os.str();
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows, int d) {
  out << report_csv_header(d) << '\n';
  for (const auto& r : rows) {
    out << row_kind_name(r.kind) << ',' << num(r.lambda) << ',' << num(r.L) << ',' << r.N << ',' << num(r.h) << ','
        << r.members << ',' << r.failed << ',' << r.stream_first << ',' << r.stream_last << ',' << num(r.phi) << ','
        << num(r.phi_se) << ',' << (r.lambda2 ? num(*r.lambda2) : "") << ',' << r.lambda2_source;
    for (int k = 0; k < 5; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ',' << num(block(r, k)(i, j));
    out << ',' << num(r.eps) << ',' << num(r.eps_se) << ',' << (r.above_noise ? 1 : 0) << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in, int& d) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("report csv: empty file");
  const auto header = split_csv(line);
  d = 0;
  for (int cand : {2, 3})
    if (line == report_csv_header(cand)) d = cand;
  if (!d) throw ConfigError("report csv: unrecognized header");
  std::vector<ReportRow> rows;
  int lineno = 1;
  std::map<double, std::size_t> lambda_index;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != header.size())
      throw ConfigError("report csv: line " + std::to_string(lineno) + ": wrong column count");
    try {
      ReportRow r;
      std::size_t k = 0;
      r.kind = parse_row_kind(c[k++]);
      r.lambda = parse_num(c[k++]);
      r.L = parse_num(c[k++]);
      r.N = std::stoi(c[k++]);
      r.h = parse_num(c[k++]);
      r.members = std::stoi(c[k++]);
      r.failed = std::stoi(c[k++]);
      r.stream_first = std::stoull(c[k++]);
      r.stream_last = std::stoull(c[k++]);
      r.phi = parse_num(c[k++]);
      r.phi_se = parse_num(c[k++]);
      if (!c[k].empty()) r.lambda2 = parse_num(c[k]);
      ++k;
      r.lambda2_source = c[k++];
      for (int b = 0; b < 5; ++b) {
        Eigen::MatrixXd m(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) m(i, j) = parse_num(c[k++]);
        block(r, b) = m;
      }
      r.eps = parse_num(c[k++]);
      r.eps_se = parse_num(c[k++]);
      r.above_noise = c[k++] == "1";
      r.lambda_index = lambda_index.emplace(r.lambda, lambda_index.size()).first->second;
      rows.push_back(r);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("report csv: line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

json report_to_json(const DiluteSweepReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = {{"kind", row_kind_name(r.kind)},
                {"lambda", r.lambda},
                {"L", std::isinf(r.L) ? json(nullptr) : json(r.L)},
                {"N", r.N},
                {"h", r.h},
                {"members", r.members},
                {"failed", r.failed},
                {"stream_first", r.stream_first},
                {"stream_last", r.stream_last},
                {"phi", r.phi},
                {"phi_se", r.phi_se},
                {"lambda2", r.lambda2 ? json(*r.lambda2) : json(nullptr)},
                {"lambda2_source", r.lambda2_source},
                {"eps", r.eps},
                {"eps_se", r.eps_se},
                {"above_noise", r.above_noise}};
    for (int k = 0; k < 5; ++k) row[kMatrixBlocks[k]] = flat(block(r, k));
    rows.push_back(row);
  }
  json members = json::array();
  for (const auto& m : report.records) members.push_back(member_to_json(m));
  return {{"config", sweep_to_json(report.config)},
          {"hatA2", flat(report.hatA2)},
          {"rows", rows},
          {"fits", {{"error_scaling", fit_json(fit_error_scaling(report))},
                    {"phi_exponent", fit_json(fit_phi_exponent(report))}}},
          {"members", members},
          {"timing", {{"seconds", report.seconds}}}};
}

json solve_record_json(const CorrectorSolution& s) {
  json iterations = json::array(), residual = json::array(), history = json::array();
  for (const auto& d : s.directions) {
    iterations.push_back(d.iterations);
    residual.push_back(d.final_residual);
    history.push_back(d.residuals);
  }
  return {{"iterations", iterations},
          {"final_residual", residual},
          {"alpha0", s.alpha0},
          {"scheme", scheme_name(s.scheme)},
          {"Abar", flat(s.Abar)},
          {"asymmetry", s.asymmetry},
          {"symmetrized", s.symmetrized},
          {"residual_history", history}};
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << num(m(r, c));
    os << '\n';
  }
  return os.str();
}

}  // namespace dilute
