#include "dilute/grid_field.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "dilute/errors.hpp"
#include "dilute/microstructure.hpp"

namespace dilute {

double GridField::inclusion_fraction() const {
  if (phase.empty()) return 0.0;
  return static_cast<double>(std::count(phase.begin(), phase.end(), std::uint8_t{1})) /
         static_cast<double>(phase.size());
}

void GridField::validate() const {
  torus.validate();
  if (N < kMinGridCells) throw ConfigError("grid: N must be >= 64");
  if (h() > kMaxGridStep) throw ConfigError("grid: resolution guard violated, need L/N <= 1/4");
  if (phases.dim() != torus.d) throw ConfigError("grid: phase matrices do not match the dimension");
  const std::size_t expected = torus.d == 2 ? std::size_t(N) * N : std::size_t(N) * N * N;
  if (phase.size() != expected) throw ConfigError("grid: payload size does not match N^d");
  if (std::any_of(phase.begin(), phase.end(), [](std::uint8_t p) { return p > 1; }))
    throw ConfigError("grid: phase indices must be 0 or 1");
}

GridField rasterize(const PointSample& inclusions, const PhaseModel& phases, int N) {
  if (N <= 0 || inclusions.torus.L / N > kMaxGridStep)
    throw ConfigError("rasterize: resolution guard violated, need L/N <= 1/4");
  GridField f{inclusions.torus, N, raster_indicator(inclusions, N), phases};
  f.validate();
  return f;
}

GridField laminate(const TorusSpec& torus, int N, const PhaseModel& phases, int axis, int period) {
  if (axis < 0 || axis >= torus.d) throw ConfigError("laminate: axis out of range");
  if (period < 2 || N % period != 0) throw ConfigError("laminate: period must divide N");
  const std::size_t cells = torus.d == 2 ? std::size_t(N) * N : std::size_t(N) * N * N;
  std::vector<std::uint8_t> phase(cells);
  std::size_t stride = 1;
  for (int k = torus.d - 1; k > axis; --k) stride *= N;
  for (std::size_t c = 0; c < cells; ++c) {
    const int i = static_cast<int>((c / stride) % N);
    phase[c] = (i % period) >= period / 2 ? 1 : 0;
  }
  GridField f{torus, N, std::move(phase), phases};
  f.validate();
  return f;
}

namespace {

constexpr char kMagic[4] = {'D', 'H', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("grid file: truncated header");
  return v;
}

void write_header(std::ofstream& out, const GridField& f, std::uint32_t kind) {
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, kind);
  put(out, static_cast<std::int32_t>(f.torus.d));
  put(out, static_cast<std::int32_t>(f.N));
  put(out, f.torus.L);
  for (const auto* A : {&f.phases.A1, &f.phases.A2})
    for (int i = 0; i < f.torus.d; ++i)
      for (int j = 0; j < f.torus.d; ++j) put(out, (*A)(i, j));
}

GridField read_header(std::ifstream& in, std::uint32_t& kind) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("grid file: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw IoError("grid file: unsupported version");
  kind = get<std::uint32_t>(in);
  GridField f;
  f.torus.d = get<std::int32_t>(in);
  f.N = get<std::int32_t>(in);
  f.torus.L = get<double>(in);
  if (f.torus.d != 2 && f.torus.d != 3) throw IoError("grid file: bad dimension");
  Eigen::MatrixXd A1(f.torus.d, f.torus.d), A2(f.torus.d, f.torus.d);
  for (auto* A : {&A1, &A2})
    for (int i = 0; i < f.torus.d; ++i)
      for (int j = 0; j < f.torus.d; ++j) (*A)(i, j) = get<double>(in);
  f.phases = PhaseModel::from_matrices(A1, A2);
  return f;
}

}  // namespace

void save_grid_field(const std::string& path, const GridField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_header(out, field, 0);
  out.write(reinterpret_cast<const char*>(field.phase.data()), static_cast<std::streamsize>(field.phase.size()));
  if (!out) throw IoError("write failed: " + path);
}

GridField load_grid_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::uint32_t kind = 0;
  GridField f = read_header(in, kind);
  if (kind != 0) throw IoError("grid file: not a phase field");
  const std::size_t cells = f.torus.d == 2 ? std::size_t(f.N) * f.N : std::size_t(f.N) * f.N * f.N;
  f.phase.resize(cells);
  in.read(reinterpret_cast<char*>(f.phase.data()), static_cast<std::streamsize>(cells));
  if (!in) throw IoError("grid file: truncated payload");
  f.validate();
  return f;
}

void save_vector_field(const std::string& path, const GridField& field, const Eigen::MatrixXd& values) {
  if (static_cast<std::size_t>(values.rows()) != field.cells())
    throw ConfigError("vector field: row count must equal the cell count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_header(out, field, 1);
  put(out, static_cast<std::int32_t>(values.cols()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd load_vector_field(const std::string& path, GridField* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::uint32_t kind = 0;
  GridField f = read_header(in, kind);
  if (kind != 1) throw IoError("grid file: not a vector field");
  const auto comps = get<std::int32_t>(in);
  const std::size_t cells = f.torus.d == 2 ? std::size_t(f.N) * f.N : std::size_t(f.N) * f.N * f.N;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(cells), comps);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError("grid file: truncated payload");
  if (header) *header = std::move(f);
  return values;
}

}  // namespace dilute
