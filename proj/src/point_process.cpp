#include "dilute/point_process.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "dilute/neighbors.hpp"
#include "dilute/rng.hpp"

namespace dilute {
namespace {

double ball_volume(int d, double r) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(r, d);
}

void check_expected_count(double expected) {
  if (!(expected <= kMaxExpectedPoints))
    throw ConfigError("sampler: expected point count " + std::to_string(expected) +
                      " exceeds the resource guard of 1e8");
}

Eigen::MatrixXd uniform_points(Rng& rng, int d, double L, Eigen::Index n) {
  Eigen::MatrixXd pts(d, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) pts(k, i) = wrap_coordinate(rng.uniform() * L, L);
  return pts;
}

Eigen::Index poisson_count(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long long> count(mean);
  return static_cast<Eigen::Index>(count(rng));
}

}  // namespace

std::string process_kind(const ProcessSpec& process) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonProcess>) return "poisson";
        else if constexpr (std::is_same_v<T, MaternIIProcess>) return "matern2";
        else return "jittered_lattice";
      },
      process);
}

void validate_process(const ProcessSpec& process) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonProcess>) {
          if (!(p.lambda > 0.0)) throw ConfigError("lambda: intensity must be > 0");
        } else if constexpr (std::is_same_v<T, MaternIIProcess>) {
          if (!(p.lambda_parent > 0.0)) throw ConfigError("lambda: parent intensity must be > 0");
          if (!(p.r_hard > 0.0)) throw ConfigError("r_hard: hardcore radius must be > 0");
        } else {
          if (!(p.spacing > 0.0)) throw ConfigError("spacing: lattice spacing must be > 0");
          if (!(p.jitter >= 0.0) || !(p.jitter < p.spacing / 2.0))
            throw ConfigError("jitter: must satisfy 0 <= jitter < spacing/2");
        }
      },
      process);
}

double process_intensity(const ProcessSpec& process, int d) {
  return std::visit(
      [d](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonProcess>) {
          return p.lambda;
        } else if constexpr (std::is_same_v<T, MaternIIProcess>) {
          const double v = ball_volume(d, p.r_hard);
          return (1.0 - std::exp(-p.lambda_parent * v)) / v;
        } else {
          return std::pow(p.spacing, -d);
        }
      },
      process);
}

PointSample sample_poisson(double lambda, const TorusSpec& torus, std::uint64_t seed) {
  torus.validate();
  validate_process(PoissonProcess{lambda});
  check_expected_count(lambda * torus.volume());
  Rng rng(seed);
  const Eigen::Index n = poisson_count(rng, lambda * torus.volume());
  return PointSample{torus, uniform_points(rng, torus.d, torus.L, n), seed, PoissonProcess{lambda}};
}

PointSample sample_matern2(double lambda_parent, double r_hard, const TorusSpec& torus,
                           std::uint64_t seed) {
  torus.validate();
  validate_process(MaternIIProcess{lambda_parent, r_hard});
  if (!(r_hard < torus.L / 2.0)) throw ConfigError("r_hard: must be below L/2");
  check_expected_count(lambda_parent * torus.volume());
  Rng rng(seed);
  const Eigen::Index n = poisson_count(rng, lambda_parent * torus.volume());
  Eigen::MatrixXd parents = uniform_points(rng, torus.d, torus.L, n);
  std::vector<double> mark(n);
  for (auto& m : mark) m = rng.uniform();

  // A parent survives unless a neighbour within r_hard carries a smaller mark.
  std::vector<char> keep(n, 1);
  CellList cells(parents, torus.L, r_hard);
  cells.for_each_pair(r_hard, [&](Eigen::Index i, Eigen::Index j, const Eigen::VectorXd&) {
    if (mark[i] < mark[j]) keep[j] = 0;
    else keep[i] = 0;
  });
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < n; ++i)
    if (keep[i]) kept.push_back(i);
  Eigen::MatrixXd centers(torus.d, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) centers.col(c) = parents.col(kept[c]);
  return PointSample{torus, std::move(centers), seed, MaternIIProcess{lambda_parent, r_hard}};
}

PointSample sample_jittered_lattice(double spacing, double jitter, const TorusSpec& torus,
                                    std::uint64_t seed) {
  torus.validate();
  validate_process(JitteredLatticeProcess{spacing, jitter});
  const double cells = torus.L / spacing;
  const long per_side = std::lround(cells);
  if (per_side < 1 || std::abs(cells - per_side) > 1e-9 * cells)
    throw ConfigError("spacing: L must be an integer multiple of the lattice spacing");
  check_expected_count(std::pow(cells, torus.d));

  Rng rng(seed);
  Eigen::VectorXd shift(torus.d);
  for (int k = 0; k < torus.d; ++k) shift[k] = rng.uniform() * spacing;

  const Eigen::Index n = static_cast<Eigen::Index>(std::pow(per_side, torus.d));
  Eigen::MatrixXd centers(torus.d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index rest = i;
    for (int k = torus.d - 1; k >= 0; --k) {
      const double site = static_cast<double>(rest % per_side) * spacing;
      rest /= per_side;
      const double u = jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0;
      centers(k, i) = wrap_coordinate(site + shift[k] + u, torus.L);
    }
  }
  return PointSample{torus, std::move(centers), seed, JitteredLatticeProcess{spacing, jitter}};
}

PointSample sample_process(const ProcessSpec& process, const TorusSpec& torus,
                           std::uint64_t seed) {
  return std::visit(
      [&](const auto& p) -> PointSample {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonProcess>)
          return sample_poisson(p.lambda, torus, seed);
        else if constexpr (std::is_same_v<T, MaternIIProcess>)
          return sample_matern2(p.lambda_parent, p.r_hard, torus, seed);
        else
          return sample_jittered_lattice(p.spacing, p.jitter, torus, seed);
      },
      process);
}

PointSample thin_sample(const PointSample& sample, double keep, std::uint64_t seed) {
  if (!(keep >= 0.0 && keep <= 1.0)) throw ConfigError("thinning probability must be in [0, 1]");
  Rng rng(seed);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < sample.size(); ++i)
    if (rng.uniform() < keep) kept.push_back(i);
  PointSample out = sample;
  out.centers.resize(sample.dim(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) out.centers.col(c) = sample.centers.col(kept[c]);
  if (auto* p = std::get_if<PoissonProcess>(&out.process)) p->lambda *= keep;
  return out;
}

std::optional<double> analytic_lambda2(const ProcessSpec& process, int d) {
  if (const auto* p = std::get_if<PoissonProcess>(&process)) return p->lambda * p->lambda;
  if (const auto* j = std::get_if<JitteredLatticeProcess>(&process)) {
    if (j->jitter > j->spacing / 4.0) return std::nullopt;
    const double lambda = std::pow(j->spacing, -d);
    const double ell = j->spacing - 2.0 * j->jitter;
    return lambda * std::pow(ell - 2.0 * j->jitter / 3.0, d) / std::pow(ell, 2 * d);
  }
  return std::nullopt;
}

std::optional<double> analytic_min_length(const ProcessSpec& process) {
  if (const auto* j = std::get_if<JitteredLatticeProcess>(&process))
    return j->spacing - 2.0 * j->jitter;
  return std::nullopt;
}

namespace {

std::string process_params(const ProcessSpec& process) {
  std::ostringstream os;
  os << std::setprecision(17);
  std::visit(
      [&os](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PoissonProcess>) os << p.lambda;
        else if constexpr (std::is_same_v<T, MaternIIProcess>) os << p.lambda_parent << ' ' << p.r_hard;
        else os << p.spacing << ' ' << p.jitter;
      },
      process);
  return os.str();
}

}  // namespace

void write_sample(std::ostream& out, const PointSample& sample) {
  out << "# " << sample.torus.d << ' ' << std::setprecision(17) << sample.torus.L << ' '
      << sample.seed << ' ' << process_kind(sample.process) << ' '
      << process_params(sample.process) << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    for (int k = 0; k < sample.dim(); ++k) {
      if (k) out << ' ';
      out << sample.centers(k, i);
    }
    out << '\n';
  }
}

PointSample read_sample(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw ConfigError("point sample: missing '# d L seed kind params' header");
  std::istringstream head(line.substr(2));
  PointSample s;
  std::string kind;
  if (!(head >> s.torus.d >> s.torus.L >> s.seed >> kind))
    throw ConfigError("point sample: malformed header");
  if (kind == "poisson") {
    PoissonProcess p;
    head >> p.lambda;
    s.process = p;
  } else if (kind == "matern2") {
    MaternIIProcess p;
    head >> p.lambda_parent >> p.r_hard;
    s.process = p;
  } else if (kind == "jittered_lattice") {
    JitteredLatticeProcess p;
    head >> p.spacing >> p.jitter;
    s.process = p;
  } else {
    throw ConfigError("point sample: unknown process kind '" + kind + "'");
  }
  if (head.fail()) throw ConfigError("point sample: malformed process parameters");
  s.torus.validate();

  std::vector<double> coords;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    for (int k = 0; k < s.torus.d; ++k) {
      double x;
      if (!(row >> x)) throw ConfigError("point sample: line " + std::to_string(lineno) + ": expected " + std::to_string(s.torus.d) + " coordinates");
      if (!(x >= 0.0 && x < s.torus.L))
        throw ConfigError("point sample: line " + std::to_string(lineno) + ": coordinate outside [0, L)");
      coords.push_back(x);
    }
  }
  s.centers = Eigen::Map<Eigen::MatrixXd>(coords.data(), s.torus.d,
                                          static_cast<Eigen::Index>(coords.size()) / s.torus.d);
  return s;
}

void save_sample(const std::string& path, const PointSample& sample) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_sample(out, sample);
  if (!out) throw IoError("write failed: " + path);
}

PointSample load_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_sample(in);
}

}  // namespace dilute
