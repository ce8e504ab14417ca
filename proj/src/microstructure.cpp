#include "dilute/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dilute/neighbors.hpp"
#include "dilute/rng.hpp"

namespace dilute {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Eigen::Index kBruteForceLimit = 2000;

// Squared nearest-neighbour torus distance for each point.
std::vector<double> nearest_sq(const PointSample& s) {
  const Eigen::Index n = s.size();
  const double L = s.torus.L;
  std::vector<double> best(n, kInf);
  auto brute = [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) best[i] = std::min(best[i], squared_torus_distance(s.centers.col(i), s.centers.col(j), L));
  };
  if (n <= kBruteForceLimit) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double r2 = squared_torus_distance(s.centers.col(i), s.centers.col(j), L);
        best[i] = std::min(best[i], r2);
        best[j] = std::min(best[j], r2);
      }
    return best;
  }
  double reach = 2.0 * std::pow(s.torus.volume() / static_cast<double>(n), 1.0 / s.dim());
  CellList cells(s.centers, L, reach);
  cells.for_each_pair(cells.reach(), [&](Eigen::Index i, Eigen::Index j, const Eigen::VectorXd& d) {
    const double r2 = d.squaredNorm();
    best[i] = std::min(best[i], r2);
    best[j] = std::min(best[j], r2);
  });
  for (Eigen::Index i = 0; i < n; ++i) {
    if (best[i] < kInf) continue;
    double r = cells.reach();
    while (best[i] == kInf && r < L) {
      r *= 2.0;
      CellList wide(s.centers, L, r);
      if (wide.cells_per_side() < 3) break;
      wide.for_each_near(s.centers.col(i), wide.reach(), [&](Eigen::Index j, const Eigen::VectorXd& d) {
        if (j != i) best[i] = std::min(best[i], d.squaredNorm());
      });
    }
    if (best[i] == kInf) brute(i);
  }
  return best;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double min_separation(const PointSample& sample) {
  const Eigen::Index n = sample.size();
  if (n < 2) return kInf;
  const double L = sample.torus.L;
  auto sup_dist = [&](Eigen::Index i, Eigen::Index j) {
    double m = 0.0;
    for (int k = 0; k < sample.dim(); ++k)
      m = std::max(m, std::abs(wrap_difference(sample.centers(k, j) - sample.centers(k, i), L)));
    return m;
  };
  double best = kInf;
  if (n <= kBruteForceLimit) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) best = std::min(best, sup_dist(i, j));
    return best;
  }
  // The sup-norm minimizer lies within Euclidean distance sqrt(d)·r_nn.
  const auto nn = nearest_sq(sample);
  const double r_nn = std::sqrt(*std::min_element(nn.begin(), nn.end()));
  const double reach = std::sqrt(static_cast<double>(sample.dim())) * r_nn * (1.0 + 1e-12) + 1e-300;
  CellList cells(sample.centers, L, reach);
  cells.for_each_pair(cells.reach(), [&](Eigen::Index i, Eigen::Index j, const Eigen::VectorXd&) {
    best = std::min(best, sup_dist(i, j));
  });
  return best;
}

Eigen::VectorXd rho_separations(const PointSample& sample) {
  const auto nn = nearest_sq(sample);
  Eigen::VectorXd rho(sample.size());
  for (Eigen::Index i = 0; i < sample.size(); ++i) rho[i] = 0.5 * std::sqrt(nn[i]);
  return rho;
}

Clusters cluster_decomposition(const PointSample& sample) {
  const Eigen::Index n = sample.size();
  UnionFind uf(static_cast<std::size_t>(n));
  CellList cells(sample.centers, sample.torus.L, kClusterDistance);
  cells.for_each_pair(kClusterDistance, [&](Eigen::Index i, Eigen::Index j, const Eigen::VectorXd&) {
    uf.unite(static_cast<int>(i), static_cast<int>(j));
  });
  Clusters out;
  out.label.assign(n, -1);
  std::map<int, int> root_to_id;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int r = uf.find(static_cast<int>(i));
    auto [it, inserted] = root_to_id.try_emplace(r, static_cast<int>(out.members.size()));
    if (inserted) out.members.emplace_back();
    out.label[i] = it->second;
    out.members[it->second].push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

template <typename Fn>
void for_each_covered_cell(const PointSample& sample, int N, Fn&& fn) {
  const int d = sample.dim();
  const double L = sample.torus.L;
  const double h = L / N;
  auto range = [&](double x) {
    // cell centers (i + 1/2) h within [x - 1, x + 1]
    const long lo = static_cast<long>(std::ceil((x - 1.0) / h - 0.5));
    const long hi = static_cast<long>(std::floor((x + 1.0) / h - 0.5));
    return std::pair{lo, hi};
  };
  auto wrap_index = [N](long i) { return static_cast<std::size_t>(((i % N) + N) % N); };

  for (Eigen::Index p = 0; p < sample.size(); ++p) {
    const auto x = sample.centers.col(p);
    auto [a0, b0] = range(x[0]);
    auto [a1, b1] = range(x[1]);
    for (long i = a0; i <= b0; ++i) {
      const double dx = wrap_difference((i + 0.5) * h - x[0], L);
      for (long j = a1; j <= b1; ++j) {
        const double dy = wrap_difference((j + 0.5) * h - x[1], L);
        const double r2 = dx * dx + dy * dy;
        if (r2 >= 1.0) continue;
        if (d == 2) {
          fn(p, wrap_index(i) * N + wrap_index(j));
          continue;
        }
        auto [a2, b2] = range(x[2]);
        for (long k = a2; k <= b2; ++k) {
          const double dz = wrap_difference((k + 0.5) * h - x[2], L);
          if (r2 + dz * dz < 1.0) fn(p, (wrap_index(i) * N + wrap_index(j)) * N + wrap_index(k));
        }
      }
    }
  }
}

std::size_t grid_cells(int d, int N) {
  return d == 2 ? std::size_t(N) * N : std::size_t(N) * N * N;
}

}  // namespace

std::vector<std::uint8_t> raster_indicator(const PointSample& sample, int N) {
  std::vector<std::uint8_t> ind(grid_cells(sample.dim(), N), 0);
  for_each_covered_cell(sample, N, [&](Eigen::Index, std::size_t c) { ind[c] = 1; });
  return ind;
}

std::vector<int> raster_owner(const PointSample& sample, int N) {
  std::vector<int> owner(grid_cells(sample.dim(), N), -1);
  for_each_covered_cell(sample, N, [&](Eigen::Index p, std::size_t c) {
    if (owner[c] < 0) owner[c] = static_cast<int>(p);
  });
  return owner;
}

double volume_fraction_raster(const PointSample& sample, int N) {
  const auto ind = raster_indicator(sample, N);
  const std::size_t inside = std::count(ind.begin(), ind.end(), std::uint8_t{1});
  return static_cast<double>(inside) / static_cast<double>(ind.size());
}

double volume_fraction_montecarlo(const PointSample& sample, std::int64_t probes,
                                  std::uint64_t seed) {
  if (probes <= 0) throw ConfigError("volume fraction: probe count must be positive");
  if (sample.size() == 0) return 0.0;
  Rng rng(seed);
  CellList cells(sample.centers, sample.torus.L, 1.0);
  Eigen::VectorXd x(sample.dim());
  std::int64_t hits = 0;
  for (std::int64_t m = 0; m < probes; ++m) {
    for (int k = 0; k < sample.dim(); ++k) x[k] = rng.uniform() * sample.torus.L;
    bool inside = false;
    cells.for_each_near(x, 1.0, [&](Eigen::Index, const Eigen::VectorXd&) { inside = true; });
    hits += inside;
  }
  return static_cast<double>(hits) / static_cast<double>(probes);
}

Lambda2Estimate estimate_lambda2(std::span<const PointSample> samples, double contact_scale,
                                 const Lambda2Options& options) {
  if (samples.empty()) throw ConfigError("estimate_lambda2: empty ensemble");
  const TorusSpec torus = samples.front().torus;
  for (const auto& s : samples)
    if (!(s.torus == torus)) throw ConfigError("estimate_lambda2: samples must share one torus");
  const int d = torus.d;
  const double L = torus.L;
  const double w = contact_scale > 0.0 ? contact_scale : options.bin_width;
  if (!(w > 0.0)) throw ConfigError("estimate_lambda2: bin width must be > 0");
  const double r_max = options.r_max > 0.0 ? options.r_max : L / 4.0;
  if (r_max > L / 2.0) throw ConfigError("estimate_lambda2: cutoff must not exceed L/2");
  // Bins centered at w·m with |m|_inf <= half fit inside the sup ball of radius r_max.
  const long half = static_cast<long>(std::floor(r_max / w - 0.5));
  if (half < 0) throw ConfigError("estimate_lambda2: cutoff smaller than one bin");
  const long side = 2 * half + 1;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(std::pow(side, d)), 0);

  double total_points = 0.0;
  for (const auto& s : samples) {
    total_points += static_cast<double>(s.size());
    const double reach = std::sqrt(static_cast<double>(d)) * (half + 0.5) * w;
    CellList cells(s.centers, L, reach);
    cells.for_each_pair(reach,
                        [&](Eigen::Index, Eigen::Index, const Eigen::VectorXd& disp) {
                          for (int sign : {1, -1}) {
                            std::size_t flat = 0;
                            bool in = true;
                            for (int k = 0; k < d; ++k) {
                              const long m = std::lround(sign * disp[k] / w);
                              if (std::abs(m) > half) {
                                in = false;
                                break;
                              }
                              flat = flat * side + static_cast<std::size_t>(m + half);
                            }
                            if (in) ++counts[flat];
                          }
                        });
  }

  Lambda2Estimate est;
  est.bin_side = w;
  const double M = static_cast<double>(samples.size());
  est.intensity = total_points / (M * torus.volume());
  const auto it = std::max_element(counts.begin(), counts.end());
  std::size_t arg = static_cast<std::size_t>(it - counts.begin());
  est.max_bin_count = *it;
  est.value = static_cast<double>(*it) / (M * torus.volume() * std::pow(w, d));
  est.sigma = est.max_bin_count > 0 ? est.value / std::sqrt(static_cast<double>(est.max_bin_count)) : 0.0;
  est.max_bin_center.resize(d);
  long outer = 0;
  for (int k = d - 1; k >= 0; --k) {
    const long m = static_cast<long>(arg % side) - half;
    arg /= side;
    est.max_bin_center[k] = m * w;
    outer = std::max(outer, std::abs(m));
  }
  est.at_cutoff = outer == half && half > 0;
  if (est.at_cutoff) est.warnings.push_back("maximizing bin lies at the cutoff radius");
  const double eps = est.max_bin_count > 0 ? 3.0 / std::sqrt(static_cast<double>(est.max_bin_count)) : 0.0;
  est.exceeds_upper = est.value > est.intensity * (1.0 + eps);
  if (est.exceeds_upper) est.warnings.push_back("estimate exceeds the intensity upper bound");
  if (samples.size() < 10) est.warnings.push_back("ensemble smaller than 10 samples");
  return est;
}

std::size_t GeometryReport::well_separated_count() const {
  return static_cast<std::size_t>(std::count_if(rho.begin(), rho.end(), [](double r) { return well_separated(r); }));
}

bool GeometryReport::singleton_rho_consistent() const {
  for (Eigen::Index n = 0; n < rho.size(); ++n)
    if (clusters.singleton(static_cast<int>(n)) != well_separated(rho[n])) return false;
  return true;
}

GeometryReport geometry_report(const PointSample& sample, const GeometryOptions& options) {
  GeometryReport r;
  r.min_separation = min_separation(sample);
  r.rho = rho_separations(sample);
  r.clusters = cluster_decomposition(sample);
  if (options.method == GeometryOptions::Method::raster) {
    r.volume_fraction = volume_fraction_raster(sample, options.raster_n);
    r.volume_fraction_method = "raster(" + std::to_string(options.raster_n) + ")";
  } else {
    r.volume_fraction = volume_fraction_montecarlo(sample, options.probes, derive_seed(sample.seed, 0xf1));
    r.volume_fraction_method = "montecarlo(" + std::to_string(options.probes) + ")";
  }
  return r;
}

void write_geometry_report(std::ostream& out, const GeometryReport& r) {
  std::size_t largest = 0;
  for (const auto& m : r.clusters.members) largest = std::max(largest, m.size());
  out << std::setprecision(17);
  out << "points = " << r.rho.size() << '\n'
      << "min_separation = " << r.min_separation << '\n'
      << "rho_min = " << (r.rho.size() ? r.rho.minCoeff() : kInf) << '\n'
      << "well_separated = " << r.well_separated_count() << '\n'
      << "clusters = " << r.clusters.count() << '\n'
      << "largest_cluster = " << largest << '\n'
      << "singleton_rho_consistent = " << (r.singleton_rho_consistent() ? "true" : "false") << '\n'
      << "volume_fraction = " << r.volume_fraction << '\n'
      << "volume_fraction_method = " << r.volume_fraction_method << '\n';
  if (r.lambda2) out << "lambda2 = " << *r.lambda2 << '\n';
  out << "rho =";
  for (double v : r.rho) out << ' ' << v;
  out << '\n';
}

std::string geometry_csv_header() {
  return "points,ell,rho_min,well_separated,clusters,largest_cluster,phi,lambda2";
}

std::string geometry_csv_row(const GeometryReport& r) {
  std::size_t largest = 0;
  for (const auto& m : r.clusters.members) largest = std::max(largest, m.size());
  std::ostringstream os;
  os << std::setprecision(17) << r.rho.size() << ',' << r.min_separation << ','
     << (r.rho.size() ? r.rho.minCoeff() : kInf) << ',' << r.well_separated_count() << ','
     << r.clusters.count() << ',' << largest << ',' << r.volume_fraction << ',';
  if (r.lambda2) os << *r.lambda2;
  return os.str();
}

}  // namespace dilute
