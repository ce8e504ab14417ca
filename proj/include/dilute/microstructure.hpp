#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dilute/point_process.hpp"

namespace dilute {

/// Inclusions are unit balls centered at the sample points; a pair of
/// centers closer than this belongs to the same cluster of the fattened set
/// (radius-2 balls overlap).
inline constexpr double kClusterDistance = 4.0;

/// ρₙ threshold for a well-separated inclusion.
inline constexpr double kWellSeparatedRho = 2.0;

/// Minimum over distinct pairs of the sup-norm torus distance; +inf when the
/// sample has fewer than two points.
double min_separation(const PointSample& sample);

/// Per-point ρₙ: half the Euclidean torus distance to the nearest other point
/// (+inf for a lone point).
Eigen::VectorXd rho_separations(const PointSample& sample);

inline bool well_separated(double rho) { return rho >= kWellSeparatedRho; }

struct Clusters {
  std::vector<int> label;                 ///< cluster id per point
  std::vector<std::vector<int>> members;  ///< sorted member lists, ordered by smallest member

  std::size_t count() const { return members.size(); }
  bool singleton(int point) const { return members[label[point]].size() == 1; }
};

/// Connected components of centers under the relation |x_n - x_m| < 4 (torus metric).
Clusters cluster_decomposition(const PointSample& sample);

/// Cell-center indicator of the inclusion union on an N^d grid, row-major with
/// the last axis fastest. Cell i has center (i + 1/2) L/N.
std::vector<std::uint8_t> raster_indicator(const PointSample& sample, int N);

/// Per cell: index of the first point whose ball covers the cell center, -1 outside.
std::vector<int> raster_owner(const PointSample& sample, int N);

double volume_fraction_raster(const PointSample& sample, int N);
double volume_fraction_montecarlo(const PointSample& sample, std::int64_t probes,
                                  std::uint64_t seed);

struct Lambda2Options {
  double bin_width = 1.0;  ///< used when the contact scale is 0
  double r_max = 0.0;      ///< sup-norm displacement cutoff; 0 means L/4
};

struct Lambda2Estimate {
  double value = 0.0;              ///< λ̂₂
  double intensity = 0.0;          ///< λ̂, mean count per unit volume
  double bin_side = 0.0;
  std::int64_t max_bin_count = 0;  ///< ordered pairs in the maximizing bin
  Eigen::VectorXd max_bin_center;
  double sigma = 0.0;              ///< Poisson standard error of value
  bool at_cutoff = false;          ///< maximizing bin lies in the outermost ring
  bool exceeds_upper = false;      ///< λ̂₂ > λ̂ (1 + 3/sqrt(count)), a range violation
  std::vector<std::string> warnings;
};

/// Empirical sup over displacement cubes of the pair density. Cubes have side
/// `contact_scale` (bin_width when contact_scale <= 0), are centered on the
/// lattice w·Z^d, and only cubes fully inside the sup-norm ball of radius
/// r_max are considered. Counts of ordered pairs are normalized by
/// (ensemble size · L^d · w^d).
Lambda2Estimate estimate_lambda2(std::span<const PointSample> samples, double contact_scale,
                                 const Lambda2Options& options = {});

struct GeometryReport {
  double min_separation = 0.0;  ///< ℓ̂
  Eigen::VectorXd rho;
  Clusters clusters;
  double volume_fraction = 0.0;  ///< φ̂
  std::string volume_fraction_method;
  std::optional<double> lambda2;  ///< ensemble estimate, when available

  std::size_t well_separated_count() const;
  /// singleton(n) ⇔ ρₙ >= 2 for every n.
  bool singleton_rho_consistent() const;
};

struct GeometryOptions {
  enum class Method { raster, montecarlo } method = Method::montecarlo;
  int raster_n = 1024;
  std::int64_t probes = 1'000'000;
};

GeometryReport geometry_report(const PointSample& sample, const GeometryOptions& options = {});

/// Flat `key = value` text block.
void write_geometry_report(std::ostream& out, const GeometryReport& report);

/// One CSV row (header via geometry_csv_header): points, ell, rho_min,
/// well_separated, clusters, largest_cluster, phi, lambda2.
std::string geometry_csv_header();
std::string geometry_csv_row(const GeometryReport& report);

}  // namespace dilute
