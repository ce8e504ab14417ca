#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "dilute/torus.hpp"

namespace dilute {

struct PoissonProcess {
  double lambda = 0.0;  ///< points per unit volume
};

/// Matérn type-II hardcore thinning of a Poisson parent process.
struct MaternIIProcess {
  double lambda_parent = 0.0;
  double r_hard = 0.0;
};

/// One point per lattice cell, uniformly jittered, with a uniform global shift.
struct JitteredLatticeProcess {
  double spacing = 8.0;
  double jitter = 0.0;
};

using ProcessSpec = std::variant<PoissonProcess, MaternIIProcess, JitteredLatticeProcess>;

std::string process_kind(const ProcessSpec& process);

/// Throws ConfigError on invalid parameters.
void validate_process(const ProcessSpec& process);

/// Expected number of points per unit volume.
double process_intensity(const ProcessSpec& process, int d);

/// Finite point configuration on a periodic torus. Columns of `centers` are
/// points in [0, L)^d.
struct PointSample {
  TorusSpec torus;
  Eigen::MatrixXd centers;
  std::uint64_t seed = 0;
  ProcessSpec process;

  Eigen::Index size() const { return centers.cols(); }
  int dim() const { return torus.d; }
};

/// Guard on the expected point count of any sampler.
inline constexpr double kMaxExpectedPoints = 1e8;

PointSample sample_poisson(double lambda, const TorusSpec& torus, std::uint64_t seed);
PointSample sample_matern2(double lambda_parent, double r_hard, const TorusSpec& torus,
                           std::uint64_t seed);
PointSample sample_jittered_lattice(double spacing, double jitter, const TorusSpec& torus,
                                    std::uint64_t seed);

/// Dispatches on the process kind.
PointSample sample_process(const ProcessSpec& process, const TorusSpec& torus,
                           std::uint64_t seed);

/// Keeps each point independently with probability `keep`. Independent
/// thinning maps Poisson(λ) to Poisson(keep·λ).
PointSample thin_sample(const PointSample& sample, double keep, std::uint64_t seed);

/// Closed-form second-order intensity λ₂, when one is known.
///
/// Poisson: λ². Jittered lattice with jitter η <= a/4 (randomly shifted, so
/// stationary): contact scale ℓ = a - 2η and
///   λ₂ = λ (ℓ - 2η/3)^d / ℓ^{2d},
/// obtained by aligning the two ℓ-cubes on a lattice neighbour pair; the
/// jitter difference is triangular with mean absolute value 2η/3 per axis.
/// Matérn II and strongly jittered lattices: nullopt.
std::optional<double> analytic_lambda2(const ProcessSpec& process, int d);

/// Minimal sup-norm lengthscale of the process when it is deterministic and
/// known in closed form (jittered lattice: a - 2η), nullopt otherwise.
std::optional<double> analytic_min_length(const ProcessSpec& process);

/// Line-oriented text format: `# d L seed kind params...` then one center
/// per line, 17 significant digits.
void write_sample(std::ostream& out, const PointSample& sample);
PointSample read_sample(std::istream& in);
void save_sample(const std::string& path, const PointSample& sample);
PointSample load_sample(const std::string& path);

}  // namespace dilute
