#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

namespace dilute {

/// Matrix conductivity A₁ and inclusion conductivity A₂, both d×d and
/// strongly elliptic; not necessarily symmetric.
struct PhaseModel {
  Eigen::MatrixXd A1;
  Eigen::MatrixXd A2;
  double c0 = 0.0;  ///< eigenvalues of the symmetric parts lie in [c0, 1/c0]

  struct Isotropic {
    double alpha;
    double beta;
  };
  std::optional<Isotropic> isotropic;  ///< set when A₁ = αId and A₂ = βId

  static PhaseModel from_scalars(double alpha, double beta, int d);
  /// Validates ellipticity; detects the isotropic case.
  static PhaseModel from_matrices(Eigen::MatrixXd A1, Eigen::MatrixXd A2);

  int dim() const { return static_cast<int>(A1.rows()); }
  bool symmetric() const;
  const Eigen::MatrixXd& matrix(std::uint8_t phase) const { return phase ? A2 : A1; }
};

/// min(λ_min(sym A), 1/λ_max(sym A)); non-positive when A is not elliptic.
double ellipticity_constant(const Eigen::MatrixXd& A);

}  // namespace dilute
