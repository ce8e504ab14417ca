#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "dilute/corrector.hpp"
#include "dilute/errors.hpp"
#include "dilute/phase_model.hpp"

namespace dilute {

namespace detail {
template <typename Scalar>
void check_conductivities(Scalar alpha, Scalar beta, int d) {
  if (!(alpha > Scalar(0)) || !(beta > Scalar(0)))
    throw DomainError("single inclusion: conductivities must be positive");
  if (d < 1) throw DomainError("single inclusion: dimension must be >= 1");
}
}  // namespace detail

/// Dipole strength K = (α - β) / (β + α(d - 1)) of a unit ball of
/// conductivity β in a matrix of conductivity α.
template <typename Scalar>
Scalar dipole_K(Scalar alpha, Scalar beta, int d) {
  detail::check_conductivities(alpha, beta, d);
  return (alpha - beta) / (beta + alpha * Scalar(d - 1));
}

/// First-order amplitude αd(β - α) / (β + α(d - 1)) of the dilute expansion.
template <typename Scalar>
Scalar cm_amplitude(Scalar alpha, Scalar beta, int d) {
  detail::check_conductivities(alpha, beta, d);
  return alpha * Scalar(d) * (beta - alpha) / (beta + alpha * Scalar(d - 1));
}

/// Gradient of the single-inclusion corrector at x (|x| != 1):
///   K e                                     inside the ball,
///   K |x|^{-d} (e - d (x·e/|x|) x/|x|)      outside.
template <typename DerivedX, typename DerivedE>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> psi_gradient(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedE>& e,
    typename DerivedX::Scalar alpha, typename DerivedX::Scalar beta) {
  using Scalar = typename DerivedX::Scalar;
  const int d = static_cast<int>(x.size());
  if (e.size() != x.size()) throw DomainError("psi_gradient: dimension mismatch");
  const Scalar K = dipole_K(alpha, beta, d);
  const Scalar r = x.norm();
  if (r == Scalar(1)) throw DomainError("psi_gradient: x on the inclusion interface |x| = 1");
  if (r < Scalar(1)) return K * e;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> n = x / r;
  return K / std::pow(r, d) * (e - Scalar(d) * n.dot(e) * n);
}

/// Â₂ = (β - α)(1 + K) Id, cross-checked against cm_amplitude.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hatA2_isotropic(Scalar alpha, Scalar beta, int d) {
  const Scalar via_field = (beta - alpha) * (Scalar(1) + dipole_K(alpha, beta, d));
  const Scalar direct = cm_amplitude(alpha, beta, d);
  using std::abs;
  if (abs(via_field - direct) > Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                                    (abs(direct) + abs(beta - alpha) + Scalar(1)))
    throw std::logic_error("hatA2_isotropic: amplitude identity violated");
  return via_field * Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(d, d);
}

/// A₁ + φ Â₂.
template <typename DerivedA, typename DerivedH>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> cm_prediction(
    const Eigen::MatrixBase<DerivedA>& A1, const Eigen::MatrixBase<DerivedH>& hatA2,
    typename DerivedA::Scalar phi) {
  if (!(phi >= 0 && phi <= 1)) throw DomainError("cm_prediction: volume fraction outside [0, 1]");
  return A1 + phi * hatA2;
}

/// Isotropic Clausius–Mossotti prediction αId + φ Â₂.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cm_prediction(Scalar alpha, Scalar beta, int d,
                                                                    Scalar phi) {
  const auto A1 = (alpha * Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(d, d)).eval();
  return cm_prediction(A1, hatA2_isotropic(alpha, beta, d), phi);
}

/// Â₂ for the phase model: closed form when isotropic, otherwise `numeric`
/// must be supplied.
Eigen::MatrixXd hatA2_for(const PhaseModel& phases, const Eigen::MatrixXd* numeric = nullptr);

struct HatA2Options {
  std::vector<double> L_levels{16.0, 32.0, 64.0};
  double h = 1.0 / 16.0;  ///< fixed grid step across levels
  SolverConfig solver;
};

struct HatA2Result {
  Eigen::MatrixXd value;       ///< L^{-d}-extrapolated Â₂
  double error_estimate = 0.0;  ///< spread between the last two Richardson estimates
  bool flagged = false;        ///< non-monotone tail
  std::vector<double> L_levels;
  std::vector<Eigen::MatrixXd> per_level;  ///< inclusion-averaged (A₂ - A₁) g per torus size
};

/// Numerical first-order correction: one unit inclusion centered on a grid
/// node of each periodic torus, cell average of (A₂ - A₁)(∇ψ + e) over the
/// rasterized inclusion, Richardson-extrapolated in L^{-d}.
HatA2Result hatA2_numeric(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
                          const HatA2Options& options = {});

}  // namespace dilute
