#include "dilute/phase_model.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "dilute/errors.hpp"

namespace dilute {

double ellipticity_constant(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return lo;
  return std::min(lo, 1.0 / hi);
}

PhaseModel PhaseModel::from_scalars(double alpha, double beta, int d) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("conductivities must be positive");
  if (d < 1) throw DomainError("dimension must be >= 1");
  return from_matrices(alpha * Eigen::MatrixXd::Identity(d, d), beta * Eigen::MatrixXd::Identity(d, d));
}

PhaseModel PhaseModel::from_matrices(Eigen::MatrixXd A1, Eigen::MatrixXd A2) {
  if (A1.rows() != A1.cols() || A2.rows() != A2.cols() || A1.rows() != A2.rows() || A1.rows() < 1)
    throw ConfigError("phases: A1 and A2 must be square matrices of the same size");
  if (!A1.allFinite() || !A2.allFinite()) throw ConfigError("phases: non-finite entries");
  PhaseModel m;
  m.c0 = std::min(ellipticity_constant(A1), ellipticity_constant(A2));
  if (!(m.c0 > 0.0)) throw ConfigError("phases: A1 and A2 must be strongly elliptic");
  const auto d = A1.rows();
  auto scalar_of = [d](const Eigen::MatrixXd& A) -> std::optional<double> {
    const double s = A(0, 0);
    if ((A - s * Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0) return s;
    return std::nullopt;
  };
  if (auto a = scalar_of(A1), b = scalar_of(A2); a && b) m.isotropic = Isotropic{*a, *b};
  m.A1 = std::move(A1);
  m.A2 = std::move(A2);
  return m;
}

bool PhaseModel::symmetric() const {
  return (A1 - A1.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
         (A2 - A2.transpose()).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace dilute
