#pragma once

#include <cmath>

#include <Eigen/Core>

#include "dilute/errors.hpp"

namespace dilute {

/// Periodic box [0, L)^d.
struct TorusSpec {
  int d = 2;
  double L = 64.0;

  double volume() const { return std::pow(L, d); }

  void validate() const {
    if (d != 2 && d != 3) throw ConfigError("torus: d must be 2 or 3");
    if (!(L >= 8.0) || !std::isfinite(L)) throw ConfigError("torus: L must be >= 8");
  }

  friend bool operator==(const TorusSpec&, const TorusSpec&) = default;
};

/// Minimum-image representative of a coordinate difference, in [-L/2, L/2].
inline double wrap_difference(double dx, double L) { return dx - L * std::round(dx / L); }

/// Maps a coordinate into [0, L).
inline double wrap_coordinate(double x, double L) {
  double y = x - L * std::floor(x / L);
  return y >= L ? 0.0 : y;
}

/// Minimum-image displacement b - a on the torus.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> torus_displacement(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, double L) {
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> out(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) out[k] = wrap_difference(b[k] - a[k], L);
  return out;
}

}  // namespace dilute
