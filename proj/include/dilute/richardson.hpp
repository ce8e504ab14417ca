#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dilute {

/// First-order Richardson step: given v(x) = v₀ + c x + o(x) sampled at x1 != x2,
/// returns the linear extrapolation to x = 0. Works for scalars and Eigen
/// expressions alike.
template <typename T>
T richardson_to_zero(double x1, const T& v1, double x2, const T& v2) {
  if (x1 == x2) throw std::invalid_argument("richardson: abscissae must differ");
  return T((x1 * v2 - x2 * v1) / (x1 - x2));
}

/// Successive Richardson estimates from consecutive level pairs, ordered as
/// the input (levels sorted by decreasing x, i.e. coarse to fine).
template <typename T>
std::vector<T> richardson_sequence(const std::vector<double>& x, const std::vector<T>& v) {
  if (x.size() != v.size() || x.size() < 2) throw std::invalid_argument("richardson: need >= 2 levels");
  std::vector<T> out;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) out.push_back(richardson_to_zero(x[i], v[i], x[i + 1], v[i + 1]));
  return out;
}

/// True when successive increments shrink in magnitude (asymptotic regime).
/// `norm` maps a difference to a non-negative size; increments at or below
/// `floor` count as converged.
template <typename T, typename Norm>
bool monotone_tail(const std::vector<T>& v, Norm norm, double floor = 0.0) {
  for (std::size_t i = 0; i + 2 < v.size(); ++i) {
    const double a = norm(v[i + 1] - v[i]);
    const double b = norm(v[i + 2] - v[i + 1]);
    if (b > floor && !(b < a)) return false;
  }
  return true;
}

}  // namespace dilute
