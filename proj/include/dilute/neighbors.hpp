#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "dilute/torus.hpp"

namespace dilute {

/// Periodic cell list over the columns of a d×n point matrix. Cells have side
/// at least `reach`, so every pair closer than `reach` lies in neighbouring
/// cells. With fewer than three cells per side the list degenerates to a
/// single bucket and queries fall back to an all-pairs scan.
class CellList {
 public:
  CellList(const Eigen::MatrixXd& points, double L, double reach);

  double reach() const { return reach_; }
  int cells_per_side() const { return m_; }

  /// Calls fn(i, j, disp) once per unordered pair i < j with Euclidean
  /// minimum-image distance < radius, where disp = x_j - x_i. Requires
  /// radius <= reach(). Pairs are visited in a deterministic order.
  template <typename Fn>
  void for_each_pair(double radius, Fn&& fn) const;

  /// Calls fn(j, disp) for every point j with |x_j - x| < radius, disp = x_j - x.
  template <typename Fn>
  void for_each_near(const Eigen::Ref<const Eigen::VectorXd>& x, double radius, Fn&& fn) const;

 private:
  int cell_coord(double x) const;
  int flat(const std::array<int, 3>& c) const;

  const Eigen::MatrixXd& points_;
  double L_;
  double reach_;
  int d_;
  int m_;  // cells per side
  std::vector<int> cell_start_;
  std::vector<int> cell_items_;
};

inline double squared_torus_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                                     const Eigen::Ref<const Eigen::VectorXd>& b, double L) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    double dx = wrap_difference(b[k] - a[k], L);
    s += dx * dx;
  }
  return s;
}

template <typename Fn>
void CellList::for_each_pair(double radius, Fn&& fn) const {
  const Eigen::Index n = points_.cols();
  const double r2 = radius * radius;
  Eigen::VectorXd disp(d_);
  auto visit = [&](Eigen::Index i, Eigen::Index j) {
    double s = 0.0;
    for (int k = 0; k < d_; ++k) {
      disp[k] = wrap_difference(points_(k, j) - points_(k, i), L_);
      s += disp[k] * disp[k];
    }
    if (s < r2) fn(i, j, disp);
  };
  if (m_ < 3) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) visit(i, j);
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    std::array<int, 3> c{0, 0, 0};
    for (int k = 0; k < d_; ++k) c[k] = cell_coord(points_(k, i));
    std::array<int, 3> lo{-1, -1, -1}, hi{1, 1, 1};
    for (int k = d_; k < 3; ++k) lo[k] = hi[k] = 0;
    for (int a = lo[0]; a <= hi[0]; ++a)
      for (int b = lo[1]; b <= hi[1]; ++b)
        for (int e = lo[2]; e <= hi[2]; ++e) {
          std::array<int, 3> nc{(c[0] + a + m_) % m_, (c[1] + b + m_) % m_,
                                d_ == 3 ? (c[2] + e + m_) % m_ : 0};
          int f = flat(nc);
          for (int t = cell_start_[f]; t < cell_start_[f + 1]; ++t) {
            Eigen::Index j = cell_items_[t];
            if (j > i) visit(i, j);
          }
        }
  }
}

template <typename Fn>
void CellList::for_each_near(const Eigen::Ref<const Eigen::VectorXd>& x, double radius,
                             Fn&& fn) const {
  const double r2 = radius * radius;
  Eigen::VectorXd disp(d_);
  auto visit = [&](Eigen::Index j) {
    double s = 0.0;
    for (int k = 0; k < d_; ++k) {
      disp[k] = wrap_difference(points_(k, j) - x[k], L_);
      s += disp[k] * disp[k];
    }
    if (s < r2) fn(j, disp);
  };
  if (m_ < 3) {
    for (Eigen::Index j = 0; j < points_.cols(); ++j) visit(j);
    return;
  }
  std::array<int, 3> c{0, 0, 0};
  for (int k = 0; k < d_; ++k) c[k] = cell_coord(wrap_coordinate(x[k], L_));
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int e = (d_ == 3 ? -1 : 0); e <= (d_ == 3 ? 1 : 0); ++e) {
        std::array<int, 3> nc{(c[0] + a + m_) % m_, (c[1] + b + m_) % m_,
                              d_ == 3 ? (c[2] + e + m_) % m_ : 0};
        int f = flat(nc);
        for (int t = cell_start_[f]; t < cell_start_[f + 1]; ++t) visit(cell_items_[t]);
      }
}

}  // namespace dilute
