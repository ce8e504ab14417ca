#include "dilute/neighbors.hpp"

#include <algorithm>

namespace dilute {

CellList::CellList(const Eigen::MatrixXd& points, double L, double reach)
    : points_(points), L_(L), reach_(reach), d_(static_cast<int>(points.rows())) {
  m_ = reach > 0.0 ? static_cast<int>(std::floor(L / reach)) : 1;
  // Cap the bucket count so sparse samples do not allocate huge tables.
  const double max_buckets = std::max<double>(27.0, 4.0 * static_cast<double>(points.cols()));
  while (m_ >= 3 && std::pow(m_, d_) > max_buckets) --m_;
  if (m_ < 3) m_ = 1;
  if (m_ >= 3) reach_ = L / m_;

  const int buckets = m_ == 1 ? 1 : static_cast<int>(std::pow(m_, d_));
  std::vector<int> owner(points.cols());
  std::vector<int> counts(buckets + 1, 0);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    std::array<int, 3> c{0, 0, 0};
    if (m_ >= 3)
      for (int k = 0; k < d_; ++k) c[k] = cell_coord(points(k, i));
    owner[i] = flat(c);
    ++counts[owner[i] + 1];
  }
  for (int b = 0; b < buckets; ++b) counts[b + 1] += counts[b];
  cell_start_ = counts;
  cell_items_.assign(points.cols(), 0);
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (Eigen::Index i = 0; i < points.cols(); ++i) cell_items_[fill[owner[i]]++] = static_cast<int>(i);
}

int CellList::cell_coord(double x) const {
  int c = static_cast<int>(std::floor(x / L_ * m_));
  return std::clamp(c, 0, m_ - 1);
}

int CellList::flat(const std::array<int, 3>& c) const {
  if (m_ == 1) return 0;
  return d_ == 2 ? c[0] * m_ + c[1] : (c[0] * m_ + c[1]) * m_ + c[2];
}

}  // namespace dilute
