#pragma once

#include <initializer_list>
#include <vector>

#include "dilute/point_process.hpp"

namespace fixtures {

inline dilute::PointSample points(int d, double L, std::initializer_list<std::initializer_list<double>> xs) {
  dilute::PointSample s;
  s.torus = {d, L};
  s.process = dilute::PoissonProcess{1.0};
  s.centers.resize(d, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (const auto& x : xs) {
    int i = 0;
    for (double v : x) s.centers(i++, k) = v;
    ++k;
  }
  return s;
}

/// Mixed corpus of samples from every process family, d = 2 and 3.
inline std::vector<dilute::PointSample> corpus() {
  using namespace dilute;
  std::vector<PointSample> out;
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    out.push_back(sample_poisson(0.02 + 0.0005 * static_cast<double>(seed), {2, 64.0}, seed));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    out.push_back(sample_poisson(0.01, {3, 24.0}, 1000 + seed));
    out.push_back(sample_matern2(0.05, 3.0 + 0.1 * static_cast<double>(seed), {2, 64.0}, 2000 + seed));
    out.push_back(sample_matern2(0.01, 4.2, {3, 24.0}, 3000 + seed));
    out.push_back(sample_jittered_lattice(8.0, 0.25 * static_cast<double>(seed % 16), {2, 64.0}, 4000 + seed));
    out.push_back(sample_jittered_lattice(4.0, 0.1 * static_cast<double>(seed % 10), {3, 16.0}, 5000 + seed));
  }
  return out;
}

}  // namespace fixtures
