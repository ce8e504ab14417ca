#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "dilute/errors.hpp"
#include "dilute/grid_field.hpp"
#include "dilute/microstructure.hpp"
#include "dilute/rng.hpp"

using namespace dilute;
using fixtures::points;

TEST_CASE("min_separation: sup-norm examples") {
  CHECK(min_separation(points(2, 64, {{0, 0}, {5, 1}})) == doctest::Approx(5.0));
  CHECK(min_separation(points(2, 64, {{1, 1}, {63, 62}})) == doctest::Approx(3.0));  // wraps
  CHECK(std::isinf(min_separation(points(2, 64, {{1, 1}}))));
  CHECK(std::isinf(min_separation(points(2, 64, {}))));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = sample_matern2(0.1, 3.0, {2, 64.0}, s);
    CHECK(min_separation(p) >= 3.0 / std::sqrt(2.0));
    const auto q = sample_matern2(0.05, 3.0, {3, 24.0}, s);
    CHECK(min_separation(q) >= 3.0 / std::sqrt(3.0));
  }
}

TEST_CASE("rho separations and well-separated flag") {
  auto r = rho_separations(points(2, 64, {{10, 10}, {16, 10}}));
  CHECK(r(0) == doctest::Approx(3.0));
  CHECK(r(1) == doctest::Approx(3.0));
  CHECK(well_separated(r(0)));
  r = rho_separations(points(2, 64, {{10, 10}, {13.9, 10}}));
  CHECK(r(0) == doctest::Approx(1.95));
  CHECK_FALSE(well_separated(r(1)));
  const auto lattice = sample_jittered_lattice(8.0, 0.0, {2, 64.0}, 1);
  const auto rl = rho_separations(lattice);
  for (Eigen::Index i = 0; i < rl.size(); ++i) CHECK(rl(i) == doctest::Approx(4.0));
}

TEST_CASE("cluster decomposition") {
  const auto chain = points(2, 64, {{10, 10}, {13.5, 10}, {17, 10}, {20.5, 10}, {40, 40}});
  const auto c = cluster_decomposition(chain);
  CHECK(c.count() == 2);
  CHECK(c.members[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(c.singleton(4));
  // exactly 4 apart: strict inequality does not merge
  CHECK(cluster_decomposition(points(2, 64, {{10, 10}, {14, 10}})).count() == 2);
  // across the periodic boundary
  CHECK(cluster_decomposition(points(2, 64, {{0.5, 10}, {63, 10}})).count() == 1);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = sample_matern2(0.1, 4.2, {2, 64.0}, s);
    CHECK(cluster_decomposition(p).count() == static_cast<std::size_t>(p.size()));
  }
}

TEST_CASE("clusters partition indices; singleton iff rho >= 2 on the corpus") {
  for (const auto& s : fixtures::corpus()) {
    const auto c = cluster_decomposition(s);
    std::vector<int> seen(static_cast<std::size_t>(s.size()), 0);
    for (const auto& m : c.members)
      for (int i : m) ++seen[static_cast<std::size_t>(i)];
    for (int v : seen) REQUIRE(v == 1);
    const auto rho = rho_separations(s);
    for (Eigen::Index n = 0; n < s.size(); ++n) REQUIRE(c.singleton(static_cast<int>(n)) == well_separated(rho(n)));
  }
}

TEST_CASE("monotonicity: adding a point never increases rho nor splits clusters") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = sample_poisson(0.03, {2, 48.0}, seed);
    const auto rho0 = rho_separations(s);
    const auto c0 = cluster_decomposition(s);
    Rng rng(seed + 100);
    s.centers.conservativeResize(Eigen::NoChange, s.size() + 1);
    s.centers.col(s.size() - 1) << rng.uniform(0, 48), rng.uniform(0, 48);
    const auto rho1 = rho_separations(s);
    const auto c1 = cluster_decomposition(s);
    for (Eigen::Index i = 0; i < rho0.size(); ++i) CHECK(rho1(i) <= rho0(i));
    for (const auto& m : c0.members)
      for (int i : m) CHECK(c1.label[static_cast<std::size_t>(i)] == c1.label[static_cast<std::size_t>(m[0])]);
  }
}

TEST_CASE("translation invariance of the geometry") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = sample_poisson(0.04, {2, 32.0}, seed);
    auto t = s;
    // grid-commensurate shift keeps the raster identical up to a cyclic permutation
    const double shift[2] = {7.25, 30.5};
    for (Eigen::Index k = 0; k < t.size(); ++k)
      for (int i = 0; i < 2; ++i) t.centers(i, k) = std::fmod(t.centers(i, k) + shift[i], 32.0);
    CHECK(min_separation(t) == doctest::Approx(min_separation(s)).epsilon(1e-12));
    const auto r0 = rho_separations(s), r1 = rho_separations(t);
    for (Eigen::Index k = 0; k < r0.size(); ++k) CHECK(r1(k) == doctest::Approx(r0(k)).epsilon(1e-12));
    auto sizes = [](const Clusters& c) {
      std::vector<std::size_t> v;
      for (const auto& m : c.members) v.push_back(m.size());
      std::sort(v.begin(), v.end());
      return v;
    };
    CHECK(sizes(cluster_decomposition(s)) == sizes(cluster_decomposition(t)));
    CHECK(volume_fraction_raster(t, 256) == volume_fraction_raster(s, 256));
  }
}

TEST_CASE("volume fraction") {
  CHECK(volume_fraction_raster(points(2, 64, {}), 256) == 0.0);
  CHECK(volume_fraction_montecarlo(points(2, 64, {}), 1000, 1) == 0.0);
  const auto one = points(2, 64, {{32, 32}});
  const double exact = std::numbers::pi / (64.0 * 64.0);
  CHECK(std::abs(volume_fraction_raster(one, 1024) / exact - 1) < 0.02);
  // disjoint inclusions: φ ≈ n|B|/L^d
  const auto lattice = sample_jittered_lattice(8.0, 0.0, {2, 64.0}, 9);
  CHECK(volume_fraction_raster(lattice, 1024) == doctest::Approx(64 * exact).epsilon(0.02));
  const double mc = volume_fraction_montecarlo(lattice, 1'000'000, 5);
  CHECK(std::abs(mc - 64 * exact) < 4 * std::sqrt(64 * exact / 1e6));
  // raster fraction equals the field's inclusion fraction exactly
  const auto s = sample_poisson(0.03, {2, 32.0}, 4);
  const auto f = rasterize(s, PhaseModel::from_scalars(1, 2, 2), 256);
  CHECK(f.inclusion_fraction() == volume_fraction_raster(s, 256));
}

TEST_CASE("raster volume fraction converges at first order in h") {
  // single inclusion centered on a grid node, L = 16
  const auto one = points(2, 16, {{8, 8}});
  const double exact = std::numbers::pi / 256.0;
  std::vector<double> err;
  for (int N : {256, 512, 1024}) err.push_back(std::abs(volume_fraction_raster(one, N) - exact));
  CHECK(err[2] < err[0]);
  CHECK(err[2] / exact < 0.002);
  // first order: error bounded by the boundary band, C h with C fixed
  for (std::size_t i = 0; i < err.size(); ++i) CHECK(err[i] < 2.0 * std::numbers::pi * (16.0 / (256 << i)) / 256.0);
}

TEST_CASE("rasterize: guard and empty sample") {
  const auto phases = PhaseModel::from_scalars(1, 3, 2);
  CHECK_THROWS_AS(rasterize(points(2, 64, {}), phases, 128), ConfigError);  // h = 1/2
  const auto f = rasterize(points(2, 16, {}), phases, 64);
  CHECK(f.inclusion_fraction() == 0.0);
  CHECK(f.cells() == 64u * 64u);
}

TEST_CASE("lambda2 estimator") {
  SUBCASE("Poisson ensemble") {
    std::vector<PointSample> ens;
    for (std::uint64_t s = 0; s < 200; ++s) ens.push_back(sample_poisson(0.02, {2, 128.0}, s));
    const auto est = estimate_lambda2(ens, 0.0, {.bin_width = 8.0});
    CHECK(est.value / 4e-4 >= 0.8);
    CHECK(est.value / 4e-4 <= 1.2);
    CHECK_FALSE(est.exceeds_upper);
    CHECK(est.intensity == doctest::Approx(0.02).epsilon(0.02));
  }
  SUBCASE("exact lattice: bins off the displacement set are empty") {
    std::vector<PointSample> ens(10, sample_jittered_lattice(8.0, 0.0, {2, 64.0}, 1));
    const auto est = estimate_lambda2(ens, 8.0);
    // the sup is over bins containing lattice displacements: one point per unit-intensity cube
    CHECK(est.value == doctest::Approx(1.0 / 64 / 64).epsilon(1e-12));
    // a bin side that misses every lattice vector except 0 gives nothing
    const auto off = estimate_lambda2(ens, 0.0, {.bin_width = 3.0, .r_max = 7.5});
    CHECK(off.value == 0.0);
  }
  SUBCASE("errors") {
    std::vector<PointSample> none;
    CHECK_THROWS(estimate_lambda2(none, 1.0));
    std::vector<PointSample> one{sample_poisson(0.01, {2, 64.0}, 1)};
    CHECK_THROWS_AS(estimate_lambda2(one, 1.0, {.bin_width = 1.0, .r_max = 40.0}), ConfigError);
  }
}

TEST_CASE("geometry report") {
  const auto s = sample_poisson(0.03, {2, 64.0}, 8);
  GeometryOptions opt;
  opt.method = GeometryOptions::Method::raster;
  opt.raster_n = 512;
  const auto g = geometry_report(s, opt);
  CHECK(g.singleton_rho_consistent());
  CHECK(g.volume_fraction == volume_fraction_raster(s, 512));
  CHECK(g.volume_fraction >= 0.0);
  CHECK(g.volume_fraction <= 1.0);
  std::ostringstream os;
  write_geometry_report(os, g);
  CHECK(os.str().find("singleton_rho_consistent = true") != std::string::npos);
  CHECK(geometry_csv_row(g).find(',') != std::string::npos);
}
