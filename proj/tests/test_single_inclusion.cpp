#include <cmath>

#include "doctest.h"

#include "dilute/errors.hpp"
#include "dilute/rng.hpp"
#include "dilute/single_inclusion.hpp"

using namespace dilute;

namespace {

Eigen::VectorXd random_unit(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  do {
    for (int i = 0; i < d; ++i) v(i) = rng.uniform(-1, 1);
  } while (v.norm() < 0.1 || v.norm() > 1.0);
  return v / v.norm();
}

}  // namespace

TEST_CASE("dipole constant") {
  CHECK(dipole_K(2.0, 2.0, 3) == 0.0);
  CHECK(dipole_K(1.0, 3.0, 3) == doctest::Approx(-0.4).epsilon(1e-15));
  CHECK(dipole_K(1.0, 2.0, 2) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(dipole_K(0.0, 1.0, 2), DomainError);
  CHECK_THROWS_AS(dipole_K(1.0, -1.0, 2), DomainError);
  // K ∈ (-1, 1/(d-1)), sign(K) = sign(α - β)
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = std::exp(rng.uniform(-5, 5)), b = std::exp(rng.uniform(-5, 5));
    for (int d : {2, 3}) {
      const double K = dipole_K(a, b, d);
      CHECK(K > -1.0);
      CHECK(K < 1.0 / (d - 1));
      CHECK((K > 0) == (a > b));
    }
  }
}

TEST_CASE("hatA2 isotropic and CM prediction") {
  CHECK(hatA2_isotropic(1.0, 3.0, 3).isApprox(1.2 * Eigen::MatrixXd::Identity(3, 3), 1e-15));
  CHECK(hatA2_isotropic(2.0, 2.0, 2).norm() == 0.0);
  CHECK(cm_amplitude(1.0, 2.0, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(cm_prediction(1.0, 3.0, 3, 0.01).isApprox(1.012 * Eigen::MatrixXd::Identity(3, 3), 1e-15));
  CHECK(cm_prediction(1.5, 3.0, 2, 0.0) == 1.5 * Eigen::MatrixXd::Identity(2, 2));
  CHECK(std::abs(cm_amplitude(1.0, 1e6, 3) - 3.0) < 1e-5);
  CHECK_THROWS_AS(cm_prediction(1.0, 2.0, 2, 1.5), DomainError);
  CHECK_THROWS_AS(cm_prediction(1.0, 2.0, 2, -0.1), DomainError);
  // d = 1 accepted by the closed forms: amplitude α(β-α)/β, i.e. the harmonic-mean slope
  CHECK(cm_amplitude(1.0, 2.0, 1) == doctest::Approx(0.5));
  // long double instantiation
  CHECK(static_cast<double>(dipole_K<long double>(1.0L, 3.0L, 3)) == doctest::Approx(-0.4));
}

TEST_CASE("hatA2_for needs numeric input for anisotropic phases") {
  const auto iso = PhaseModel::from_scalars(1, 2, 2);
  CHECK(hatA2_for(iso).isApprox(hatA2_isotropic(1.0, 2.0, 2)));
  Eigen::MatrixXd A2(2, 2);
  A2 << 2, 0, 0, 3;
  const auto aniso = PhaseModel::from_matrices(Eigen::MatrixXd::Identity(2, 2), A2);
  CHECK_THROWS_AS(hatA2_for(aniso), ConfigError);
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
  CHECK(hatA2_for(aniso, &h) == h);
}

TEST_CASE("psi gradient: interior, exterior bound, interface") {
  Rng rng(17);
  for (int d : {2, 3}) {
    const double a = 1.0, b = 2.5;
    const double K = dipole_K(a, b, d);
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd e = random_unit(rng, d);
      const Eigen::VectorXd n = random_unit(rng, d);
      const Eigen::VectorXd inner = 0.7 * n;
      CHECK((psi_gradient(inner, e, a, b) - K * e).norm() < 1e-15);
      const double r = 1.0 + rng.uniform(0.0, 10.0) + 1e-6;
      const Eigen::VectorXd outer = r * n;
      CHECK(psi_gradient(outer, e, a, b).norm() <= std::abs(K) * d * std::pow(r, -d) * (1 + 1e-14));
    }
    Eigen::VectorXd on = Eigen::VectorXd::Zero(d);
    on(0) = 1.0;
    CHECK_THROWS_AS(psi_gradient(on, on, a, b), DomainError);
  }
}
