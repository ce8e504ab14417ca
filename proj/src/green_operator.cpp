#include "dilute/green_operator.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "dilute/errors.hpp"

namespace dilute {
namespace {

// FFTW's planner is not thread-safe and keeps global thread settings.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void init_fftw_threads() {
  static std::once_flag once;
  std::call_once(once, [] { fftw_init_threads(); });
}

}  // namespace

struct GradientProjection::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

GradientProjection::GradientProjection(int d, int N, int threads)
    : d_(d), N_(N), plans_(std::make_unique<Plans>()) {
  if (d != 2 && d != 3) throw ConfigError("projection: d must be 2 or 3");
  if (N < 2 || N % 2 != 0) throw ConfigError("projection: N must be even");
  cells_ = 1;
  for (int k = 0; k < d; ++k) cells_ *= static_cast<std::size_t>(N);
  spectral_ = cells_ / N * (N / 2 + 1);

  diff_.resize(N);
  avg_.resize(N);
  for (int m = 0; m < N; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / N;
    std::complex<double> z{std::cos(theta), std::sin(theta)};
    if (m == 0) z = {1.0, 0.0};
    if (2 * m == N) z = {-1.0, 0.0};
    diff_[m] = z - 1.0;
    avg_[m] = (1.0 + z) / 2.0;
  }

  init_fftw_threads();
  std::lock_guard lock(planner_mutex());
  plans_->real = fftw_alloc_real(cells_ * d);
  plans_->spec = fftw_alloc_complex(spectral_ * d);
  int n[3] = {N, N, N};
  fftw_plan_with_nthreads(threads > 0 ? threads : 1);
  // FFTW_ESTIMATE keeps plans, and therefore results, reproducible.
  plans_->forward = fftw_plan_many_dft_r2c(d, n, d, plans_->real, nullptr, 1, static_cast<int>(cells_),
                                           plans_->spec, nullptr, 1, static_cast<int>(spectral_),
                                           FFTW_ESTIMATE);
  plans_->backward = fftw_plan_many_dft_c2r(d, n, d, plans_->spec, nullptr, 1, static_cast<int>(spectral_),
                                            plans_->real, nullptr, 1, static_cast<int>(cells_),
                                            FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->backward) throw std::runtime_error("projection: FFTW planning failed");
}

GradientProjection::~GradientProjection() = default;

void GradientProjection::apply(Eigen::Ref<Eigen::MatrixXd> field) {
  if (static_cast<std::size_t>(field.rows()) != cells_ || field.cols() != d_)
    throw ConfigError("projection: field shape mismatch");
  for (int c = 0; c < d_; ++c)
    std::memcpy(plans_->real + c * cells_, field.col(c).data(), cells_ * sizeof(double));
  fftw_execute(plans_->forward);

  auto* spec = reinterpret_cast<std::complex<double>*>(plans_->spec);
  const int half = N_ / 2 + 1;
  const double scale = 1.0 / static_cast<double>(cells_);
  std::complex<double> k[3];
  std::size_t idx = 0;
  const int outer0 = N_;
  const int outer1 = d_ == 3 ? N_ : 1;
  for (int a = 0; a < outer0; ++a) {
    for (int b = 0; b < outer1; ++b) {
      for (int c = 0; c < half; ++c, ++idx) {
        int m[3];
        if (d_ == 2) {
          m[0] = a;
          m[1] = c;
        } else {
          m[0] = a;
          m[1] = b;
          m[2] = c;
        }
        double norm2 = 0.0;
        for (int j = 0; j < d_; ++j) {
          std::complex<double> kj = diff_[m[j]];
          for (int l = 0; l < d_; ++l)
            if (l != j) kj *= avg_[m[l]];
          k[j] = kj;
          norm2 += std::norm(kj);
        }
        if (norm2 == 0.0) {
          for (int j = 0; j < d_; ++j) spec[j * spectral_ + idx] = 0.0;
          continue;
        }
        std::complex<double> s = 0.0;
        for (int j = 0; j < d_; ++j) s += std::conj(k[j]) * spec[j * spectral_ + idx];
        s *= scale / norm2;
        for (int j = 0; j < d_; ++j) spec[j * spectral_ + idx] = k[j] * s;
      }
    }
  }
  fftw_execute(plans_->backward);
  for (int c = 0; c < d_; ++c)
    std::memcpy(field.col(c).data(), plans_->real + c * cells_, cells_ * sizeof(double));
}

}  // namespace dilute
