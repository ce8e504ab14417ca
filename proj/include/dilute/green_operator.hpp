#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace dilute {

/// L²-orthogonal projection onto zero-mean discrete gradient fields on a
/// periodic N^d grid.
///
/// The potential lives on cell corners and its gradient on cell centers
/// (rotated stencil: a difference along axis j averaged over the 2^{d-1}
/// corner pairs of the cell). In Fourier space the gradient symbol is
///   k_j(θ) = (e^{iθ_j} - 1) Π_{l≠j} (1 + e^{iθ_l}) / 2,
/// and the projection is k k* / |k|², zero where k vanishes. The operator is
/// the Green operator α₀Γ⁰ of the reference medium α₀Id; it does not depend
/// on α₀. The grid step cancels and is not needed.
///
/// Not thread-safe: each solve owns one instance.
class GradientProjection {
 public:
  GradientProjection(int d, int N, int threads = 1);
  ~GradientProjection();
  GradientProjection(const GradientProjection&) = delete;
  GradientProjection& operator=(const GradientProjection&) = delete;

  int dim() const { return d_; }
  int size() const { return N_; }
  std::size_t cells() const { return cells_; }

  /// field: cells × d, one contiguous column per component. Projected in place.
  void apply(Eigen::Ref<Eigen::MatrixXd> field);

 private:
  struct Plans;
  int d_;
  int N_;
  std::size_t cells_;
  std::size_t spectral_;
  std::vector<std::complex<double>> diff_;  // e^{iθ} - 1 per axis index
  std::vector<std::complex<double>> avg_;   // (1 + e^{iθ}) / 2 per axis index
  std::unique_ptr<Plans> plans_;
};

}  // namespace dilute
