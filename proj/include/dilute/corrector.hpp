#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dilute/grid_field.hpp"
#include "dilute/point_process.hpp"

namespace dilute {

enum class Scheme { fixed_point, conjugate_gradient };

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct SolverConfig {
  Scheme scheme = Scheme::conjugate_gradient;
  /// Reference conductivity α₀; 0 selects the scheme default ((α+β)/2 for
  /// fixed point, α for the Krylov scheme).
  double alpha0 = 0.0;
  double tol = 1e-8;
  int max_iter = 1000;
  int threads = 1;  ///< workers inside one solve; 0 means worker_count()
  bool keep_fields = true;

  void validate() const;
};

/// Reference conductivity actually used for `phases` under `cfg`.
double resolve_alpha0(const SolverConfig& cfg, const PhaseModel& phases);

struct DirectionSolve {
  Eigen::VectorXd e;
  Eigen::MatrixXd gradient;  ///< cells × d: ∇φ_e + e; empty when keep_fields is off
  Eigen::VectorXd mean_flux; ///< cell average of A(∇φ_e + e)
  std::vector<double> residuals;  ///< ||P[A g]|| / (sqrt(cells) |<A e>|) per iterate
  int iterations = 0;
  double final_residual = 0.0;   ///< stopping metric, normalized by the final mean flux
};

/// Periodic corrector for direction e. The unknown is the zero-mean gradient
/// part τ of g = e + τ; the equilibrium equation is P[A g] = 0 with P the
/// gradient projection. Convergence is measured by the relative residual
/// ||P[A g]|| / (sqrt(cells) |<A g>|), the L² norm of the non-equilibrated
/// part of the flux.
///
/// Schemes: fixed point τ ← τ - P[A g]/α₀ (basic Green-operator iteration);
/// conjugate_gradient runs the conjugate-residual recurrence for symmetric
/// phases (residual norm non-increasing) and restarted GCR otherwise.
/// Throws NonConvergenceError past max_iter.
DirectionSolve solve_corrector(const GridField& field, const Eigen::VectorXd& e, const SolverConfig& cfg);

struct CorrectorSolution {
  std::vector<DirectionSolve> directions;  ///< one per unit vector e_k
  Eigen::MatrixXd Abar;                    ///< column k = <A g_k>
  double asymmetry = 0.0;                  ///< ||Ā - Āᵀ||_F before symmetrization
  bool symmetrized = false;
  double alpha0 = 0.0;
  Scheme scheme = Scheme::conjugate_gradient;
};

/// Ā_R for the field. Symmetric phases: Ā is symmetrized and the asymmetry
/// reported. Non-symmetric phases: the full matrix is returned.
CorrectorSolution effective_tensor(const GridField& field, const SolverConfig& cfg);

struct ClusterFlux {
  std::vector<int> members;
  std::size_t cells = 0;
  Eigen::MatrixXd flux;        ///< column k: (1/|torus|) ∫_cluster (A₂ - A₁) g_k
  Eigen::MatrixXd normalized;  ///< column k: average of (A₂ - A₁) g_k over the cluster's cells
};

struct InclusionFlux {
  Eigen::MatrixXd global;  ///< column k: <1_B (A₂ - A₁) g_k>, equals Ā e_k - A₁ e_k
  std::vector<ClusterFlux> clusters;
};

/// Inclusion-flux decomposition of Ā - A₁, globally and per cluster.
/// Requires a solution computed with keep_fields and a field rasterized from
/// `inclusions`.
InclusionFlux inclusion_flux_average(const GridField& field, const CorrectorSolution& solution,
                                     const PointSample& inclusions);

}  // namespace dilute
