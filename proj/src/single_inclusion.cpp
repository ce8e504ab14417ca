#include "dilute/single_inclusion.hpp"

#include <cmath>

#include "dilute/richardson.hpp"

namespace dilute {

Eigen::MatrixXd hatA2_for(const PhaseModel& phases, const Eigen::MatrixXd* numeric) {
  if (phases.isotropic) return hatA2_isotropic(phases.isotropic->alpha, phases.isotropic->beta, phases.dim());
  if (!numeric) throw ConfigError("anisotropic phases need a numerically computed hatA2");
  if (numeric->rows() != phases.dim() || numeric->cols() != phases.dim())
    throw ConfigError("hatA2: matrix size does not match the phases");
  return *numeric;
}

HatA2Result hatA2_numeric(const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2, const HatA2Options& options) {
  const PhaseModel phases = PhaseModel::from_matrices(A1, A2);
  const int d = phases.dim();
  if (d != 2 && d != 3) throw ConfigError("hatA2_numeric: solver path needs d = 2 or 3");
  if (options.L_levels.size() < 2) throw ConfigError("hatA2_numeric: need at least two torus sizes");
  if (!(options.h > 0.0)) throw ConfigError("hatA2_numeric: grid step must be > 0");

  HatA2Result result;
  std::vector<double> x;
  for (double L : options.L_levels) {
    const double cells = L / options.h;
    const int N = static_cast<int>(std::lround(cells));
    if (std::abs(cells - N) > 1e-9 || N % 2 != 0)
      throw ConfigError("hatA2_numeric: L/h must be an even integer");
    PointSample one{TorusSpec{d, L}, Eigen::MatrixXd::Constant(d, 1, L / 2.0), 0, PoissonProcess{1.0 / std::pow(L, d)}};
    const GridField field = rasterize(one, phases, N);
    SolverConfig cfg = options.solver;
    cfg.keep_fields = false;
    const CorrectorSolution sol = effective_tensor(field, cfg);
    const double phi = field.inclusion_fraction();
    result.per_level.push_back((sol.Abar - phases.A1) / phi);
    result.L_levels.push_back(L);
    x.push_back(std::pow(L, -d));
  }

  const auto estimates = richardson_sequence(x, result.per_level);
  result.value = estimates.back();
  result.error_estimate = estimates.size() >= 2 ? (estimates.back() - estimates[estimates.size() - 2]).norm()
                                                 : (result.per_level.back() - result.value).norm();
  const double floor = 1e3 * options.solver.tol * (result.value.norm() + 1.0);
  result.flagged = !monotone_tail(result.per_level, [](const Eigen::MatrixXd& m) { return m.norm(); }, floor);
  return result;
}

}  // namespace dilute
