#include "dilute/corrector.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dilute/errors.hpp"
#include "dilute/green_operator.hpp"
#include "dilute/microstructure.hpp"
#include "dilute/parallel.hpp"

namespace dilute {

std::string scheme_name(Scheme scheme) {
  return scheme == Scheme::fixed_point ? "fixed_point" : "conjugate_gradient";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "fixed_point") return Scheme::fixed_point;
  if (name == "conjugate_gradient") return Scheme::conjugate_gradient;
  throw ConfigError("scheme: expected fixed_point or conjugate_gradient, got '" + name + "'");
}

void SolverConfig::validate() const {
  if (!(alpha0 >= 0.0)) throw ConfigError("alpha0: reference conductivity must be > 0");
  if (!(tol > 0.0 && tol < 1e-2)) throw ConfigError("tol: must lie in (0, 1e-2)");
  if (max_iter < 1) throw ConfigError("max_iter: must be >= 1");
  if (threads < 0) throw ConfigError("threads: must be >= 0");
}

double resolve_alpha0(const SolverConfig& cfg, const PhaseModel& phases) {
  if (cfg.alpha0 > 0.0) return cfg.alpha0;
  if (cfg.scheme == Scheme::conjugate_gradient) {
    // Scale only; the Krylov iterates do not depend on it.
    return phases.isotropic ? phases.isotropic->alpha : phases.A1.trace() / phases.dim();
  }
  if (phases.isotropic) return 0.5 * (phases.isotropic->alpha + phases.isotropic->beta);
  // Contraction of I - A/α₀ needs ||A - α₀ I||₂ < α₀ for both phases.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto* A : {&phases.A1, &phases.A2}) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(*A);
    hi = std::max(hi, svd.singularValues().maxCoeff());
    const Eigen::MatrixXd sym = 0.5 * (*A + A->transpose());
    lo = std::min(lo, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff());
  }
  double a0 = 0.5 * (lo + hi);
  auto contracts = [&](double a) {
    for (const auto* A : {&phases.A1, &phases.A2}) {
      const Eigen::MatrixXd D = *A - a * Eigen::MatrixXd::Identity(A->rows(), A->cols());
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
      if (!(svd.singularValues().maxCoeff() < a)) return false;
    }
    return true;
  };
  while (!contracts(a0)) a0 *= 1.25;
  return a0;
}

namespace {

/// Pointwise coefficient application and reductions for one field.
class Medium {
 public:
  Medium(const GridField& field, int threads) : field_(field), d_(field.dim()), threads_(threads) {
    for (int p = 0; p < 2; ++p) A_[p] = field.phases.matrix(static_cast<std::uint8_t>(p));
    count_[1] = static_cast<double>(std::count(field.phase.begin(), field.phase.end(), std::uint8_t{1}));
    count_[0] = static_cast<double>(field.cells()) - count_[1];
  }

  std::size_t cells() const { return field_.cells(); }

  /// out = A in, cell by cell.
  void apply(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
    if (d_ == 2) apply_fixed<2>(in, out);
    else apply_fixed<3>(in, out);
  }

  /// out = A (e + in).
  void apply_shifted(const Eigen::VectorXd& e, const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
    Eigen::MatrixXd g = in;
    g.rowwise() += e.transpose();
    apply(g, out);
  }

  /// <A (e + tau)> for zero-mean tau, from per-phase sums.
  Eigen::VectorXd mean_flux(const Eigen::VectorXd& e, const Eigen::MatrixXd& tau) const {
    Eigen::VectorXd sum[2] = {Eigen::VectorXd::Zero(d_), Eigen::VectorXd::Zero(d_)};
    const auto& phase = field_.phase;
    for (int k = 0; k < d_; ++k) {
      const double* t = tau.col(k).data();
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t c = 0; c < phase.size(); ++c) (phase[c] ? s1 : s0) += t[c];
      sum[0][k] = s0;
      sum[1][k] = s1;
    }
    const double n = static_cast<double>(cells());
    return (A_[0] * (count_[0] * e + sum[0]) + A_[1] * (count_[1] * e + sum[1])) / n;
  }

 private:
  template <int D>
  void apply_fixed(const Eigen::MatrixXd& in, Eigen::MatrixXd& out) const {
    Eigen::Matrix<double, D, D> A[2] = {A_[0], A_[1]};
    const auto& phase = field_.phase;
    const double* src[D];
    double* dst[D];
    for (int k = 0; k < D; ++k) {
      src[k] = in.col(k).data();
      dst[k] = out.col(k).data();
    }
    parallel_blocks(phase.size(), threads_, [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) {
        const auto& M = A[phase[c]];
        double v[D];
        for (int k = 0; k < D; ++k) v[k] = src[k][c];
        for (int i = 0; i < D; ++i) {
          double s = 0.0;
          for (int k = 0; k < D; ++k) s += M(i, k) * v[k];
          dst[i][c] = s;
        }
      }
    });
  }

  const GridField& field_;
  int d_;
  int threads_;
  Eigen::MatrixXd A_[2];
  double count_[2];
};

double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) s += a.col(k).dot(b.col(k));
  return s;
}

class Solver {
 public:
  Solver(const GridField& field, const Eigen::VectorXd& e, const SolverConfig& cfg)
      : field_(field),
        e_(e),
        cfg_(cfg),
        threads_(cfg.threads > 0 ? cfg.threads : worker_count()),
        medium_(field, threads_),
        proj_(field.dim(), field.N, threads_),
        n_(field.cells()),
        d_(field.dim()),
        tau_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), d_)) {
    const double flux = medium_.mean_flux(e_, tau_).norm();
    history_scale_ = 1.0 / (std::sqrt(static_cast<double>(n_)) * (flux > 0.0 ? flux : 1.0));
  }

  DirectionSolve run() {
    const bool symmetric = field_.phases.symmetric();
    if (cfg_.scheme == Scheme::fixed_point) fixed_point();
    else if (symmetric) conjugate_residual();
    else gcr();

    DirectionSolve out;
    out.e = e_;
    out.mean_flux = medium_.mean_flux(e_, tau_);
    out.residuals = std::move(history_);
    out.iterations = iterations_;
    out.final_residual = true_residual_;
    if (cfg_.keep_fields) {
      out.gradient = std::move(tau_);
      out.gradient.rowwise() += e_.transpose();
    }
    return out;
  }

 private:
  // T v = P[A v]
  void op(const Eigen::MatrixXd& v, Eigen::MatrixXd& out) {
    medium_.apply(v, out);
    proj_.apply(out);
  }

  // s = P[A (e + tau)]; returns the relative residual.
  double equilibrium(Eigen::MatrixXd& s) {
    medium_.apply_shifted(e_, tau_, s);
    proj_.apply(s);
    return relative(s);
  }

  double relative(const Eigen::MatrixXd& r) const {
    const double flux = medium_.mean_flux(e_, tau_).norm();
    const double denom = std::sqrt(static_cast<double>(n_)) * (flux > 0.0 ? flux : 1.0);
    return std::sqrt(inner(r, r)) / denom;
  }

  // History uses the fixed scale sqrt(n)|<A e>| so that it tracks ||r|| itself;
  // the stopping test uses the current flux.
  bool record(double res, const Eigen::MatrixXd& r) {
    history_.push_back(std::sqrt(inner(r, r)) * history_scale_);
    return res <= cfg_.tol;
  }

  [[noreturn]] void fail() {
    throw NonConvergenceError("corrector: no convergence within " + std::to_string(cfg_.max_iter) +
                                  " iterations (residual " + std::to_string(history_.back()) + ")",
                              history_);
  }

  void fixed_point() {
    const double a0 = resolve_alpha0(cfg_, field_.phases);
    Eigen::MatrixXd s(n_, d_);
    while (true) {
      const double res = equilibrium(s);
      if (record(res, s)) return finish(res);
      if (iterations_ >= cfg_.max_iter) fail();
      tau_ -= s / a0;
      ++iterations_;
    }
  }

  void conjugate_residual() {
    Eigen::MatrixXd r(n_, d_), Tr(n_, d_), p(n_, d_), Tp(n_, d_);
    double res = equilibrium(r);
    r = -r;
    if (record(res, r)) return finish(res);
    while (true) {
      op(r, Tr);
      p = r;
      Tp = Tr;
      double rTr = inner(r, Tr);
      while (res > cfg_.tol) {
        if (iterations_ >= cfg_.max_iter) fail();
        const double TpTp = inner(Tp, Tp);
        if (!(TpTp > 0.0) || !(rTr > 0.0)) break;
        const double a = rTr / TpTp;
        tau_ += a * p;
        r -= a * Tp;
        ++iterations_;
        res = relative(r);
        if (record(res, r)) break;
        op(r, Tr);
        const double rTr_new = inner(r, Tr);
        const double beta = rTr_new / rTr;
        rTr = rTr_new;
        p = r + beta * p;
        Tp = Tr + beta * Tp;
      }
      // Confirm against the true residual; restart on recurrence drift.
      res = equilibrium(r);
      r = -r;
      if (res <= cfg_.tol) return finish(res);
      if (iterations_ >= cfg_.max_iter) fail();
    }
  }

  void finish(double truth) { true_residual_ = truth; }

  void gcr() {
    constexpr int kRestart = 30;
    Eigen::MatrixXd r(n_, d_);
    std::vector<Eigen::MatrixXd> P, W;
    std::vector<double> WW;
    while (true) {
      const double res0 = equilibrium(r);
      r = -r;
      if (history_.empty() ? record(res0, r) : res0 <= cfg_.tol) return finish(res0);
      P.clear();
      W.clear();
      WW.clear();
      for (int j = 0; j < kRestart; ++j) {
        if (iterations_ >= cfg_.max_iter) fail();
        Eigen::MatrixXd z = r, w(n_, d_);
        op(z, w);
        for (std::size_t i = 0; i < W.size(); ++i) {
          const double c = inner(w, W[i]) / WW[i];
          w -= c * W[i];
          z -= c * P[i];
        }
        const double ww = inner(w, w);
        if (!(ww > 0.0)) break;
        const double a = inner(r, w) / ww;
        tau_ += a * z;
        r -= a * w;
        ++iterations_;
        P.push_back(std::move(z));
        W.push_back(std::move(w));
        WW.push_back(ww);
        if (record(relative(r), r)) break;
      }
      Eigen::MatrixXd s(n_, d_);
      if (const double truth = equilibrium(s); truth <= cfg_.tol) return finish(truth);
      if (iterations_ >= cfg_.max_iter) fail();
    }
  }

  const GridField& field_;
  Eigen::VectorXd e_;
  SolverConfig cfg_;
  int threads_;
  Medium medium_;
  GradientProjection proj_;
  Eigen::Index n_;
  int d_;
  Eigen::MatrixXd tau_;
  std::vector<double> history_;
  int iterations_ = 0;
  double true_residual_ = 0.0;
  double history_scale_ = 1.0;
};

}  // namespace

DirectionSolve solve_corrector(const GridField& field, const Eigen::VectorXd& e, const SolverConfig& cfg) {
  cfg.validate();
  field.validate();
  if (e.size() != field.dim()) throw ConfigError("solve_corrector: direction has the wrong dimension");
  return Solver(field, e, cfg).run();
}

CorrectorSolution effective_tensor(const GridField& field, const SolverConfig& cfg) {
  const int d = field.dim();
  CorrectorSolution sol;
  sol.scheme = cfg.scheme;
  sol.alpha0 = resolve_alpha0(cfg, field.phases);
  sol.Abar.resize(d, d);
  for (int k = 0; k < d; ++k) {
    sol.directions.push_back(solve_corrector(field, Eigen::VectorXd::Unit(d, k), cfg));
    sol.Abar.col(k) = sol.directions.back().mean_flux;
  }
  sol.asymmetry = (sol.Abar - sol.Abar.transpose()).norm();
  if (field.phases.symmetric()) {
    sol.Abar = 0.5 * (sol.Abar + sol.Abar.transpose()).eval();
    sol.symmetrized = true;
  }
  return sol;
}

InclusionFlux inclusion_flux_average(const GridField& field, const CorrectorSolution& solution,
                                     const PointSample& inclusions) {
  const int d = field.dim();
  if (!(inclusions.torus == field.torus)) throw ConfigError("flux average: torus mismatch");
  for (const auto& dir : solution.directions)
    if (static_cast<std::size_t>(dir.gradient.rows()) != field.cells())
      throw ConfigError("flux average: solution was computed without keep_fields");
  const auto owner = raster_owner(inclusions, field.N);
  const Clusters clusters = cluster_decomposition(inclusions);
  const Eigen::MatrixXd dA = field.phases.A2 - field.phases.A1;
  const std::size_t n = field.cells();

  InclusionFlux out;
  out.global = Eigen::MatrixXd::Zero(d, d);
  out.clusters.resize(clusters.count());
  for (std::size_t q = 0; q < clusters.count(); ++q) {
    out.clusters[q].members = clusters.members[q];
    out.clusters[q].flux = Eigen::MatrixXd::Zero(d, d);
  }
  Eigen::VectorXd g(d);
  for (std::size_t c = 0; c < n; ++c) {
    if ((owner[c] >= 0) != (field.phase[c] == 1))
      throw ConfigError("flux average: field was not rasterized from these inclusions");
    if (owner[c] < 0) continue;
    auto& cl = out.clusters[clusters.label[owner[c]]];
    ++cl.cells;
    for (int k = 0; k < d; ++k) {
      for (int j = 0; j < d; ++j) g[j] = solution.directions[k].gradient(static_cast<Eigen::Index>(c), j);
      cl.flux.col(k) += dA * g;
    }
  }
  for (auto& cl : out.clusters) {
    cl.normalized = cl.cells ? Eigen::MatrixXd(cl.flux / static_cast<double>(cl.cells))
                             : Eigen::MatrixXd::Zero(d, d);
    cl.flux /= static_cast<double>(n);
    out.global += cl.flux;
  }
  return out;
}

}  // namespace dilute
