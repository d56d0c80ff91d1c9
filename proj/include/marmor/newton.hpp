#pragma once

#include <optional>

#include "marmor/common.hpp"
#include "marmor/gmres.hpp"

namespace marmor {

/// Jacobian system handed to the linear solver: the operator and an
/// optional preconditioner built for the current iterate.
struct LinearizedSystem {
  LinearOperator op;
  Preconditioner preconditioner;  // empty = none
};

/// Abstract nonlinear problem F(u) = 0 with Jacobian-as-operator.
struct NonlinearProblem {
  std::size_t dimension = 0;
  std::function<DenseVector(const DenseVector&)> residual;
  std::function<LinearizedSystem(const DenseVector&)> linearize;
};

enum class WarmStartMode { previous_step, explicit_euler_average };

struct NewtonConfig {
  double tol = 1e-6;          // stop on the increment sup-norm
  std::size_t max_iter = 30;
  WarmStartMode warm_start = WarmStartMode::previous_step;
  std::optional<double> timestep_guard_C;  // integrators refuse dt > C*h when set
};

struct NewtonReport {
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> increment_norms;       // one per iteration, sup-norm
  std::vector<KrylovReport> linear_reports;  // one per iteration
};

/// Plain (undamped) Newton. Each step solves F'(u) v = -F(u) with
/// preconditioned GMRES and applies u += v; iteration stops when the
/// increment sup-norm falls below cfg.tol.
inline std::pair<DenseVector, NewtonReport> newton_solve(const NonlinearProblem& p,
                                                         DenseVector u0, const NewtonConfig& cfg,
                                                         const GmresConfig& linear) {
  if (u0.size() != p.dimension) throw DimensionError("newton_solve: initial guess size mismatch");
  if (!all_finite(u0)) throw SolverError("newton_solve: non-finite initial guess");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw Error("newton_solve: invalid configuration");

  DenseVector u = std::move(u0);
  NewtonReport report;

  for (std::size_t s = 0; s < cfg.max_iter; ++s) {
    DenseVector f = p.residual(u);
    if (f.size() != p.dimension) throw DimensionError("newton_solve: residual size mismatch");
    if (!all_finite(f)) throw SolverError("newton_solve: residual diverged (non-finite)");
    // A previous update may already have driven the residual to rounding
    // level; do not charge an extra iteration for detecting that.
    if (s > 0 && norm_inf(f) <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + norm_inf(u))) {
      report.converged = true;
      break;
    }
    for (double& x : f) x = -x;

    LinearizedSystem sys = p.linearize(u);
    std::pair<DenseVector, KrylovReport> solved;
    try {
      solved = gmres(sys.op, sys.preconditioner, f, zeros(p.dimension), linear);
    } catch (const SolverError& e) {
      throw SolverError("newton_solve: linear solver failed at Newton iteration " +
                        std::to_string(s + 1) + ": " + e.what());
    }
    auto& [v, krep] = solved;
    if (!krep.converged)
      throw SolverError("newton_solve: linear solver stalled at Newton iteration " +
                        std::to_string(s + 1));

    axpy(1.0, v, u);
    const double inc = norm_inf(v);
    report.increment_norms.push_back(inc);
    report.linear_reports.push_back(std::move(krep));
    report.iterations = s + 1;
    if (inc <= cfg.tol) {
      report.converged = true;
      break;
    }
  }
  return {std::move(u), report};
}

/// Initial guess for the per-step nonlinear solve: either the previous
/// time level, or its average with a full explicit Euler step.
inline DenseVector warm_start(const DenseVector& u_prev, WarmStartMode mode,
                              const std::function<DenseVector(const DenseVector&)>& explicit_step = {}) {
  if (mode == WarmStartMode::previous_step) return u_prev;
  if (!explicit_step) throw Error("warm_start: explicit step mapping required for average mode");
  DenseVector e = explicit_step(u_prev);
  if (e.size() != u_prev.size()) throw DimensionError("warm_start: explicit step size mismatch");
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = 0.5 * (u_prev[i] + e[i]);
  return e;
}

/// Linear timestep restriction dt <= C*h that keeps the per-step Newton
/// iteration inside its convergence ball.
inline bool timestep_guard(double dt, double h, double c) {
  if (!(dt > 0.0) || !(h > 0.0) || !(c > 0.0)) throw Error("timestep_guard: arguments must be positive");
  return dt <= c * h;
}

}  // namespace marmor
