#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "marmor/banded.hpp"
#include "marmor/common.hpp"
#include "marmor/dense.hpp"

namespace marmor {

/// Matrix-free linear map of fixed dimension.
struct LinearOperator {
  std::size_t dimension = 0;
  std::function<DenseVector(const DenseVector&)> apply;

  static LinearOperator from_matrix(BandedMatrix a) {
    const std::size_t n = a.order();
    auto m = std::make_shared<BandedMatrix>(std::move(a));
    return {n, [m](const DenseVector& x) { return m->matvec(x); }};
  }

  static LinearOperator from_dense(DenseMatrix a) {
    const std::size_t n = a.rows();
    auto m = std::make_shared<DenseMatrix>(std::move(a));
    return {n, [m](const DenseVector& x) { return m->matvec(x); }};
  }
};

/// Left preconditioner r -> M(r). An empty function means identity.
using Preconditioner = std::function<DenseVector(const DenseVector&)>;

struct KrylovReport {
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // preconditioned norms, entry 0 = initial
  bool converged = false;
};

struct GmresConfig {
  double rtol = 1e-8;
  std::size_t max_iter = 0;  // 0 selects the full dimension
};

/// Full (non-restarted) left-preconditioned GMRES.
///
/// The Arnoldi basis uses modified Gram-Schmidt with one extra
/// reorthogonalization pass when the orthogonalized vector has lost more
/// than eight digits of its original length. Termination is on the
/// preconditioned relative residual; a zero Arnoldi vector ends the
/// iteration early (with an error if the residual target was not met).
inline std::pair<DenseVector, KrylovReport> gmres(const LinearOperator& a,
                                                  const Preconditioner& m, const DenseVector& b,
                                                  const DenseVector& x0, double rtol,
                                                  std::size_t max_iter) {
  const std::size_t n = a.dimension;
  if (b.size() != n || x0.size() != n) throw DimensionError("gmres: dimension mismatch");
  if (!(rtol > 0.0)) throw Error("gmres: rtol must be positive");
  if (max_iter == 0) max_iter = n;

  const auto precondition = [&m](DenseVector v) { return m ? m(v) : std::move(v); };

  KrylovReport report;
  DenseVector r = a.apply(x0);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  r = precondition(std::move(r));
  if (!all_finite(r)) throw SolverError("gmres: non-finite residual");

  const double beta = norm_l2(r);
  report.residual_history.push_back(beta);
  if (beta == 0.0) {
    report.converged = true;
    return {x0, report};
  }
  const double target = rtol * beta;

  std::vector<DenseVector> basis;
  basis.reserve(std::min(max_iter + 1, n + 1));
  {
    DenseVector v0 = r;
    for (double& x : v0) x /= beta;
    basis.push_back(std::move(v0));
  }

  std::vector<std::vector<double>> hess;  // column k holds h(0..k+1, k)
  std::vector<double> cs, sn;
  std::vector<double> g{beta};

  const auto assemble_solution = [&](std::size_t k) {
    // Back-substitute the rotated Hessenberg system, then expand in the basis.
    std::vector<double> y(k + 1);
    for (std::size_t ii = k + 1; ii-- > 0;) {
      double s = g[ii];
      for (std::size_t j = ii + 1; j <= k; ++j) s -= hess[j][ii] * y[j];
      y[ii] = s / hess[ii][ii];
    }
    DenseVector x = x0;
    for (std::size_t j = 0; j <= k; ++j) axpy(y[j], basis[j], x);
    return x;
  };

  for (std::size_t k = 0; k < max_iter; ++k) {
    DenseVector w = precondition(a.apply(basis[k]));
    if (!all_finite(w)) throw SolverError("gmres: operator produced non-finite values");
    const double wnorm0 = norm_l2(w);

    std::vector<double> h(k + 2, 0.0);
    for (std::size_t j = 0; j <= k; ++j) {
      h[j] = dot(w, basis[j]);
      axpy(-h[j], basis[j], w);
    }
    double hnext = norm_l2(w);
    if (hnext < 1e-8 * wnorm0) {
      for (std::size_t j = 0; j <= k; ++j) {
        const double c = dot(w, basis[j]);
        h[j] += c;
        axpy(-c, basis[j], w);
      }
      hnext = norm_l2(w);
    }
    const bool breakdown = hnext <= 1e-14 * (wnorm0 + 1e-300);
    h[k + 1] = hnext;

    for (std::size_t j = 0; j < k; ++j) {
      const double t = cs[j] * h[j] + sn[j] * h[j + 1];
      h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
      h[j] = t;
    }
    const double rho = std::hypot(h[k], h[k + 1]);
    if (rho == 0.0)
      throw SolverError("gmres: zero Hessenberg column (operator singular to working precision)");
    const double c = h[k] / rho;
    const double s = h[k + 1] / rho;
    h[k] = rho;
    h[k + 1] = 0.0;
    cs.push_back(c);
    sn.push_back(s);
    g.push_back(-s * g[k]);
    g[k] = c * g[k];
    hess.push_back(std::move(h));

    const double resid = std::abs(g[k + 1]);
    report.residual_history.push_back(resid);
    report.iterations = k + 1;

    if (resid <= target) {
      report.converged = true;
      return {assemble_solution(k), report};
    }
    if (breakdown) {
      // Happy breakdown solves the system exactly; anything else is an error.
      if (resid <= target * (1.0 + 1e-12) || resid <= 1e-14 * beta) {
        report.converged = true;
        return {assemble_solution(k), report};
      }
      throw SolverError("gmres: Arnoldi breakdown before reaching tolerance");
    }
    if (k + 1 == max_iter) {
      return {assemble_solution(k), report};
    }
    for (double& x : w) x /= hnext;
    basis.push_back(std::move(w));
  }
  return {x0, report};  // unreachable for max_iter >= 1
}

inline std::pair<DenseVector, KrylovReport> gmres(const LinearOperator& a,
                                                  const Preconditioner& m, const DenseVector& b,
                                                  const DenseVector& x0, const GmresConfig& cfg) {
  return gmres(a, m, b, x0, cfg.rtol, cfg.max_iter);
}

}  // namespace marmor
