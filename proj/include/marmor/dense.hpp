#pragma once

#include <limits>

#include "marmor/banded.hpp"
#include "marmor/common.hpp"

namespace marmor {

/// Row-major dense matrix. Used for the coarsest multigrid level and as
/// the reference ("oracle") path in tests; the production path is banded.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  DenseVector matvec(const DenseVector& x) const {
    if (x.size() != cols_) throw DimensionError("dense matvec: dimension mismatch");
    DenseVector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += at(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

inline DenseMatrix to_dense(const BandedMatrix& a) {
  DenseMatrix m(a.order(), a.order());
  for (long k : a.offsets()) {
    const DenseVector& d = a.band(k);
    const std::size_t row0 = k < 0 ? static_cast<std::size_t>(-k) : 0;
    for (std::size_t s = 0; s < d.size(); ++s)
      m.at(row0 + s, static_cast<std::size_t>(static_cast<long>(row0 + s) + k)) = d[s];
  }
  return m;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

inline DenseMatrix transposed(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
class LuFactors {
 public:
  explicit LuFactors(DenseMatrix a) : lu_(std::move(a)) {
    if (lu_.rows() != lu_.cols()) throw DimensionError("lu_factor: matrix not square");
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(lu_.at(i, j)));
    const double tiny = scale * n * std::numeric_limits<double>::epsilon();

    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_.at(perm_[k], k));
      for (std::size_t i = k + 1; i < n; ++i) {
        const double v = std::abs(lu_.at(perm_[i], k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (!(best > tiny))
        throw SingularMatrixError("dense solve: matrix singular to working precision");
      std::swap(perm_[k], perm_[p]);
      const std::size_t rk = perm_[k];
      for (std::size_t i = k + 1; i < n; ++i) {
        const std::size_t ri = perm_[i];
        const double f = lu_.at(ri, k) / lu_.at(rk, k);
        lu_.at(ri, k) = f;
        for (std::size_t j = k + 1; j < n; ++j) lu_.at(ri, j) -= f * lu_.at(rk, j);
      }
    }
  }

  std::size_t order() const { return lu_.rows(); }

  DenseVector solve(const DenseVector& b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw DimensionError("lu solve: dimension mismatch");
    DenseVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_.at(perm_[i], j) * y[j];
      y[i] = s;
    }
    DenseVector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= lu_.at(perm_[ii], j) * x[j];
      x[ii] = s / lu_.at(perm_[ii], ii);
    }
    return x;
  }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

/// Direct solve of a dense square system (LU with partial pivoting).
inline DenseVector dense_solve(const DenseMatrix& a, const DenseVector& b) {
  return LuFactors(a).solve(b);
}

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations, ascending.
inline std::vector<double> symmetric_eigenvalues(DenseMatrix a, int max_sweeps = 64) {
  if (a.rows() != a.cols()) throw DimensionError("symmetric_eigenvalues: matrix not square");
  const std::size_t n = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a.at(i, j)));
  if (scale == 0.0) return std::vector<double>(n, 0.0);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a.at(p, q)));
    if (off <= 1e-14 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a.at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace marmor
