#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace marmor {

/// Dense vector of solver unknowns (dimensionless solver units).
using DenseVector = std::vector<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mismatched operand sizes.
struct DimensionError : Error {
  using Error::Error;
};

/// Pivot collapsed to working precision during factorization.
struct SingularMatrixError : Error {
  using Error::Error;
};

/// A solver failed: divergence, breakdown, or non-finite values.
struct SolverError : Error {
  using Error::Error;
};

/// Invalid or inconsistent experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

enum class Dimensionality { one_d, two_d };
enum class SchemeKind { implicit_euler, crank_nicholson };

inline DenseVector zeros(std::size_t n) { return DenseVector(n, 0.0); }

inline bool all_finite(const DenseVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double norm_inf(const DenseVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double norm_l2(const DenseVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, const DenseVector& x, DenseVector& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Ordinary least-squares slope of y against x.
inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DimensionError("least_squares_slope: need two or more paired samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (den == 0.0) throw Error("least_squares_slope: degenerate abscissae");
  return num / den;
}

}  // namespace marmor
