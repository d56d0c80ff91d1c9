#pragma once

#include <cstdlib>
#include <utility>

#include "marmor/common.hpp"

namespace marmor {

/// Square sparse matrix stored as diagonals at fixed offsets.
///
/// Entry j of the diagonal at offset k holds A[j, j+k], so a diagonal
/// carries exactly order - |offset| values. Tridiagonal matrices use
/// offsets {-1,0,1}; the 2D five-point stencil uses {-n,-1,0,1,n};
/// Galerkin-coarsened 2D operators grow to nine offsets.
class BandedMatrix {
 public:
  BandedMatrix() = default;

  BandedMatrix(std::size_t order, std::vector<long> offsets) : order_(order) {
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    for (long k : offsets) {
      if (std::labs(k) >= static_cast<long>(order))
        throw DimensionError("BandedMatrix: offset outside matrix");
      offsets_.push_back(k);
      diags_.emplace_back(order - static_cast<std::size_t>(std::labs(k)), 0.0);
    }
  }

  static BandedMatrix identity(std::size_t n) {
    BandedMatrix a(n, {0});
    for (double& x : a.diags_[0]) x = 1.0;
    return a;
  }

  static BandedMatrix diagonal(DenseVector d) {
    BandedMatrix a(d.size(), {0});
    a.diags_[0] = std::move(d);
    return a;
  }

  /// lower/upper have order-1 entries, diag has order entries.
  static BandedMatrix tridiagonal(const DenseVector& lower, const DenseVector& diag,
                                  const DenseVector& upper) {
    const std::size_t n = diag.size();
    if (lower.size() != n - 1 || upper.size() != n - 1)
      throw DimensionError("tridiagonal: band lengths inconsistent");
    BandedMatrix a(n, {-1, 0, 1});
    a.diags_[0] = lower;
    a.diags_[1] = diag;
    a.diags_[2] = upper;
    return a;
  }

  std::size_t order() const { return order_; }
  const std::vector<long>& offsets() const { return offsets_; }

  bool has_offset(long k) const { return band_index(k) >= 0; }

  const DenseVector& band(long k) const {
    const int b = band_index(k);
    if (b < 0) throw DimensionError("BandedMatrix: no such offset");
    return diags_[static_cast<std::size_t>(b)];
  }

  DenseVector& band(long k) {
    const int b = band_index(k);
    if (b < 0) throw DimensionError("BandedMatrix: no such offset");
    return diags_[static_cast<std::size_t>(b)];
  }

  /// Element access; zero outside the stored bands.
  double at(std::size_t i, std::size_t j) const {
    if (i >= order_ || j >= order_) throw DimensionError("BandedMatrix::at: out of range");
    const long k = static_cast<long>(j) - static_cast<long>(i);
    const int b = band_index(k);
    if (b < 0) return 0.0;
    return diags_[static_cast<std::size_t>(b)][slot(i, k)];
  }

  void set(std::size_t i, std::size_t j, double v) { cell(i, j) = v; }
  void add(std::size_t i, std::size_t j, double v) { cell(i, j) += v; }

  void scale(double alpha) {
    for (auto& d : diags_)
      for (double& x : d) x *= alpha;
  }

  /// this += alpha * other; other's offsets must be a subset of ours.
  void add_scaled(const BandedMatrix& other, double alpha) {
    if (other.order_ != order_) throw DimensionError("add_scaled: order mismatch");
    for (std::size_t b = 0; b < other.offsets_.size(); ++b) {
      DenseVector& dst = band(other.offsets_[b]);
      const DenseVector& src = other.diags_[b];
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += alpha * src[i];
    }
  }

  /// A += alpha * I
  void shift_diagonal(double alpha) {
    DenseVector& d = band(0);
    for (double& x : d) x += alpha;
  }

  DenseVector matvec(const DenseVector& x) const {
    if (x.size() != order_) throw DimensionError("banded matvec: dimension mismatch");
    DenseVector y(order_, 0.0);
    for (std::size_t b = 0; b < offsets_.size(); ++b) {
      const long k = offsets_[b];
      const DenseVector& d = diags_[b];
      const std::size_t row0 = k < 0 ? static_cast<std::size_t>(-k) : 0;
      for (std::size_t s = 0; s < d.size(); ++s) {
        const std::size_t i = row0 + s;
        y[i] += d[s] * x[static_cast<std::size_t>(static_cast<long>(i) + k)];
      }
    }
    return y;
  }

  BandedMatrix transposed() const {
    std::vector<long> offs;
    offs.reserve(offsets_.size());
    for (long k : offsets_) offs.push_back(-k);
    BandedMatrix t(order_, offs);
    for (std::size_t b = 0; b < offsets_.size(); ++b) t.band(-offsets_[b]) = diags_[b];
    return t;
  }

 private:
  int band_index(long k) const {
    const auto it = std::lower_bound(offsets_.begin(), offsets_.end(), k);
    if (it == offsets_.end() || *it != k) return -1;
    return static_cast<int>(it - offsets_.begin());
  }

  // Storage slot of A[i, i+k] within the diagonal at offset k.
  std::size_t slot(std::size_t i, long k) const {
    return k < 0 ? i - static_cast<std::size_t>(-k) : i;
  }

  double& cell(std::size_t i, std::size_t j) {
    if (i >= order_ || j >= order_) throw DimensionError("BandedMatrix: out of range");
    const long k = static_cast<long>(j) - static_cast<long>(i);
    const int b = band_index(k);
    if (b < 0) throw DimensionError("BandedMatrix: write outside stored bands");
    return diags_[static_cast<std::size_t>(b)][slot(i, k)];
  }

  std::size_t order_ = 0;
  std::vector<long> offsets_;
  std::vector<DenseVector> diags_;
};

inline DenseVector banded_matvec(const BandedMatrix& a, const DenseVector& x) {
  return a.matvec(x);
}

/// Exact symmetry check (tol = 0 demands bitwise-equal pairs).
inline bool is_symmetric(const BandedMatrix& a, double tol = 0.0) {
  for (long k : a.offsets()) {
    if (k <= 0) continue;
    if (!a.has_offset(-k)) {
      for (double x : a.band(k))
        if (std::abs(x) > tol) return false;
      continue;
    }
    const DenseVector& up = a.band(k);
    const DenseVector& lo = a.band(-k);
    for (std::size_t i = 0; i < up.size(); ++i)
      if (std::abs(up[i] - lo[i]) > tol) return false;
  }
  for (long k : a.offsets()) {
    if (k >= 0 || a.has_offset(-k)) continue;
    for (double x : a.band(k))
      if (std::abs(x) > tol) return false;
  }
  return true;
}

}  // namespace marmor
