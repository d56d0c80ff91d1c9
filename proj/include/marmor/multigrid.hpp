#pragma once

#include <map>
#include <memory>
#include <optional>

#include "marmor/banded.hpp"
#include "marmor/common.hpp"
#include "marmor/dense.hpp"
#include "marmor/gmres.hpp"

namespace marmor {

/// Regular lattice of unknowns behind an algebraic vector: n points per
/// axis, total n (1D) or n*n (2D). Needed to color red-black sweeps and
/// to build geometric projections.
struct LatticeShape {
  std::size_t points_per_axis = 0;
  Dimensionality dim = Dimensionality::one_d;

  std::size_t unknowns() const {
    return dim == Dimensionality::one_d ? points_per_axis : points_per_axis * points_per_axis;
  }
};

namespace detail {
// Vertex-centered coarsening keeps every other interior point.
inline std::size_t coarse_axis_points(std::size_t fine) { return (fine - 1) / 2; }
constexpr std::size_t kCoarsestAxis1D = 7;
constexpr std::size_t kCoarsestAxis2D = 3;  // 3x3 = 9 unknowns
inline std::size_t coarsest_axis(Dimensionality dim) {
  return dim == Dimensionality::one_d ? kCoarsestAxis1D : kCoarsestAxis2D;
}
}  // namespace detail

/// Full-weighting restriction whose transpose is linear (bilinear in 2D)
/// interpolation. Rows carry the 1D stencil (1/2)[1 2 1] centered on every
/// other fine point, tensorized on 2D lattices.
class ProjectionOperator {
 public:
  struct Weight {
    std::size_t index;
    double value;
  };

  std::size_t fine_dim() const { return fine_dim_; }
  std::size_t coarse_dim() const { return coarse_dim_; }
  LatticeShape coarse_shape() const { return coarse_shape_; }
  const std::vector<Weight>& row(std::size_t coarse) const { return rows_[coarse]; }
  const std::vector<Weight>& column(std::size_t fine) const { return cols_[fine]; }

  DenseVector coarsen(const DenseVector& fine) const {
    if (fine.size() != fine_dim_) throw DimensionError("projection: dimension mismatch");
    DenseVector out(coarse_dim_, 0.0);
    for (std::size_t i = 0; i < coarse_dim_; ++i) {
      double s = 0.0;
      for (const Weight& w : rows_[i]) s += w.value * fine[w.index];
      out[i] = s;
    }
    return out;
  }

  DenseVector interpolate(const DenseVector& coarse) const {
    if (coarse.size() != coarse_dim_) throw DimensionError("projection: dimension mismatch");
    DenseVector out(fine_dim_, 0.0);
    for (std::size_t j = 0; j < fine_dim_; ++j) {
      double s = 0.0;
      for (const Weight& w : cols_[j]) s += w.value * coarse[w.index];
      out[j] = s;
    }
    return out;
  }

  DenseMatrix to_dense() const {
    DenseMatrix p(coarse_dim_, fine_dim_);
    for (std::size_t i = 0; i < coarse_dim_; ++i)
      for (const Weight& w : rows_[i]) p.at(i, w.index) = w.value;
    return p;
  }

  friend ProjectionOperator build_projection(std::size_t, Dimensionality);

 private:
  std::size_t fine_dim_ = 0, coarse_dim_ = 0;
  LatticeShape coarse_shape_;
  std::vector<std::vector<Weight>> rows_;  // coarse row -> fine weights, ascending index
  std::vector<std::vector<Weight>> cols_;  // fine index -> coarse weights
};

inline ProjectionOperator build_projection(std::size_t fine_points_per_axis, Dimensionality dim) {
  if (fine_points_per_axis <= detail::kCoarsestAxis2D)
    throw DimensionError("build_projection: lattice already at or below the coarsest size");
  const std::size_t nf = fine_points_per_axis;
  const std::size_t nc = detail::coarse_axis_points(nf);

  ProjectionOperator p;
  p.coarse_shape_ = LatticeShape{nc, dim};
  static constexpr double kStencil[3] = {0.5, 1.0, 0.5};

  if (dim == Dimensionality::one_d) {
    p.fine_dim_ = nf;
    p.coarse_dim_ = nc;
    p.rows_.resize(nc);
    for (std::size_t I = 0; I < nc; ++I)
      for (int d = 0; d < 3; ++d) p.rows_[I].push_back({2 * I + static_cast<std::size_t>(d), kStencil[d]});
  } else {
    p.fine_dim_ = nf * nf;
    p.coarse_dim_ = nc * nc;
    p.rows_.resize(p.coarse_dim_);
    for (std::size_t J = 0; J < nc; ++J)
      for (std::size_t I = 0; I < nc; ++I) {
        auto& row = p.rows_[J * nc + I];
        for (int dy = 0; dy < 3; ++dy)
          for (int dx = 0; dx < 3; ++dx) {
            const std::size_t fx = 2 * I + static_cast<std::size_t>(dx);
            const std::size_t fy = 2 * J + static_cast<std::size_t>(dy);
            row.push_back({fy * nf + fx, kStencil[dx] * kStencil[dy]});
          }
        std::sort(row.begin(), row.end(),
                  [](const ProjectionOperator::Weight& a, const ProjectionOperator::Weight& b) {
                    return a.index < b.index;
                  });
      }
  }

  p.cols_.resize(p.fine_dim_);
  for (std::size_t I = 0; I < p.coarse_dim_; ++I)
    for (const auto& w : p.rows_[I]) p.cols_[w.index].push_back({I, w.value});
  return p;
}

/// Galerkin triple product P * A * P^T, accumulated in the same order as a
/// dense triple product so results agree with the dense oracle exactly.
inline BandedMatrix galerkin_coarsen(const BandedMatrix& a, const ProjectionOperator& p) {
  if (a.order() != p.fine_dim()) throw DimensionError("galerkin_coarsen: dimension mismatch");
  const std::size_t nc = p.coarse_dim();

  std::map<long, DenseVector> bands;
  std::vector<std::size_t> candidates;
  std::vector<char> seen(nc, 0);

  for (std::size_t I = 0; I < nc; ++I) {
    candidates.clear();
    for (const auto& wi : p.row(I)) {
      for (long k : a.offsets()) {
        const long j = static_cast<long>(wi.index) + k;
        if (j < 0 || j >= static_cast<long>(a.order())) continue;
        for (const auto& wj : p.column(static_cast<std::size_t>(j)))
          if (!seen[wj.index]) {
            seen[wj.index] = 1;
            candidates.push_back(wj.index);
          }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t J : candidates) {
      seen[J] = 0;
      double sum = 0.0;
      for (const auto& wi : p.row(I)) {
        double inner = 0.0;
        for (long k : a.offsets()) {
          const long j = static_cast<long>(wi.index) + k;
          if (j < 0 || j >= static_cast<long>(a.order())) continue;
          double wj = 0.0;
          for (const auto& cw : p.column(static_cast<std::size_t>(j)))
            if (cw.index == J) {
              wj = cw.value;
              break;
            }
          if (wj == 0.0) continue;
          inner += a.at(wi.index, static_cast<std::size_t>(j)) * wj;
        }
        sum += wi.value * inner;
      }
      const long off = static_cast<long>(J) - static_cast<long>(I);
      auto it = bands.find(off);
      if (it == bands.end())
        it = bands.emplace(off, DenseVector(nc - static_cast<std::size_t>(std::labs(off)), 0.0)).first;
      const std::size_t slot = off < 0 ? I - static_cast<std::size_t>(-off) : I;
      it->second[slot] = sum;
    }
  }

  std::vector<long> offsets;
  for (const auto& [off, vals] : bands) offsets.push_back(off);
  BandedMatrix c(nc, offsets);
  for (auto& [off, vals] : bands) c.band(off) = std::move(vals);
  return c;
}

struct SmootherSpec {
  enum class Kind { damped_jacobi, red_black_gauss_seidel };
  Kind kind = Kind::damped_jacobi;
  double omega = 2.0 / 3.0;
  int sweeps = 1;

  static SmootherSpec default_for(Dimensionality dim) {
    SmootherSpec s;
    s.kind = dim == Dimensionality::one_d ? Kind::damped_jacobi : Kind::red_black_gauss_seidel;
    return s;
  }
};

namespace detail {
inline int lattice_color(std::size_t index, const LatticeShape& shape) {
  if (shape.dim == Dimensionality::one_d) return static_cast<int>(index % 2);
  const std::size_t n = shape.points_per_axis;
  return static_cast<int>((index % n + index / n) % 2);
}
}  // namespace detail

inline void smooth_in_place(const BandedMatrix& a, DenseVector& x, const DenseVector& b,
                            const SmootherSpec& spec, const LatticeShape& shape) {
  if (x.size() != a.order() || b.size() != a.order())
    throw DimensionError("smooth: dimension mismatch");
  if (spec.sweeps < 1) throw Error("smooth: sweeps must be >= 1");
  const DenseVector& diag = a.band(0);
  for (double d : diag)
    if (d == 0.0) throw SolverError("smooth: zero diagonal entry");

  for (int sweep = 0; sweep < spec.sweeps; ++sweep) {
    if (spec.kind == SmootherSpec::Kind::damped_jacobi) {
      DenseVector r = a.matvec(x);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += spec.omega * (b[i] - r[i]) / diag[i];
    } else {
      for (int color = 0; color < 2; ++color) {
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (detail::lattice_color(i, shape) != color) continue;
          double s = b[i];
          for (long k : a.offsets()) {
            if (k == 0) continue;
            const long j = static_cast<long>(i) + k;
            if (j < 0 || j >= static_cast<long>(x.size())) continue;
            s -= a.at(i, static_cast<std::size_t>(j)) * x[static_cast<std::size_t>(j)];
          }
          x[i] = s / diag[i];
        }
      }
    }
  }
}

inline DenseVector smooth(const BandedMatrix& a, const DenseVector& x, const DenseVector& b,
                          const SmootherSpec& spec,
                          const LatticeShape& shape = {0, Dimensionality::one_d}) {
  LatticeShape sh = shape;
  if (sh.points_per_axis == 0) sh = LatticeShape{a.order(), Dimensionality::one_d};
  DenseVector y = x;
  smooth_in_place(a, y, b, spec, sh);
  return y;
}

/// Galerkin multigrid hierarchy. Level 0 is the fine system; every coarse
/// matrix is the exact triple product of the finer one; the coarsest level
/// is LU-factored once and solved directly inside the cycle.
class MultigridHierarchy {
 public:
  struct Level {
    BandedMatrix matrix;
    std::optional<ProjectionOperator> projection;  // absent on the coarsest level
    LatticeShape shape;
  };

  static MultigridHierarchy build(BandedMatrix fine, LatticeShape shape, SmootherSpec smoother) {
    if (fine.order() != shape.unknowns())
      throw DimensionError("multigrid: matrix does not match lattice shape");
    MultigridHierarchy h;
    h.smoother_ = smoother;
    BandedMatrix a = std::move(fine);
    LatticeShape s = shape;
    while (s.points_per_axis > detail::coarsest_axis(s.dim)) {
      ProjectionOperator p = build_projection(s.points_per_axis, s.dim);
      BandedMatrix coarse = galerkin_coarsen(a, p);
      const LatticeShape cs = p.coarse_shape();
      h.levels_.push_back(Level{std::move(a), std::move(p), s});
      a = std::move(coarse);
      s = cs;
    }
    h.levels_.push_back(Level{a, std::nullopt, s});
    h.coarsest_ = std::make_shared<LuFactors>(to_dense(a));
    return h;
  }

  std::size_t depth() const { return levels_.size(); }
  const Level& level(std::size_t i) const { return levels_.at(i); }
  const SmootherSpec& smoother() const { return smoother_; }

  /// One V(nu,0)-cycle from the given level: pre-smooth, restrict the
  /// residual A*x - b, recurse from a zero guess, subtract the interpolated
  /// correction. The coarsest level is solved exactly.
  DenseVector v_cycle(std::size_t level, const DenseVector& x_in, const DenseVector& b) const {
    if (level >= levels_.size()) throw DimensionError("v_cycle: level out of range");
    const Level& lv = levels_[level];
    if (level + 1 == levels_.size()) return coarsest_->solve(b);

    DenseVector x = x_in;
    smooth_in_place(lv.matrix, x, b, smoother_, lv.shape);
    DenseVector r = lv.matrix.matvec(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const DenseVector bc = lv.projection->coarsen(r);
    const DenseVector y = v_cycle(level + 1, zeros(bc.size()), bc);
    const DenseVector corr = lv.projection->interpolate(y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= corr[i];
    return x;
  }

  DenseVector v_cycle(const DenseVector& x_in, const DenseVector& b) const {
    return v_cycle(0, x_in, b);
  }

  /// Repeated V-cycles until the true relative residual drops below rtol.
  /// Returns the iterate and the number of cycles spent.
  std::pair<DenseVector, std::size_t> solve(const DenseVector& b, double rtol,
                                            std::size_t max_cycles) const {
    const BandedMatrix& a = levels_.front().matrix;
    DenseVector x = zeros(b.size());
    const double b0 = norm_l2(b);
    if (b0 == 0.0) return {x, 0};
    for (std::size_t cycle = 1; cycle <= max_cycles; ++cycle) {
      x = v_cycle(0, x, b);
      DenseVector r = a.matvec(x);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
      if (norm_l2(r) <= rtol * b0) return {x, cycle};
    }
    throw SolverError("multigrid solve: did not reach tolerance");
  }

 private:
  std::vector<Level> levels_;
  std::shared_ptr<LuFactors> coarsest_;
  SmootherSpec smoother_;
};

/// One V-cycle from a zero guess, as a (fixed, linear) GMRES preconditioner.
inline Preconditioner v_cycle_preconditioner(std::shared_ptr<const MultigridHierarchy> h) {
  return [h](const DenseVector& r) { return h->v_cycle(0, zeros(r.size()), r); };
}

}  // namespace marmor
