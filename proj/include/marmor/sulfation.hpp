#pragma once

#include <iostream>
#include <optional>
#include <span>

#include "marmor/banded.hpp"
#include "marmor/common.hpp"
#include "marmor/multigrid.hpp"
#include "marmor/newton.hpp"
#include "marmor/record.hpp"

namespace marmor::sulf {

/// Physical parameters of the two-species gypsum-formation model.
/// Porosity follows the affine law phi(c) = alpha*c + beta; the theorem
/// behind the block preconditioner needs beta > 0.
struct SulfationParams {
  double a = 1.0;        // reaction rate
  double d = 1.0;        // pollutant diffusivity
  double m_c = 100.09;   // molar mass, carbonate
  double m_s = 64.06;    // molar mass, SO2
  double alpha = 0.01;   // porosity slope
  double beta = 0.1;     // porosity at c = 0
  double c0 = 1.0;       // initial carbonate concentration
  double rho_s0 = 1.0;   // Dirichlet "porous concentration" phi*s at the outer boundary

  bool operator==(const SulfationParams&) const = default;
};

inline double porosity(double c, const SulfationParams& p) { return p.alpha * c + p.beta; }
inline double porosity_prime(const SulfationParams& p) { return p.alpha; }

/// Two interleaved grids on [0,length] (squared in 2D) with spacing
/// h = length/n: SO2 lives on integer nodes j*h (j = 1..n unknowns, node 0
/// Dirichlet, node n+1 mirrored), carbonate on half-integer nodes
/// (j+1/2)*h (j = 0..n-1). In 2D the bottom/left edges are Dirichlet and
/// the top/right edges are mirrored.
struct StaggeredGrid {
  Dimensionality dim = Dimensionality::one_d;
  std::size_t n = 128;
  double length = 1.0;

  StaggeredGrid() = default;
  StaggeredGrid(Dimensionality d, std::size_t points, double len = 1.0)
      : dim(d), n(points), length(len) {
    if (n < 3) throw Error("StaggeredGrid: need at least 3 points per axis");
    if (!(length > 0.0)) throw Error("StaggeredGrid: empty domain");
  }

  double h() const { return length / static_cast<double>(n); }
  std::size_t unknowns_per_field() const { return dim == Dimensionality::one_d ? n : n * n; }
  std::size_t total_unknowns() const { return 2 * unknowns_per_field(); }
  LatticeShape shape() const { return LatticeShape{n, dim}; }

  double node_coord(std::size_t j) const { return static_cast<double>(j) * h(); }       // 1-based node
  double cell_coord(std::size_t q) const { return (static_cast<double>(q) + 0.5) * h(); }  // 0-based cell
};

struct SulfationState {
  double t = 0.0;
  DenseVector s;  // integer grid
  DenseVector c;  // half-integer grid
};

inline SulfationState initial_state(const StaggeredGrid& grid, const SulfationParams& params) {
  SulfationState st;
  st.s = zeros(grid.unknowns_per_field());
  st.c = DenseVector(grid.unknowns_per_field(), params.c0);
  return st;
}

namespace detail {

inline double implicit_weight(SchemeKind scheme) {
  return scheme == SchemeKind::crank_nicholson ? 0.5 : 1.0;
}
inline double lagged_weight(SchemeKind scheme) {
  return scheme == SchemeKind::crank_nicholson ? 0.5 : 0.0;
}

/// One time level of fields plus the lookups the stencils need. The
/// top/right mirror closures are folded into the clamped cell accessors.
struct Level1D {
  const DenseVector& s;
  const DenseVector& c;
  const SulfationParams& p;
  std::size_t n;

  double phi(std::size_t q) const { return porosity(c[std::min(q, n - 1)], p); }
  double cc(std::size_t q) const { return c[std::min(q, n - 1)]; }

  // Node j in 1..n; s unknown index j-1.
  double mass_coeff(std::size_t j) const { return 0.5 * (phi(j - 1) + phi(j)); }
  double reaction_coeff(std::size_t j) const {
    return 0.5 * (phi(j - 1) * cc(j - 1) + phi(j) * cc(j));
  }
  /// Discrete -(phi s')' row (positive-definite orientation) including the
  /// Dirichlet product at the outer wall and the inner mirror.
  double diffusion(std::size_t j) const {
    const double sj = s[j - 1];
    const double west = j == 1 ? phi(0) * sj - p.rho_s0 : phi(j - 1) * (sj - s[j - 2]);
    const double east = j == n ? phi(n - 1) * (sj - s[j - 2]) : phi(j) * (sj - s[j]);
    return west + east;
  }
  /// Reaction sum phi*s averaged onto cell q, Dirichlet corner replaced by
  /// the porous-concentration datum.
  double cell_reaction_coeff(std::size_t q) const {
    if (q == 0) return 0.5 * (phi(0) * s[0] + p.rho_s0);
    return 0.5 * phi(q) * (s[q - 1] + s[q]);
  }
};

struct Level2D {
  const DenseVector& s;
  const DenseVector& c;
  const SulfationParams& p;
  std::size_t n;

  std::size_t cell_index(std::size_t ic, std::size_t jc) const {
    return std::min(jc, n - 1) * n + std::min(ic, n - 1);
  }
  double phi(std::size_t ic, std::size_t jc) const { return porosity(c[cell_index(ic, jc)], p); }
  double cc(std::size_t ic, std::size_t jc) const { return c[cell_index(ic, jc)]; }
  // Node (i,j), i,j in 1..n; unknown index (j-1)*n + (i-1).
  std::size_t node_index(std::size_t i, std::size_t j) const { return (j - 1) * n + (i - 1); }
  double sval(std::size_t i, std::size_t j) const { return s[node_index(i, j)]; }

  double mass_coeff(std::size_t i, std::size_t j) const {
    return 0.25 * (phi(i - 1, j - 1) + phi(i, j - 1) + phi(i - 1, j) + phi(i, j));
  }
  double reaction_coeff(std::size_t i, std::size_t j) const {
    return 0.25 * (phi(i - 1, j - 1) * cc(i - 1, j - 1) + phi(i, j - 1) * cc(i, j - 1) +
                   phi(i - 1, j) * cc(i - 1, j) + phi(i, j) * cc(i, j));
  }
  double face_w(std::size_t i, std::size_t j) const { return 0.5 * (phi(i - 1, j - 1) + phi(i - 1, j)); }
  double face_e(std::size_t i, std::size_t j) const { return 0.5 * (phi(i, j - 1) + phi(i, j)); }
  double face_s(std::size_t i, std::size_t j) const { return 0.5 * (phi(i - 1, j - 1) + phi(i, j - 1)); }
  double face_n(std::size_t i, std::size_t j) const { return 0.5 * (phi(i - 1, j) + phi(i, j)); }

  double diffusion(std::size_t i, std::size_t j) const {
    const double sij = sval(i, j);
    const double west = i == 1 ? face_w(i, j) * sij - p.rho_s0
                               : face_w(i, j) * (sij - sval(i - 1, j));
    const double east = i == n ? face_e(i, j) * (sij - sval(n - 1, j))
                               : face_e(i, j) * (sij - sval(i + 1, j));
    const double south = j == 1 ? face_s(i, j) * sij - p.rho_s0
                                : face_s(i, j) * (sij - sval(i, j - 1));
    const double north = j == n ? face_n(i, j) * (sij - sval(i, n - 1))
                                : face_n(i, j) * (sij - sval(i, j + 1));
    return west + east + south + north;
  }

  /// Sum of s over the cell's non-Dirichlet corners and the count of
  /// Dirichlet corners (node index 0 along either axis).
  std::pair<double, int> corner_sum(std::size_t ic, std::size_t jc) const {
    double sum = 0.0;
    int dirichlet = 0;
    for (std::size_t b = jc; b <= jc + 1; ++b)
      for (std::size_t a = ic; a <= ic + 1; ++a) {
        if (a == 0 || b == 0)
          ++dirichlet;
        else
          sum += sval(a, b);
      }
    return {sum, dirichlet};
  }
  double cell_reaction_coeff(std::size_t ic, std::size_t jc) const {
    const auto [sum, dirichlet] = corner_sum(ic, jc);
    return 0.25 * (phi(ic, jc) * sum + static_cast<double>(dirichlet) * p.rho_s0);
  }
};

}  // namespace detail

/// Residual of the coupled implicit step, stacked as [s-block; c-block].
inline DenseVector residual(const DenseVector& s, const DenseVector& c, const DenseVector& s_prev,
                            const DenseVector& c_prev, double dt, const StaggeredGrid& grid,
                            const SulfationParams& params, SchemeKind scheme) {
  const std::size_t m = grid.unknowns_per_field();
  if (s.size() != m || c.size() != m || s_prev.size() != m || c_prev.size() != m)
    throw DimensionError("sulfation residual: size mismatch");
  const double h = grid.h();
  const double ti = detail::implicit_weight(scheme), te = detail::lagged_weight(scheme);
  const double ki = ti * dt * params.a / params.m_c, ke = te * dt * params.a / params.m_c;
  const double di = ti * dt * params.d / (h * h), de = te * dt * params.d / (h * h);
  const double mi = ti * dt * params.a / params.m_s, me = te * dt * params.a / params.m_s;

  DenseVector f(2 * m, 0.0);
  if (grid.dim == Dimensionality::one_d) {
    const detail::Level1D cur{s, c, params, grid.n};
    const detail::Level1D prev{s_prev, c_prev, params, grid.n};
    for (std::size_t j = 1; j <= grid.n; ++j) {
      const std::size_t r = j - 1;
      f[r] = cur.mass_coeff(j) * s[r] + ki * cur.reaction_coeff(j) * s[r] + di * cur.diffusion(j) -
             prev.mass_coeff(j) * s_prev[r] + ke * prev.reaction_coeff(j) * s_prev[r] +
             de * prev.diffusion(j);
    }
    for (std::size_t q = 0; q < grid.n; ++q)
      f[m + q] = c[q] - c_prev[q] + mi * cur.cell_reaction_coeff(q) * c[q] +
                 me * prev.cell_reaction_coeff(q) * c_prev[q];
  } else {
    const detail::Level2D cur{s, c, params, grid.n};
    const detail::Level2D prev{s_prev, c_prev, params, grid.n};
    for (std::size_t j = 1; j <= grid.n; ++j)
      for (std::size_t i = 1; i <= grid.n; ++i) {
        const std::size_t r = cur.node_index(i, j);
        f[r] = cur.mass_coeff(i, j) * s[r] + ki * cur.reaction_coeff(i, j) * s[r] +
               di * cur.diffusion(i, j) - prev.mass_coeff(i, j) * s_prev[r] +
               ke * prev.reaction_coeff(i, j) * s_prev[r] + de * prev.diffusion(i, j);
      }
    for (std::size_t jc = 0; jc < grid.n; ++jc)
      for (std::size_t ic = 0; ic < grid.n; ++ic) {
        const std::size_t q = jc * grid.n + ic;
        f[m + q] = c[q] - c_prev[q] + mi * cur.cell_reaction_coeff(ic, jc) * c[q] +
                   me * prev.cell_reaction_coeff(ic, jc) * c_prev[q];
      }
  }
  return f;
}

/// The 2x2 block Jacobian of the stacked residual. Every block is banded;
/// cc is diagonal with entries 1 + O(dt).
struct JacobianBlocks {
  BandedMatrix ss, sc, cs, cc;
  std::size_t fields = 0;  // unknowns per field

  DenseVector apply(const DenseVector& x) const {
    if (x.size() != 2 * fields) throw DimensionError("JacobianBlocks: size mismatch");
    const DenseVector xs(x.begin(), x.begin() + static_cast<long>(fields));
    const DenseVector xc(x.begin() + static_cast<long>(fields), x.end());
    DenseVector ys = ss.matvec(xs);
    axpy(1.0, sc.matvec(xc), ys);
    DenseVector yc = cs.matvec(xs);
    axpy(1.0, cc.matvec(xc), yc);
    DenseVector y(2 * fields);
    std::copy(ys.begin(), ys.end(), y.begin());
    std::copy(yc.begin(), yc.end(), y.begin() + static_cast<long>(fields));
    return y;
  }
};

inline JacobianBlocks assemble_jacobian(const DenseVector& s, const DenseVector& c, double dt,
                                        const StaggeredGrid& grid, const SulfationParams& params,
                                        SchemeKind scheme) {
  const std::size_t m = grid.unknowns_per_field();
  if (s.size() != m || c.size() != m) throw DimensionError("sulfation jacobian: size mismatch");
  const double h = grid.h();
  const double ti = detail::implicit_weight(scheme);
  const double ki = ti * dt * params.a / params.m_c;
  const double di = ti * dt * params.d / (h * h);
  const double mi = ti * dt * params.a / params.m_s;
  const double ap = porosity_prime(params);

  JacobianBlocks jb;
  jb.fields = m;

  if (grid.dim == Dimensionality::one_d) {
    const detail::Level1D lv{s, c, params, grid.n};
    const std::size_t n = grid.n;
    jb.ss = BandedMatrix(n, {-1, 0, 1});
    jb.sc = BandedMatrix(n, {0, 1});
    jb.cs = BandedMatrix(n, {-1, 0});
    jb.cc = BandedMatrix(n, {0});

    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t r = j - 1;
      const double pw = lv.phi(j - 1);
      const double pe = lv.phi(j);  // mirrored at j = n
      jb.ss.add(r, r, lv.mass_coeff(j) + ki * lv.reaction_coeff(j) + di * (pw + pe));
      if (j > 1) jb.ss.add(r, r - 1, -di * pw);
      if (j < n)
        jb.ss.add(r, r + 1, -di * pe);
      else
        jb.ss.add(r, r - 1, -di * pe);  // mirror folds east coupling back

      const std::size_t qe = std::min(j, n - 1);  // east cell (mirrored)
      // phi and phi*c averages at the node
      jb.sc.add(r, r, 0.5 * ap * s[r] + ki * s[r] * 0.5 * (ap * lv.cc(j - 1) + pw));
      jb.sc.add(r, qe, 0.5 * ap * s[r] + ki * s[r] * 0.5 * (ap * lv.cc(j) + pe));
      // diffusion faces
      const double west_diff = j == 1 ? s[0] : s[r] - s[r - 1];
      jb.sc.add(r, r, di * ap * west_diff);
      const double east_diff = j == n ? s[r] - s[r - 1] : s[r] - s[r + 1];
      jb.sc.add(r, qe, di * ap * east_diff);
    }
    for (std::size_t q = 0; q < n; ++q) {
      if (q == 0) {
        jb.cs.add(0, 0, mi * 0.5 * lv.phi(0) * c[0]);
        jb.cc.add(0, 0, 1.0 + mi * 0.5 * (ap * c[0] * s[0] + lv.phi(0) * s[0] + params.rho_s0));
      } else {
        jb.cs.add(q, q - 1, mi * 0.5 * lv.phi(q) * c[q]);
        jb.cs.add(q, q, mi * 0.5 * lv.phi(q) * c[q]);
        jb.cc.add(q, q,
                  1.0 + mi * (ap * c[q] + lv.phi(q)) * 0.5 * (s[q - 1] + s[q]));
      }
    }
    return jb;
  }

  const detail::Level2D lv{s, c, params, grid.n};
  const std::size_t n = grid.n;
  const long ln = static_cast<long>(n);
  jb.ss = BandedMatrix(m, {-ln, -1, 0, 1, ln});
  jb.sc = BandedMatrix(m, {0, 1, ln, ln + 1});
  jb.cs = BandedMatrix(m, {-ln - 1, -ln, -1, 0});
  jb.cc = BandedMatrix(m, {0});

  for (std::size_t j = 1; j <= n; ++j)
    for (std::size_t i = 1; i <= n; ++i) {
      const std::size_t r = lv.node_index(i, j);
      const double pw = lv.face_w(i, j), pe = lv.face_e(i, j);
      const double ps = lv.face_s(i, j), pn = lv.face_n(i, j);
      jb.ss.add(r, r, lv.mass_coeff(i, j) + ki * lv.reaction_coeff(i, j) + di * (pw + pe + ps + pn));
      if (i > 1) jb.ss.add(r, r - 1, -di * pw);
      if (i < n) jb.ss.add(r, r + 1, -di * pe); else jb.ss.add(r, r - 1, -di * pe);
      if (j > 1) jb.ss.add(r, r - n, -di * ps);
      if (j < n) jb.ss.add(r, r + n, -di * pn); else jb.ss.add(r, r - n, -di * pn);

      // c-derivatives of the node averages: four (clamped) cell references
      const std::size_t cells[4][2] = {{i - 1, j - 1}, {i, j - 1}, {i - 1, j}, {i, j}};
      for (const auto& cell : cells) {
        const std::size_t q = lv.cell_index(cell[0], cell[1]);
        jb.sc.add(r, q,
                  0.25 * ap * s[r] + ki * s[r] * 0.25 * (ap * lv.cc(cell[0], cell[1]) +
                                                          lv.phi(cell[0], cell[1])));
      }
      // c-derivatives of the face coefficients
      const double dw = i == 1 ? lv.sval(1, j) : lv.sval(i, j) - lv.sval(i - 1, j);
      const double de2 = i == n ? lv.sval(n, j) - lv.sval(n - 1, j) : lv.sval(i, j) - lv.sval(i + 1, j);
      const double dss = j == 1 ? lv.sval(i, 1) : lv.sval(i, j) - lv.sval(i, j - 1);
      const double dn = j == n ? lv.sval(i, n) - lv.sval(i, n - 1) : lv.sval(i, j) - lv.sval(i, j + 1);
      jb.sc.add(r, lv.cell_index(i - 1, j - 1), di * 0.5 * ap * dw);
      jb.sc.add(r, lv.cell_index(i - 1, j), di * 0.5 * ap * dw);
      jb.sc.add(r, lv.cell_index(i, j - 1), di * 0.5 * ap * de2);
      jb.sc.add(r, lv.cell_index(i, j), di * 0.5 * ap * de2);
      jb.sc.add(r, lv.cell_index(i - 1, j - 1), di * 0.5 * ap * dss);
      jb.sc.add(r, lv.cell_index(i, j - 1), di * 0.5 * ap * dss);
      jb.sc.add(r, lv.cell_index(i - 1, j), di * 0.5 * ap * dn);
      jb.sc.add(r, lv.cell_index(i, j), di * 0.5 * ap * dn);
    }

  for (std::size_t jc = 0; jc < n; ++jc)
    for (std::size_t ic = 0; ic < n; ++ic) {
      const std::size_t q = jc * n + ic;
      const auto [sum, dirichlet] = lv.corner_sum(ic, jc);
      for (std::size_t b = jc; b <= jc + 1; ++b)
        for (std::size_t a = ic; a <= ic + 1; ++a) {
          if (a == 0 || b == 0) continue;
          jb.cs.add(q, lv.node_index(a, b), mi * 0.25 * lv.phi(ic, jc) * c[q]);
        }
      const double coeff = 0.25 * (lv.phi(ic, jc) * sum + static_cast<double>(dirichlet) * params.rho_s0);
      jb.cc.add(q, q, 1.0 + mi * (0.25 * ap * sum * c[q] + coeff));
    }
  return jb;
}

enum class InnerSolver { one_v_cycle, mgm_to_convergence };

/// Counters for the inner multigrid work done inside the preconditioner.
struct PreconditionerStats {
  std::size_t applications = 0;
  std::size_t inner_cycles = 0;
};

/// Block upper-triangular preconditioner [[ss, sc], [0, cc]]: the c-block
/// is solved by its diagonal, then the s-block by multigrid on ss (one
/// V-cycle, or cycles to convergence).
inline Preconditioner build_preconditioner(const JacobianBlocks& blocks, InnerSolver inner,
                                           const StaggeredGrid& grid, const SmootherSpec& smoother,
                                           std::shared_ptr<PreconditionerStats> stats = {}) {
  const std::size_t m = blocks.fields;
  for (double z : blocks.cc.band(0))
    if (z == 0.0) throw SingularMatrixError("block preconditioner: zero cc diagonal entry");

  auto hierarchy = std::make_shared<MultigridHierarchy>(
      MultigridHierarchy::build(blocks.ss, grid.shape(), smoother));
  auto sc = std::make_shared<BandedMatrix>(blocks.sc);
  auto cc_diag = std::make_shared<DenseVector>(blocks.cc.band(0));

  return [m, inner, hierarchy, sc, cc_diag, stats](const DenseVector& b) {
    if (b.size() != 2 * m) throw DimensionError("block preconditioner: size mismatch");
    DenseVector bs(b.begin(), b.begin() + static_cast<long>(m));
    DenseVector yc(b.begin() + static_cast<long>(m), b.end());
    for (std::size_t i = 0; i < m; ++i) yc[i] /= (*cc_diag)[i];
    const DenseVector coupled = sc->matvec(yc);
    for (std::size_t i = 0; i < m; ++i) bs[i] -= coupled[i];
    DenseVector ys;
    std::size_t cycles = 1;
    if (inner == InnerSolver::one_v_cycle) {
      ys = hierarchy->v_cycle(0, zeros(m), bs);
    } else {
      auto [sol, used] = hierarchy->solve(bs, 1e-11, 300);
      ys = std::move(sol);
      cycles = used;
    }
    if (stats) {
      stats->applications += 1;
      stats->inner_cycles += cycles;
    }
    DenseVector y(2 * m);
    std::copy(ys.begin(), ys.end(), y.begin());
    std::copy(yc.begin(), yc.end(), y.begin() + static_cast<long>(m));
    return y;
  };
}

enum class PreconditionerMode { none, block_triangular_v_cycle, block_triangular_mgm };

struct StepOptions {
  SchemeKind scheme = SchemeKind::crank_nicholson;
  NewtonConfig newton{};
  GmresConfig gmres{};
  PreconditionerMode preconditioner = PreconditionerMode::block_triangular_v_cycle;
  std::optional<SmootherSpec> smoother;
  std::shared_ptr<PreconditionerStats> stats;
};

/// One implicit step of the coupled system (no timestep restriction here;
/// the scheme is unconditionally stable).
inline std::pair<SulfationState, NewtonReport> step(const SulfationState& state, double dt,
                                                    const StaggeredGrid& grid,
                                                    const SulfationParams& params,
                                                    const StepOptions& opts) {
  if (params.beta <= 0.0 && opts.preconditioner != PreconditionerMode::none)
    std::cerr << "marmor: warning: porosity not bounded away from zero (beta <= 0); "
                 "the block preconditioner loses its optimality guarantee\n";

  const std::size_t m = grid.unknowns_per_field();
  const SmootherSpec smoother = opts.smoother.value_or(SmootherSpec::default_for(grid.dim));

  NonlinearProblem problem;
  problem.dimension = 2 * m;
  problem.residual = [&, dt](const DenseVector& u) {
    const DenseVector us(u.begin(), u.begin() + static_cast<long>(m));
    const DenseVector uc(u.begin() + static_cast<long>(m), u.end());
    return residual(us, uc, state.s, state.c, dt, grid, params, opts.scheme);
  };
  problem.linearize = [&, dt, smoother](const DenseVector& u) {
    const DenseVector us(u.begin(), u.begin() + static_cast<long>(m));
    const DenseVector uc(u.begin() + static_cast<long>(m), u.end());
    auto blocks = std::make_shared<JacobianBlocks>(
        assemble_jacobian(us, uc, dt, grid, params, opts.scheme));
    LinearizedSystem sys;
    sys.op = LinearOperator{2 * m, [blocks](const DenseVector& x) { return blocks->apply(x); }};
    if (opts.preconditioner != PreconditionerMode::none) {
      const InnerSolver inner = opts.preconditioner == PreconditionerMode::block_triangular_v_cycle
                                    ? InnerSolver::one_v_cycle
                                    : InnerSolver::mgm_to_convergence;
      sys.preconditioner = build_preconditioner(*blocks, inner, grid, smoother, opts.stats);
    }
    return sys;
  };

  DenseVector u0(2 * m);
  std::copy(state.s.begin(), state.s.end(), u0.begin());
  std::copy(state.c.begin(), state.c.end(), u0.begin() + static_cast<long>(m));

  auto [u, report] = newton_solve(problem, std::move(u0), opts.newton, opts.gmres);
  if (!report.converged)
    throw SolverError("sulfation step: Newton did not converge within " +
                      std::to_string(opts.newton.max_iter) + " iterations");

  SulfationState next;
  next.t = state.t + dt;
  next.s.assign(u.begin(), u.begin() + static_cast<long>(m));
  next.c.assign(u.begin() + static_cast<long>(m), u.end());
  return {std::move(next), std::move(report)};
}

/// Gypsum-carbonate interface: midpoint of the half-integer pair with the
/// steepest c-gradient (ties resolve toward the outer wall). Returns
/// nothing when c is exactly flat.
inline std::optional<double> front_position(const DenseVector& c, const StaggeredGrid& grid) {
  if (grid.dim != Dimensionality::one_d)
    throw DimensionError("front_position: defined for 1D profiles only");
  if (c.size() != grid.n || grid.n < 3) throw DimensionError("front_position: bad profile length");
  const double h = grid.h();
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t q = 0; q + 1 < grid.n; ++q) {
    const double g = std::abs(c[q + 1] - c[q]) / h;
    if (g > best) {
      best = g;
      arg = q;
    }
  }
  if (best == 0.0) return std::nullopt;
  return grid.node_coord(arg + 1);  // midpoint of cells arg and arg+1
}

/// Least-squares slope of log(x) against log(t) over the trailing
/// fraction of the series.
inline double fit_front_slope(std::span<const double> t, std::span<const double> x,
                              double window_fraction) {
  if (t.size() != x.size()) throw DimensionError("fit_front_slope: length mismatch");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw Error("fit_front_slope: window fraction must lie in (0,1]");
  const std::size_t count =
      std::max<std::size_t>(static_cast<std::size_t>(std::ceil(window_fraction * t.size())), 1);
  if (count < 8) throw Error("fit_front_slope: insufficient data in the fitting window");
  std::vector<double> lt, lx;
  lt.reserve(count);
  lx.reserve(count);
  for (std::size_t i = t.size() - count; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !(x[i] > 0.0))
      throw Error("fit_front_slope: samples must be positive for the log-log fit");
    lt.push_back(std::log(t[i]));
    lx.push_back(std::log(x[i]));
  }
  return least_squares_slope(lt, lx);
}

struct IntegrationResult {
  SulfationState final_state;
  std::vector<SulfationState> snapshots;
  std::vector<RunRecord> records;
};

/// Advance to time T with uniform steps, optionally storing snapshots at
/// (or at the first step past) the requested times and tracking the front.
inline IntegrationResult integrate(const SulfationParams& params, const StaggeredGrid& grid,
                                   double T, double dt, const StepOptions& opts,
                                   std::span<const double> snapshot_times = {},
                                   bool track_front = false) {
  if (!(dt > 0.0)) throw Error("sulfation integrate: dt must be positive");
  IntegrationResult out;
  SulfationState state = initial_state(grid, params);
  std::vector<double> pending(snapshot_times.begin(), snapshot_times.end());
  std::sort(pending.begin(), pending.end());
  std::size_t next_snapshot = 0;

  const std::size_t steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  for (std::size_t k = 0; k < steps; ++k) {
    try {
      auto [next, rep] = step(state, dt, grid, params, opts);
      state = std::move(next);
      RunRecord rec = make_run_record(k, state.t, rep);
      if (track_front && grid.dim == Dimensionality::one_d) {
        if (const auto fp = front_position(state.c, grid)) rec.front_position = *fp;
      }
      out.records.push_back(std::move(rec));
    } catch (const SolverError& err) {
      throw SolverError("sulfation integrate: failure at step " + std::to_string(k + 1) +
                        " (t=" + std::to_string(state.t) + "): " + err.what());
    }
    while (next_snapshot < pending.size() && state.t >= pending[next_snapshot] - 1e-12) {
      out.snapshots.push_back(state);
      ++next_snapshot;
    }
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace marmor::sulf
