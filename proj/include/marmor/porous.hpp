#pragma once

#include <cmath>
#include <memory>
#include <span>

#include "marmor/banded.hpp"
#include "marmor/common.hpp"
#include "marmor/multigrid.hpp"
#include "marmor/newton.hpp"
#include "marmor/record.hpp"

namespace marmor::porous {

/// Nonlinear diffusivity D(u) with its derivative.
struct DiffusivitySpec {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  double operator()(double u) const { return value(u); }

  /// D(u) = u^m (clamped at zero from below so D stays non-negative).
  static DiffusivitySpec power_law(double m) {
    if (!(m > 0.0)) throw Error("power_law: exponent must be positive");
    DiffusivitySpec s;
    s.value = [m](double u) { return u <= 0.0 ? 0.0 : std::pow(u, m); };
    s.derivative = [m](double u) { return u <= 0.0 ? 0.0 : m * std::pow(u, m - 1.0); };
    return s;
  }

  /// Flux-form diffusivity of the porous medium equation u_t = lap(u^m):
  /// D(u) = m*u^(m-1), the pairing under which the self-similar reference
  /// solution is exact.
  static DiffusivitySpec porous_medium(double m) {
    if (!(m > 1.0)) throw Error("porous_medium: exponent must exceed 1");
    DiffusivitySpec s;
    s.value = [m](double u) { return u <= 0.0 ? 0.0 : m * std::pow(u, m - 1.0); };
    s.derivative = [m](double u) { return u <= 0.0 ? 0.0 : m * (m - 1.0) * std::pow(u, m - 2.0); };
    return s;
  }

  static DiffusivitySpec constant(double kappa) {
    DiffusivitySpec s;
    s.value = [kappa](double) { return kappa; };
    s.derivative = [](double) { return 0.0; };
    return s;
  }

  static DiffusivitySpec custom(std::function<double(double)> d,
                                std::function<double(double)> d_prime) {
    return DiffusivitySpec{std::move(d), std::move(d_prime)};
  }
};

/// Uniform grid of interior points on [a,b] (squared in 2D): nodes at
/// a + k*h with h = (b-a)/(n+1); the boundary ring carries Dirichlet data.
struct Grid {
  Dimensionality dim = Dimensionality::one_d;
  double a = -6.5;
  double b = 6.5;
  std::size_t n = 128;

  Grid() = default;
  Grid(Dimensionality d, double lo, double hi, std::size_t interior)
      : dim(d), a(lo), b(hi), n(interior) {
    if (n < 3) throw Error("Grid: need at least 3 interior points per axis");
    if (!(hi > lo)) throw Error("Grid: empty domain");
  }

  double h() const { return (b - a) / static_cast<double>(n + 1); }
  std::size_t unknowns() const { return dim == Dimensionality::one_d ? n : n * n; }
  LatticeShape shape() const { return LatticeShape{n, dim}; }

  /// Coordinate of interior node k (0-based) along one axis.
  double coord(std::size_t k) const { return a + static_cast<double>(k + 1) * h(); }
};

struct PorousState {
  double t = 0.0;
  DenseVector u;
};

/// Self-similar source solution of the power-law problem: value at time
/// t > 0 and point x (dimension = x.size()); zero outside the support ball.
inline double barenblatt(double t, std::span<const double> x, double m) {
  if (!(t > 0.0)) throw Error("barenblatt: requires t > 0");
  if (!(m > 1.0)) throw Error("barenblatt: requires m > 1");
  const double d = static_cast<double>(x.size());
  const double alpha = d / (d * (m - 1.0) + 2.0);
  const double k = alpha * (m - 1.0) / (2.0 * m * d);
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  const double s = 1.0 - k * r2 / std::pow(t, 2.0 * alpha / d);
  if (s <= 0.0) return 0.0;
  return std::pow(t, -alpha) * std::pow(s, 1.0 / (m - 1.0));
}

inline double barenblatt(double t, double x, double m) {
  return barenblatt(t, std::span<const double>(&x, 1), m);
}

inline double barenblatt_alpha(double m, int d) {
  return static_cast<double>(d) / (static_cast<double>(d) * (m - 1.0) + 2.0);
}

inline double barenblatt_k(double m, int d) {
  return barenblatt_alpha(m, d) * (m - 1.0) / (2.0 * m * static_cast<double>(d));
}

inline DenseVector barenblatt_on_grid(double t, const Grid& grid, double m) {
  DenseVector u(grid.unknowns());
  if (grid.dim == Dimensionality::one_d) {
    for (std::size_t k = 0; k < grid.n; ++k) u[k] = barenblatt(t, grid.coord(k), m);
  } else {
    for (std::size_t iy = 0; iy < grid.n; ++iy)
      for (std::size_t ix = 0; ix < grid.n; ++ix) {
        const double xy[2] = {grid.coord(ix), grid.coord(iy)};
        u[iy * grid.n + ix] = barenblatt(t, xy, m);
      }
  }
  return u;
}

/// Diffusion matrix (negative-semidefinite orientation) plus the vector of
/// Dirichlet boundary contributions, so that the discrete elliptic operator
/// applied to the interior unknowns is  matrix*u + boundary.
struct DiffusionOperator {
  BandedMatrix matrix;
  DenseVector boundary;
};

namespace detail {

inline void check_face(double v) {
  if (!std::isfinite(v)) throw SolverError("diffusion assembly: non-finite coefficient");
}

}  // namespace detail

/// Conservative second-order assembly with face coefficients equal to the
/// arithmetic mean of D at the two adjacent nodes. Tridiagonal in 1D,
/// five-point pentadiagonal in 2D. Interior row sums are exactly zero.
inline DiffusionOperator assemble_diffusion(const DenseVector& u, const DiffusivitySpec& spec,
                                            const Grid& grid, double boundary_value) {
  if (u.size() != grid.unknowns()) throw DimensionError("assemble_diffusion: size mismatch");
  const std::size_t n = grid.n;

  if (grid.dim == Dimensionality::one_d) {
    const auto node = [&](long k) { return (k < 0 || k >= static_cast<long>(n)) ? boundary_value : u[static_cast<std::size_t>(k)]; };
    // face[k] sits between interior nodes k-1 and k (boundaries at the ends)
    DenseVector face(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      face[k] = 0.5 * (spec(node(static_cast<long>(k) - 1)) + spec(node(static_cast<long>(k))));
      detail::check_face(face[k]);
    }
    BandedMatrix a(n, {-1, 0, 1});
    DenseVector bc(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      a.set(i, i, -(face[i] + face[i + 1]));
      if (i > 0) a.set(i, i - 1, face[i]);
      if (i + 1 < n) a.set(i, i + 1, face[i + 1]);
    }
    bc[0] += face[0] * boundary_value;
    bc[n - 1] += face[n] * boundary_value;
    return {std::move(a), std::move(bc)};
  }

  const auto val = [&](long ix, long iy) {
    if (ix < 0 || iy < 0 || ix >= static_cast<long>(n) || iy >= static_cast<long>(n))
      return boundary_value;
    return u[static_cast<std::size_t>(iy) * n + static_cast<std::size_t>(ix)];
  };
  const auto face = [&](long ix0, long iy0, long ix1, long iy1) {
    const double f = 0.5 * (spec(val(ix0, iy0)) + spec(val(ix1, iy1)));
    detail::check_face(f);
    return f;
  };

  BandedMatrix a(n * n, {-static_cast<long>(n), -1, 0, 1, static_cast<long>(n)});
  DenseVector bc(n * n, 0.0);
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      const std::size_t r = iy * n + ix;
      const long x = static_cast<long>(ix), y = static_cast<long>(iy);
      const double fw = face(x - 1, y, x, y);
      const double fe = face(x, y, x + 1, y);
      const double fs = face(x, y - 1, x, y);
      const double fn = face(x, y, x, y + 1);
      a.set(r, r, -(fw + fe + fs + fn));
      if (ix > 0) a.set(r, r - 1, fw); else bc[r] += fw * boundary_value;
      if (ix + 1 < n) a.set(r, r + 1, fe); else bc[r] += fe * boundary_value;
      if (iy > 0) a.set(r, r - n, fs); else bc[r] += fs * boundary_value;
      if (iy + 1 < n) a.set(r, r + n, fn); else bc[r] += fn * boundary_value;
    }
  return {std::move(a), std::move(bc)};
}

/// Matrix of neighbor differences of the current iterate: off-diagonal
/// entries u_nbr - u_node, diagonal entry the sum of those differences over
/// all neighbors (boundary neighbors included through the Dirichlet value).
/// This is the factor multiplying diag(D') in the Jacobian's chain-rule term.
inline BandedMatrix assemble_difference_matrix(const DenseVector& u, const Grid& grid,
                                               double boundary_value) {
  if (u.size() != grid.unknowns()) throw DimensionError("assemble_difference_matrix: size mismatch");
  const std::size_t n = grid.n;

  if (grid.dim == Dimensionality::one_d) {
    const auto node = [&](long k) { return (k < 0 || k >= static_cast<long>(n)) ? boundary_value : u[static_cast<std::size_t>(k)]; };
    BandedMatrix t(n, {-1, 0, 1});
    for (std::size_t i = 0; i < n; ++i) {
      const long k = static_cast<long>(i);
      const double left = node(k - 1) - node(k);
      const double right = node(k + 1) - node(k);
      t.set(i, i, left + right);
      if (i > 0) t.set(i, i - 1, left);
      if (i + 1 < n) t.set(i, i + 1, right);
    }
    return t;
  }

  const auto val = [&](long ix, long iy) {
    if (ix < 0 || iy < 0 || ix >= static_cast<long>(n) || iy >= static_cast<long>(n))
      return boundary_value;
    return u[static_cast<std::size_t>(iy) * n + static_cast<std::size_t>(ix)];
  };
  BandedMatrix t(n * n, {-static_cast<long>(n), -1, 0, 1, static_cast<long>(n)});
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      const std::size_t r = iy * n + ix;
      const long x = static_cast<long>(ix), y = static_cast<long>(iy);
      const double c = val(x, y);
      const double dw = val(x - 1, y) - c;
      const double de = val(x + 1, y) - c;
      const double ds = val(x, y - 1) - c;
      const double dn = val(x, y + 1) - c;
      t.set(r, r, dw + de + ds + dn);
      if (ix > 0) t.set(r, r - 1, dw);
      if (ix + 1 < n) t.set(r, r + 1, de);
      if (iy > 0) t.set(r, r - n, ds);
      if (iy + 1 < n) t.set(r, r + n, dn);
    }
  return t;
}

namespace detail {

inline double implicit_weight(SchemeKind scheme) {
  return scheme == SchemeKind::crank_nicholson ? 0.5 : 1.0;
}
inline double lagged_weight(SchemeKind scheme) {
  return scheme == SchemeKind::crank_nicholson ? 0.5 : 0.0;
}

}  // namespace detail

/// Residual of the implicit step equation F(u) = 0 advancing u_prev by dt.
inline DenseVector residual(const DenseVector& u, const DenseVector& u_prev, double dt,
                            const Grid& grid, const DiffusivitySpec& spec, SchemeKind scheme,
                            double boundary_value = 0.0) {
  if (u.size() != grid.unknowns() || u_prev.size() != grid.unknowns())
    throw DimensionError("porous residual: size mismatch");
  const double h = grid.h();
  const double ratio = dt / (h * h);
  const double wi = detail::implicit_weight(scheme) * ratio;
  const double we = detail::lagged_weight(scheme) * ratio;

  DenseVector f(u.size());
  const DiffusionOperator cur = assemble_diffusion(u, spec, grid, boundary_value);
  DenseVector lu = cur.matrix.matvec(u);
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = u[i] - wi * (lu[i] + cur.boundary[i]) - u_prev[i];
  if (we != 0.0) {
    const DiffusionOperator prev = assemble_diffusion(u_prev, spec, grid, boundary_value);
    DenseVector lp = prev.matrix.matvec(u_prev);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= we * (lp[i] + prev.boundary[i]);
  }
  return f;
}

/// Jacobian and its Picard part (the coefficient-frozen half used to build
/// the multigrid preconditioner).
struct NewtonMatrices {
  BandedMatrix picard;    // I - w*(dt/h^2)*L
  BandedMatrix jacobian;  // picard plus the D' chain-rule coupling
};

inline NewtonMatrices newton_matrices(const DenseVector& u, double dt, const Grid& grid,
                                      const DiffusivitySpec& spec, SchemeKind scheme,
                                      double boundary_value = 0.0) {
  const double h = grid.h();
  const double wi = detail::implicit_weight(scheme) * dt / (h * h);

  DiffusionOperator diff = assemble_diffusion(u, spec, grid, boundary_value);
  BandedMatrix picard = std::move(diff.matrix);
  picard.scale(-wi);
  picard.shift_diagonal(1.0);

  BandedMatrix jac = picard;
  const BandedMatrix t = assemble_difference_matrix(u, grid, boundary_value);
  // d(L(u)u)/du = L + (1/2) T diag(D'); fold the columns-scaled half in.
  for (long k : t.offsets()) {
    const DenseVector& src = t.band(k);
    DenseVector& dst = jac.band(k);
    const std::size_t row0 = k < 0 ? static_cast<std::size_t>(-k) : 0;
    for (std::size_t s = 0; s < src.size(); ++s) {
      const std::size_t col = static_cast<std::size_t>(static_cast<long>(row0 + s) + k);
      dst[s] += -wi * 0.5 * src[s] * spec.derivative(u[col]);
    }
  }
  return {std::move(picard), std::move(jac)};
}

inline BandedMatrix jacobian(const DenseVector& u, double dt, const Grid& grid,
                             const DiffusivitySpec& spec, SchemeKind scheme,
                             double boundary_value = 0.0) {
  return newton_matrices(u, dt, grid, spec, scheme, boundary_value).jacobian;
}

enum class PreconditionerMode { none, one_v_cycle, mgm_to_convergence };

struct StepOptions {
  SchemeKind scheme = SchemeKind::crank_nicholson;
  NewtonConfig newton{};
  GmresConfig gmres{};
  PreconditionerMode preconditioner = PreconditionerMode::one_v_cycle;
  double boundary_value = 0.0;
  std::optional<SmootherSpec> smoother;  // default picked per dimensionality

  StepOptions() { newton.timestep_guard_C = 1.0; }
};

/// Advance one implicit step with Newton + preconditioned GMRES. The
/// multigrid hierarchy is rebuilt on the Picard matrix of every iterate.
inline std::pair<PorousState, NewtonReport> step(const PorousState& state, double dt,
                                                 const Grid& grid, const DiffusivitySpec& spec,
                                                 const StepOptions& opts) {
  if (opts.newton.timestep_guard_C &&
      !timestep_guard(dt, grid.h(), *opts.newton.timestep_guard_C))
    throw SolverError("porous step: timestep guard rejected dt = " + std::to_string(dt) +
                      " > C*h = " + std::to_string(*opts.newton.timestep_guard_C * grid.h()));

  const SmootherSpec smoother = opts.smoother.value_or(SmootherSpec::default_for(grid.dim));
  const DenseVector& u_prev = state.u;

  NonlinearProblem problem;
  problem.dimension = grid.unknowns();
  problem.residual = [&, dt](const DenseVector& u) {
    return residual(u, u_prev, dt, grid, spec, opts.scheme, opts.boundary_value);
  };
  problem.linearize = [&, dt, smoother](const DenseVector& u) {
    NewtonMatrices m = newton_matrices(u, dt, grid, spec, opts.scheme, opts.boundary_value);
    LinearizedSystem sys;
    sys.op = LinearOperator::from_matrix(std::move(m.jacobian));
    if (opts.preconditioner != PreconditionerMode::none) {
      auto h = std::make_shared<MultigridHierarchy>(
          MultigridHierarchy::build(std::move(m.picard), grid.shape(), smoother));
      if (opts.preconditioner == PreconditionerMode::one_v_cycle)
        sys.preconditioner = v_cycle_preconditioner(h);
      else
        sys.preconditioner = [h](const DenseVector& r) { return h->solve(r, 1e-10, 100).first; };
    }
    return sys;
  };

  DenseVector u0 = u_prev;
  if (opts.newton.warm_start == WarmStartMode::explicit_euler_average) {
    const double ratio = dt / (grid.h() * grid.h());
    u0 = warm_start(u_prev, WarmStartMode::explicit_euler_average, [&](const DenseVector& v) {
      const DiffusionOperator d = assemble_diffusion(v, spec, grid, opts.boundary_value);
      DenseVector out = d.matrix.matvec(v);
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = v[i] + ratio * (out[i] + d.boundary[i]);
      return out;
    });
  }

  auto [u, report] = newton_solve(problem, std::move(u0), opts.newton, opts.gmres);
  if (!report.converged)
    throw SolverError("porous step: Newton did not converge within " +
                      std::to_string(opts.newton.max_iter) + " iterations");
  return {PorousState{state.t + dt, std::move(u)}, std::move(report)};
}

struct ErrorNorms {
  double l1 = 0.0;
  double linf = 0.0;
};

/// Grid-scaled l1 and sup error against the exact self-similar solution.
inline ErrorNorms error_vs_exact(const PorousState& state, double m, const Grid& grid) {
  const DenseVector exact = barenblatt_on_grid(state.t, grid, m);
  const double cell = grid.dim == Dimensionality::one_d ? grid.h() : grid.h() * grid.h();
  ErrorNorms e;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = std::abs(state.u[i] - exact[i]);
    e.l1 += d;
    e.linf = std::max(e.linf, d);
  }
  e.l1 *= cell;
  return e;
}

struct IntegrationResult {
  PorousState final_state;
  std::vector<RunRecord> records;
};

/// Integrate from t0 over an elapsed time T with uniform steps
/// dt = T/ceil(T/(lambda*h)). When barenblatt_m is given the initial data
/// is the exact solution at t0 and per-step error norms are recorded.
inline IntegrationResult integrate(const DiffusivitySpec& spec, const Grid& grid, double t0,
                                   double elapsed, double lambda, const StepOptions& opts,
                                   std::optional<double> barenblatt_m = std::nullopt,
                                   std::optional<DenseVector> initial = std::nullopt) {
  if (!(lambda > 0.0)) throw Error("porous integrate: lambda must be positive");
  PorousState state;
  state.t = t0;
  if (initial)
    state.u = std::move(*initial);
  else if (barenblatt_m)
    state.u = barenblatt_on_grid(t0, grid, *barenblatt_m);
  else
    throw Error("porous integrate: need initial data or a Barenblatt exponent");
  if (state.u.size() != grid.unknowns()) throw DimensionError("porous integrate: bad initial data");

  IntegrationResult out;
  if (elapsed <= 0.0) {
    out.final_state = std::move(state);
    return out;
  }
  const std::size_t steps =
      static_cast<std::size_t>(std::ceil(elapsed / (lambda * grid.h()) - 1e-12));
  const double dt = elapsed / static_cast<double>(std::max<std::size_t>(steps, 1));

  for (std::size_t k = 0; k < std::max<std::size_t>(steps, 1); ++k) {
    try {
      auto [next, rep] = step(state, dt, grid, spec, opts);
      state = std::move(next);
      RunRecord rec = make_run_record(k, state.t, rep);
      if (barenblatt_m) {
        const ErrorNorms e = error_vs_exact(state, *barenblatt_m, grid);
        rec.l1_error = e.l1;
        rec.linf_error = e.linf;
      }
      out.records.push_back(std::move(rec));
    } catch (const SolverError& err) {
      throw SolverError("porous integrate: failure at step " + std::to_string(k + 1) + " (t=" +
                        std::to_string(state.t) + "): " + err.what());
    }
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace marmor::porous
