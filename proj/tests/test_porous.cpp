#include <catch2/catch_amalgamated.hpp>

#include "marmor/porous.hpp"
#include "support/oracles.hpp"

using namespace marmor;
using namespace marmor::porous;

namespace {

// Independent dense transcription of the 1D flux-form elliptic operator:
// row k couples its neighbors through face coefficients averaging D at the
// adjacent nodes; Dirichlet neighbors contribute to a right-hand side.
struct DenseDiffusion {
  DenseMatrix l;
  DenseVector rhs;
};

DenseDiffusion dense_diffusion_1d(const DenseVector& u, const DiffusivitySpec& spec, double bv) {
  const std::size_t n = u.size();
  const auto node = [&](long k) {
    return (k < 0 || k >= static_cast<long>(n)) ? bv : u[static_cast<std::size_t>(k)];
  };
  DenseDiffusion out{DenseMatrix(n, n), DenseVector(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const long k = static_cast<long>(i);
    const double dm = 0.5 * (spec(node(k - 1)) + spec(node(k)));
    const double dp = 0.5 * (spec(node(k)) + spec(node(k + 1)));
    out.l.at(i, i) = -(dm + dp);
    if (i > 0) out.l.at(i, i - 1) = dm; else out.rhs[i] += dm * bv;
    if (i + 1 < n) out.l.at(i, i + 1) = dp; else out.rhs[i] += dp * bv;
  }
  return out;
}

double discrete_mass(const DenseVector& u, const Grid& grid) {
  double s = 0.0;
  for (double x : u) s += x;
  return s * (grid.dim == Dimensionality::one_d ? grid.h() : grid.h() * grid.h());
}

}  // namespace

TEST_CASE("self-similar reference solution: constants and sample values") {
  REQUIRE(barenblatt_alpha(4.0, 1) == Catch::Approx(0.2).margin(1e-15));
  REQUIRE(barenblatt_k(4.0, 1) == Catch::Approx(3.0 / 40.0).margin(1e-15));

  // center value at t = 1 is exactly 1 for every m
  REQUIRE(barenblatt(1.0, 0.0, 4.0) == Catch::Approx(1.0).margin(1e-15));

  // evaluate the closed form at x = 1: (1 - k)^(1/(m-1))
  const double want = std::cbrt(1.0 - 3.0 / 40.0);
  REQUIRE(barenblatt(1.0, 1.0, 4.0) == Catch::Approx(want).margin(1e-15));

  // compact support: far outside the ball the solution vanishes
  REQUIRE(barenblatt(1.0, 4.0, 4.0) == 0.0);
  REQUIRE(barenblatt(2.0, 100.0, 3.0) == 0.0);
  const double xy[2] = {5.0, 5.0};
  REQUIRE(barenblatt(1.0, std::span<const double>(xy, 2), 4.0) == 0.0);

  REQUIRE_THROWS_AS(barenblatt(0.0, 1.0, 4.0), Error);
}

TEST_CASE("constant diffusivity reproduces the plain Laplacian stencil") {
  const Grid grid(Dimensionality::one_d, 0.0, 4.0, 3);
  const auto [l, bc] = assemble_diffusion(DenseVector(3, 0.7), DiffusivitySpec::constant(1.0),
                                          grid, 0.0);
  REQUIRE(l.at(0, 0) == -2.0);
  REQUIRE(l.at(0, 1) == 1.0);
  REQUIRE(l.at(1, 0) == 1.0);
  REQUIRE(l.at(1, 1) == -2.0);
  REQUIRE(l.at(1, 2) == 1.0);
  REQUIRE(l.at(2, 2) == -2.0);
  REQUIRE(bc == zeros(3));
}

TEST_CASE("vanishing diffusivity yields the zero operator") {
  const Grid grid(Dimensionality::one_d, 0.0, 1.0, 5);
  const auto [l, bc] = assemble_diffusion(DenseVector(5, 2.0), DiffusivitySpec::constant(0.0),
                                          grid, 1.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) REQUIRE(l.at(i, j) == 0.0);
  REQUIRE(bc == zeros(5));
}

TEST_CASE("diffusion assembly matches the independent dense transcription") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 16);
  const DiffusivitySpec spec = DiffusivitySpec::power_law(4.0);
  const DenseVector u = barenblatt_on_grid(1.0, grid, 4.0);
  const auto [l, bc] = assemble_diffusion(u, spec, grid, 0.0);
  const DenseDiffusion want = dense_diffusion_1d(u, spec, 0.0);
  for (std::size_t i = 0; i < 16; ++i) {
    REQUIRE(bc[i] == Catch::Approx(want.rhs[i]).margin(1e-14));
    for (std::size_t j = 0; j < 16; ++j)
      REQUIRE(l.at(i, j) == Catch::Approx(want.l.at(i, j)).margin(1e-14));
  }
}

TEST_CASE("diffusion matrix is symmetric with zero interior row sums") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 31);
  const DenseVector u = barenblatt_on_grid(1.0, grid, 4.0);
  const auto [l, bc] = assemble_diffusion(u, DiffusivitySpec::power_law(4.0), grid, 0.0);
  REQUIRE(is_symmetric(l));
  for (std::size_t i = 1; i + 1 < 31; ++i)
    REQUIRE((l.at(i, i - 1) + l.at(i, i + 1)) + l.at(i, i) == 0.0);

  // 2D: rows away from the boundary ring also sum to zero exactly
  const Grid g2(Dimensionality::two_d, -6.0, 6.0, 9);
  const DenseVector u2 = barenblatt_on_grid(1.0, g2, 4.0);
  const auto [l2, bc2] = assemble_diffusion(u2, DiffusivitySpec::power_law(4.0), g2, 0.0);
  REQUIRE(is_symmetric(l2));
  for (std::size_t iy = 1; iy + 1 < 9; ++iy)
    for (std::size_t ix = 1; ix + 1 < 9; ++ix) {
      const std::size_t r = iy * 9 + ix;
      const double offsum =
          ((l2.at(r, r - 1) + l2.at(r, r + 1)) + l2.at(r, r - 9)) + l2.at(r, r + 9);
      REQUIRE(offsum + l2.at(r, r) == 0.0);
    }
}

TEST_CASE("negated diffusion matrix is positive semidefinite") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 48);
  const DenseVector u = barenblatt_on_grid(1.0, grid, 4.0);
  auto [l, bc] = assemble_diffusion(u, DiffusivitySpec::power_law(4.0), grid, 0.0);
  l.scale(-1.0);
  const auto ev = symmetric_eigenvalues(to_dense(l));
  REQUIRE(ev.front() >= -1e-12);
}

TEST_CASE("difference matrix: constants, linear data, dense oracle") {
  const Grid grid(Dimensionality::one_d, 0.0, 4.0, 3);
  // constant state including matching boundary data vanishes identically
  const BandedMatrix tz = assemble_difference_matrix(DenseVector(3, 2.5), grid, 2.5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(tz.at(i, j) == 0.0);

  // linear data: middle row reads [-1, 0, 1]
  const BandedMatrix tl = assemble_difference_matrix(DenseVector{1.0, 2.0, 3.0}, grid, 0.0);
  REQUIRE(tl.at(1, 0) == -1.0);
  REQUIRE(tl.at(1, 1) == 0.0);
  REQUIRE(tl.at(1, 2) == 1.0);

  // random data against a directly indexed oracle
  auto gen = oracles::rng(12);
  const Grid g16(Dimensionality::one_d, 0.0, 1.0, 16);
  const DenseVector u = oracles::random_vector(16, gen);
  const double bv = 0.3;
  const BandedMatrix t = assemble_difference_matrix(u, g16, bv);
  const auto node = [&](long k) {
    return (k < 0 || k >= 16) ? bv : u[static_cast<std::size_t>(k)];
  };
  for (long k = 0; k < 16; ++k) {
    const std::size_t i = static_cast<std::size_t>(k);
    REQUIRE(t.at(i, i) == Catch::Approx(node(k - 1) - 2 * node(k) + node(k + 1)).margin(1e-14));
    if (k > 0) REQUIRE(t.at(i, i - 1) == Catch::Approx(node(k - 1) - node(k)).margin(1e-14));
    if (k < 15) REQUIRE(t.at(i, i + 1) == Catch::Approx(node(k + 1) - node(k)).margin(1e-14));
  }
}

TEST_CASE("residual limit cases") {
  const Grid grid(Dimensionality::one_d, 0.0, 1.0, 8);
  auto gen = oracles::rng(5);
  const DenseVector u = oracles::random_vector(8, gen, 0.1, 1.0);

  // zero diffusivity and equal states
  REQUIRE(residual(u, u, 0.25, grid, DiffusivitySpec::constant(0.0),
                   SchemeKind::crank_nicholson) == zeros(8));

  // frozen time: F(u) = u - u_prev
  const DenseVector v = oracles::random_vector(8, gen, 0.1, 1.0);
  const DenseVector f = residual(u, v, 0.0, grid, DiffusivitySpec::power_law(4.0),
                                 SchemeKind::crank_nicholson);
  for (std::size_t i = 0; i < 8; ++i) REQUIRE(f[i] == Catch::Approx(u[i] - v[i]).margin(1e-15));
}

TEST_CASE("constant diffusivity: the scheme is linear and solvable directly") {
  const Grid grid(Dimensionality::one_d, 0.0, 1.0, 12);
  const double kappa = 0.8, dt = 0.05, bv = 0.2;
  const DiffusivitySpec spec = DiffusivitySpec::constant(kappa);
  auto gen = oracles::rng(42);
  const DenseVector u_prev = oracles::random_vector(12, gen, 0.0, 1.0);

  const double h = grid.h();
  const double w = 0.5 * dt / (h * h);
  const auto [l, bc] = assemble_diffusion(u_prev, spec, grid, bv);
  // (I - w L) u = u_prev + w (L u_prev + bc) + w bc
  DenseMatrix sys = to_dense(l);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) sys.at(i, j) = (i == j ? 1.0 : 0.0) - w * sys.at(i, j);
  DenseVector rhs = l.matvec(u_prev);
  for (std::size_t i = 0; i < 12; ++i)
    rhs[i] = u_prev[i] + w * (rhs[i] + bc[i]) + w * bc[i];
  const DenseVector u_next = dense_solve(sys, rhs);

  const DenseVector f = residual(u_next, u_prev, dt, grid, spec,
                                 SchemeKind::crank_nicholson, bv);
  REQUIRE(norm_inf(f) <= 1e-12);
}

TEST_CASE("jacobian reductions: constant D and frozen time") {
  const Grid grid(Dimensionality::one_d, 0.0, 1.0, 10);
  auto gen = oracles::rng(6);
  const DenseVector u = oracles::random_vector(10, gen, 0.1, 1.0);

  // constant D: the chain-rule term vanishes and J equals the Picard matrix
  const NewtonMatrices nm =
      newton_matrices(u, 0.1, grid, DiffusivitySpec::constant(2.0), SchemeKind::crank_nicholson);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) REQUIRE(nm.jacobian.at(i, j) == nm.picard.at(i, j));

  // dt = 0: identity
  const BandedMatrix j0 =
      jacobian(u, 0.0, grid, DiffusivitySpec::power_law(4.0), SchemeKind::crank_nicholson);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) REQUIRE(j0.at(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("jacobian matches finite differences of the residual") {
  auto gen = oracles::rng(2718);
  for (const Dimensionality dim : {Dimensionality::one_d, Dimensionality::two_d}) {
    const std::size_t n = dim == Dimensionality::one_d ? 24 : 7;
    const Grid grid(dim, -6.0, 6.0, n);
    const DiffusivitySpec spec = DiffusivitySpec::power_law(4.0);
    const DenseVector u_prev = barenblatt_on_grid(1.0, grid, 4.0);
    DenseVector u = u_prev;
    for (double& x : u) x *= 1.02;  // a state slightly off the previous level
    const double dt = 0.8 * grid.h();
    for (const SchemeKind scheme : {SchemeKind::crank_nicholson, SchemeKind::implicit_euler}) {
      const BandedMatrix j = jacobian(u, dt, grid, spec, scheme);
      const double defect = oracles::jacobian_fd_defect(
          [&](const DenseVector& w) { return residual(w, u_prev, dt, grid, spec, scheme); },
          [&](const DenseVector& e) { return j.matvec(e); }, u,
          oracles::fd_directions(grid.unknowns(), gen));
      REQUIRE(defect <= 1e-5);
    }
  }
}

TEST_CASE("2D constant-diffusivity assembly is the five-point Laplacian") {
  const Grid grid(Dimensionality::two_d, 0.0, 1.0, 4);
  const auto [l, bc] = assemble_diffusion(DenseVector(16, 0.3), DiffusivitySpec::constant(1.0),
                                          grid, 0.0);
  for (std::size_t iy = 0; iy < 4; ++iy)
    for (std::size_t ix = 0; ix < 4; ++ix) {
      const std::size_t r = iy * 4 + ix;
      REQUIRE(l.at(r, r) == -4.0);
      if (ix > 0) REQUIRE(l.at(r, r - 1) == 1.0);
      if (ix + 1 < 4) REQUIRE(l.at(r, r + 1) == 1.0);
      if (iy > 0) REQUIRE(l.at(r, r - 4) == 1.0);
      if (iy + 1 < 4) REQUIRE(l.at(r, r + 4) == 1.0);
    }
}

TEST_CASE("zero diffusivity step is the identity evolution") {
  const Grid grid(Dimensionality::one_d, 0.0, 1.0, 8);
  PorousState state;
  state.t = 0.0;
  auto gen = oracles::rng(3);
  state.u = oracles::random_vector(8, gen);
  StepOptions opts;
  opts.preconditioner = PreconditionerMode::none;
  const auto [next, rep] = step(state, 0.05, grid, DiffusivitySpec::constant(0.0), opts);
  REQUIRE(rep.iterations == 1);
  REQUIRE(next.t == Catch::Approx(0.05));
  REQUIRE(oracles::max_abs_diff(next.u, state.u) <= 1e-12);
}

TEST_CASE("the timestep guard refuses dt > C*h") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 32);
  PorousState state{1.0, barenblatt_on_grid(1.0, grid, 4.0)};
  StepOptions opts;
  REQUIRE_THROWS_AS(step(state, 2.0 * grid.h(), grid, DiffusivitySpec::power_law(4.0), opts),
                    SolverError);
}

TEST_CASE("first step: Newton reaches 1e-6 quickly and conserves mass") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 128);
  const DiffusivitySpec spec = DiffusivitySpec::power_law(4.0);
  PorousState state{1.0, barenblatt_on_grid(1.0, grid, 4.0)};
  StepOptions opts;
  const double dt = grid.h();
  const auto [next, rep] = step(state, dt, grid, spec, opts);
  REQUIRE(rep.converged);
  REQUIRE(rep.iterations <= 6);
  REQUIRE(std::abs(discrete_mass(next.u, grid) - discrete_mass(state.u, grid)) <= 1e-10);
}

TEST_CASE("averaged explicit warm start does not cost extra iterations") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 96);
  const DiffusivitySpec spec = DiffusivitySpec::power_law(4.0);
  PorousState state{1.0, barenblatt_on_grid(1.0, grid, 4.0)};
  StepOptions cold;
  const auto [u1, rep_cold] = step(state, grid.h(), grid, spec, cold);
  StepOptions warm;
  warm.newton.warm_start = WarmStartMode::explicit_euler_average;
  const auto [u2, rep_warm] = step(state, grid.h(), grid, spec, warm);
  REQUIRE(rep_warm.iterations <= rep_cold.iterations + 1);
  REQUIRE(oracles::max_abs_diff(u1.u, u2.u) <= 1e-6);
}

TEST_CASE("error norms against the exact solution") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 64);
  PorousState exact{1.5, barenblatt_on_grid(1.5, grid, 4.0)};
  const ErrorNorms zero = error_vs_exact(exact, 4.0, grid);
  REQUIRE(zero.l1 <= 1e-15);
  REQUIRE(zero.linf <= 1e-15);

  const double delta = 0.01;
  PorousState shifted = exact;
  for (double& x : shifted.u) x += delta;
  const ErrorNorms e = error_vs_exact(shifted, 4.0, grid);
  REQUIRE(e.linf == Catch::Approx(delta).margin(1e-14));
  REQUIRE(e.l1 == Catch::Approx(delta * grid.h() * 64).margin(1e-12));
}

TEST_CASE("refinement at least halves the l1 error") {
  StepOptions opts;
  const DiffusivitySpec spec = DiffusivitySpec::power_law(4.0);
  double coarse = 0.0, fine = 0.0;
  {
    const Grid grid(Dimensionality::one_d, -6.0, 6.0, 64);
    const auto run = integrate(spec, grid, 1.0, 20.0 / 32.0, 1.0, opts, 4.0);
    coarse = error_vs_exact(run.final_state, 4.0, grid).l1;
  }
  {
    const Grid grid(Dimensionality::one_d, -6.0, 6.0, 128);
    const auto run = integrate(spec, grid, 1.0, 20.0 / 32.0, 1.0, opts, 4.0);
    fine = error_vs_exact(run.final_state, 4.0, grid).l1;
  }
  REQUIRE(coarse / fine >= 2.0);
}

TEST_CASE("states stay essentially non-negative while the support is interior") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 64);
  StepOptions opts;
  const auto run = integrate(DiffusivitySpec::power_law(4.0), grid, 1.0, 20.0 / 32.0, 1.0, opts,
                             4.0);
  double lowest = 0.0;
  for (double x : run.final_state.u) lowest = std::min(lowest, x);
  REQUIRE(lowest >= -1e-8);
}

TEST_CASE("integrate with zero elapsed time returns the initial state") {
  const Grid grid(Dimensionality::one_d, -6.0, 6.0, 32);
  StepOptions opts;
  const auto run = integrate(DiffusivitySpec::power_law(4.0), grid, 1.0, 0.0, 1.0, opts, 4.0);
  REQUIRE(run.records.empty());
  REQUIRE(run.final_state.t == 1.0);
  REQUIRE(run.final_state.u == barenblatt_on_grid(1.0, grid, 4.0));
}
