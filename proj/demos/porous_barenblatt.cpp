// Integrate the degenerate diffusion benchmark and print the error table.
#include <cstdio>

#include "marmor/porous.hpp"

int main() {
  using namespace marmor;
  const double m = 4.0;
  std::printf("%8s %14s %14s %10s\n", "N", "l1_error", "linf_error", "newton");
  for (std::size_t n : {32, 64, 128, 256}) {
    porous::Grid grid(Dimensionality::one_d, -6.5, 6.5, n);
    porous::StepOptions opts;
    auto run = porous::integrate(porous::DiffusivitySpec::porous_medium(m), grid, 1.0, 20.0 / 32.0,
                                 1.0, opts, m);
    const auto err = porous::error_vs_exact(run.final_state, m, grid);
    double newton = 0.0;
    for (const auto& r : run.records) newton += static_cast<double>(r.newton_iterations);
    newton /= static_cast<double>(run.records.size());
    std::printf("%8zu %14.6e %14.6e %10.2f\n", n, err.l1, err.linf, newton);
  }
  return 0;
}
