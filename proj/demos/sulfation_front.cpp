// Track the gypsum-carbonate front for a fast-reaction run.
#include <cstdio>

#include "marmor/sulfation.hpp"

int main() {
  using namespace marmor;
  sulf::SulfationParams params;
  params.a = 1e4;
  sulf::StaggeredGrid grid(Dimensionality::one_d, 128);
  sulf::StepOptions opts;
  auto run = sulf::integrate(params, grid, 1.0, grid.h(), opts, {}, true);
  std::vector<double> ts, xs;
  for (const auto& rec : run.records)
    if (rec.front_position) {
      ts.push_back(rec.t);
      xs.push_back(*rec.front_position);
    }
  std::printf("tracked %zu front samples, final x_front = %.4f\n", ts.size(), xs.back());
  std::printf("trailing-half log-log slope: %.4f (sqrt(t) would be 0.5)\n",
              sulf::fit_front_slope(ts, xs, 0.5));
  return 0;
}
