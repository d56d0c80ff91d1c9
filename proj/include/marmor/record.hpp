#pragma once

#include <optional>

#include "marmor/common.hpp"
#include "marmor/newton.hpp"

namespace marmor {

/// Per-timestep diagnostics collected by the integrators.
struct RunRecord {
  std::size_t step = 0;
  double t = 0.0;
  std::size_t newton_iterations = 0;
  std::size_t gmres_min = 0;
  std::size_t gmres_max = 0;
  double gmres_avg = 0.0;
  std::optional<double> l1_error;
  std::optional<double> linf_error;
  std::optional<double> front_position;
};

inline RunRecord make_run_record(std::size_t step, double t, const NewtonReport& rep) {
  RunRecord r;
  r.step = step;
  r.t = t;
  r.newton_iterations = rep.iterations;
  std::size_t total = 0;
  for (std::size_t i = 0; i < rep.linear_reports.size(); ++i) {
    const std::size_t it = rep.linear_reports[i].iterations;
    r.gmres_min = i == 0 ? it : std::min(r.gmres_min, it);
    r.gmres_max = std::max(r.gmres_max, it);
    total += it;
  }
  r.gmres_avg = rep.linear_reports.empty()
                    ? 0.0
                    : static_cast<double>(total) / static_cast<double>(rep.linear_reports.size());
  return r;
}

}  // namespace marmor
