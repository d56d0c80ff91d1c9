#pragma once

#include "marmor/harness/config.hpp"
#include "marmor/harness/output.hpp"
#include "marmor/porous.hpp"
#include "marmor/sulfation.hpp"

namespace marmor::harness {

namespace detail {

inline porous::PreconditionerMode porous_mode(const std::string& mode) {
  if (mode == "none") return porous::PreconditionerMode::none;
  if (mode == "one-v-cycle") return porous::PreconditionerMode::one_v_cycle;
  if (mode == "mgm-to-convergence") return porous::PreconditionerMode::mgm_to_convergence;
  throw ConfigError("preconditioner mode '" + mode + "' is not valid for the porous model");
}

inline sulf::PreconditionerMode sulfation_mode(const std::string& mode) {
  if (mode == "none") return sulf::PreconditionerMode::none;
  if (mode == "block-triangular/one-v-cycle")
    return sulf::PreconditionerMode::block_triangular_v_cycle;
  if (mode == "block-triangular/mgm-to-convergence")
    return sulf::PreconditionerMode::block_triangular_mgm;
  throw ConfigError("preconditioner mode '" + mode + "' is not valid for the sulfation model");
}

struct GmresAggregate {
  std::size_t min = 0, max = 0;
  double avg = 0.0;
  double newton_avg = 0.0;
};

inline GmresAggregate aggregate(const std::vector<RunRecord>& records) {
  GmresAggregate g;
  std::size_t newton_total = 0;
  double gmres_total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    g.min = i == 0 ? r.gmres_min : std::min(g.min, r.gmres_min);
    g.max = std::max(g.max, r.gmres_max);
    newton_total += r.newton_iterations;
    gmres_total += r.gmres_avg * static_cast<double>(r.newton_iterations);
  }
  if (newton_total > 0) g.avg = gmres_total / static_cast<double>(newton_total);
  if (!records.empty()) g.newton_avg = static_cast<double>(newton_total) / static_cast<double>(records.size());
  return g;
}

inline double sulfation_dt(const ExperimentConfig& cfg, const sulf::StaggeredGrid& grid) {
  return cfg.dt > 0.0 ? cfg.dt : grid.h();
}

inline sulf::StepOptions sulfation_options(const ExperimentConfig& cfg, const std::string& mode) {
  sulf::StepOptions opts;
  opts.scheme = cfg.scheme;
  opts.preconditioner = sulfation_mode(mode);
  opts.newton.timestep_guard_C.reset();
  return opts;
}

}  // namespace detail

/// Error decay of both schemes against the exact self-similar solution.
inline StudyResult run_porous_convergence(const ExperimentConfig& cfg) {
  StudyResult result;
  result.study = to_string(StudyKind::porous_convergence);

  Table errors;
  errors.name = "errors";
  errors.columns = {"n", "scheme", "l1_error", "linf_error"};
  Table fit;
  fit.name = "fit";
  fit.columns = {"scheme", "l1_decay_exponent", "linf_decay_exponent"};

  for (SchemeKind scheme : {SchemeKind::crank_nicholson, SchemeKind::implicit_euler}) {
    const std::string scheme_name =
        scheme == SchemeKind::crank_nicholson ? "crank-nicholson" : "implicit-euler";
    std::vector<double> log_n, log_l1, log_linf;
    for (std::size_t n : cfg.grid_sizes) {
      const porous::Grid grid(cfg.dimension, -cfg.domain_half_width, cfg.domain_half_width, n);
      porous::StepOptions opts;
      opts.scheme = scheme;
      auto run = porous::integrate(porous::DiffusivitySpec::porous_medium(cfg.m), grid, cfg.t_start,
                                   cfg.t_elapsed, cfg.dt_ratio, opts, cfg.m);
      const porous::ErrorNorms err = porous::error_vs_exact(run.final_state, cfg.m, grid);

      RunResult rr;
      rr.labels = {{"n", Cell{static_cast<long long>(n)}}, {"scheme", Cell{scheme_name}}};
      rr.records = std::move(run.records);
      rr.summary = {{"l1_error", err.l1}, {"linf_error", err.linf}, {"h", grid.h()}};
      result.runs.push_back(std::move(rr));

      errors.rows.push_back({Cell{static_cast<long long>(n)}, Cell{scheme_name}, Cell{err.l1},
                             Cell{err.linf}});
      log_n.push_back(std::log(static_cast<double>(n)));
      log_l1.push_back(std::log(err.l1));
      log_linf.push_back(std::log(err.linf));
    }
    if (log_n.size() >= 2)
      fit.rows.push_back({Cell{scheme_name}, Cell{-least_squares_slope(log_n, log_l1)},
                          Cell{-least_squares_slope(log_n, log_linf)}});
  }
  result.tables.push_back(std::move(errors));
  result.tables.push_back(std::move(fit));
  return result;
}

/// GMRES/Newton iteration counts per grid size and preconditioner mode,
/// for the porous model or the coupled sulfation model.
inline StudyResult run_iteration_study(const ExperimentConfig& cfg) {
  if (cfg.kind != StudyKind::porous_iterations && cfg.kind != StudyKind::sulfation_iterations &&
      cfg.kind != StudyKind::sulfation_2d)
    throw ConfigError("run_iteration_study: not an iteration study configuration");
  StudyResult result;
  result.study = to_string(cfg.kind);

  Table iter;
  iter.name = "iterations";
  iter.columns = {"n",         "mode",      "gmres_min", "gmres_avg",
                  "gmres_max", "newton_avg", "inner_cycles_avg"};
  Table fit;
  fit.name = "fit";
  fit.columns = {"mode", "gmres_growth_exponent"};

  for (const std::string& mode : cfg.modes) {
    std::vector<double> log_n, log_avg;
    for (std::size_t n : cfg.grid_sizes) {
      RunResult rr;
      rr.labels = {{"n", Cell{static_cast<long long>(n)}}, {"mode", Cell{mode}}};
      Cell inner_cycles{};

      if (cfg.kind == StudyKind::porous_iterations) {
        const porous::Grid grid(cfg.dimension, -cfg.domain_half_width, cfg.domain_half_width, n);
        porous::StepOptions opts;
        opts.scheme = cfg.scheme;
        opts.preconditioner = detail::porous_mode(mode);
        auto run = porous::integrate(porous::DiffusivitySpec::porous_medium(cfg.m), grid, cfg.t_start,
                                     cfg.t_elapsed, cfg.dt_ratio, opts, cfg.m);
        rr.records = std::move(run.records);
      } else {
        const sulf::StaggeredGrid grid(cfg.dimension, n);
        sulf::StepOptions opts = detail::sulfation_options(cfg, mode);
        opts.stats = std::make_shared<sulf::PreconditionerStats>();
        auto run = sulf::integrate(cfg.params, grid, cfg.t_final, detail::sulfation_dt(cfg, grid),
                                   opts);
        rr.records = std::move(run.records);
        if (opts.stats->applications > 0 &&
            opts.preconditioner == sulf::PreconditionerMode::block_triangular_mgm)
          inner_cycles = static_cast<double>(opts.stats->inner_cycles) /
                         static_cast<double>(opts.stats->applications);
      }

      const detail::GmresAggregate g = detail::aggregate(rr.records);
      rr.summary = {{"gmres_min", static_cast<double>(g.min)},
                    {"gmres_avg", g.avg},
                    {"gmres_max", static_cast<double>(g.max)},
                    {"newton_avg", g.newton_avg}};
      iter.rows.push_back({Cell{static_cast<long long>(n)}, Cell{mode},
                           Cell{static_cast<long long>(g.min)}, Cell{g.avg},
                           Cell{static_cast<long long>(g.max)}, Cell{g.newton_avg}, inner_cycles});
      log_n.push_back(std::log(static_cast<double>(n)));
      log_avg.push_back(std::log(std::max(g.avg, 1.0)));
      result.runs.push_back(std::move(rr));
    }
    if (log_n.size() >= 3)
      fit.rows.push_back({Cell{mode}, Cell{least_squares_slope(log_n, log_avg)}});
  }
  result.tables.push_back(std::move(iter));
  result.tables.push_back(std::move(fit));
  return result;
}

/// Concentration profiles at the requested snapshot times.
inline StudyResult run_sulfation_profile(const ExperimentConfig& cfg) {
  StudyResult result;
  result.study = to_string(StudyKind::sulfation_profile);
  const std::size_t n = cfg.grid_sizes.front();
  const sulf::StaggeredGrid grid(Dimensionality::one_d, n);
  for (double t : cfg.snapshot_times)
    if (t < 0.0 || t > cfg.t_final + 1e-12)
      throw ConfigError("snapshot time " + std::to_string(t) + " outside [0, t_final]");

  const std::string mode =
      cfg.preconditioner.empty() ? "block-triangular/one-v-cycle" : cfg.preconditioner;
  sulf::StepOptions opts = detail::sulfation_options(cfg, mode);
  auto run = sulf::integrate(cfg.params, grid, cfg.t_final, detail::sulfation_dt(cfg, grid), opts,
                             cfg.snapshot_times);

  Table profile;
  profile.name = "profile";
  profile.columns = {"t", "field", "x", "value"};
  for (const sulf::SulfationState& snap : run.snapshots) {
    for (std::size_t q = 0; q < grid.n; ++q)
      profile.rows.push_back({Cell{snap.t}, Cell{std::string("c")}, Cell{grid.cell_coord(q)},
                              Cell{snap.c[q]}});
    for (std::size_t j = 1; j <= grid.n; ++j)
      profile.rows.push_back({Cell{snap.t}, Cell{std::string("s")}, Cell{grid.node_coord(j)},
                              Cell{snap.s[j - 1]}});
  }

  RunResult rr;
  rr.labels = {{"n", Cell{static_cast<long long>(n)}}, {"a", Cell{cfg.params.a}}};
  rr.records = std::move(run.records);
  const detail::GmresAggregate g = detail::aggregate(rr.records);
  rr.summary = {{"gmres_avg", g.avg}, {"newton_avg", g.newton_avg}};
  result.runs.push_back(std::move(rr));
  result.tables.push_back(std::move(profile));
  return result;
}

/// Front position against time plus the trailing-window log-log slope.
inline StudyResult run_front_tracking(const ExperimentConfig& cfg) {
  StudyResult result;
  result.study = to_string(StudyKind::sulfation_front);
  const std::size_t n = cfg.grid_sizes.front();
  const sulf::StaggeredGrid grid(Dimensionality::one_d, n);
  const std::string mode =
      cfg.preconditioner.empty() ? "block-triangular/one-v-cycle" : cfg.preconditioner;
  sulf::StepOptions opts = detail::sulfation_options(cfg, mode);
  auto run = sulf::integrate(cfg.params, grid, cfg.t_final, detail::sulfation_dt(cfg, grid), opts,
                             {}, /*track_front=*/true);

  Table front;
  front.name = "front";
  front.columns = {"t", "x_front"};
  std::vector<double> ts, xs;
  for (const RunRecord& rec : run.records)
    if (rec.front_position) {
      front.rows.push_back({Cell{rec.t}, Cell{*rec.front_position}});
      ts.push_back(rec.t);
      xs.push_back(*rec.front_position);
    }
  if (ts.empty()) throw SolverError("front tracking: no front developed during the run");

  Table fit;
  fit.name = "fit";
  fit.columns = {"window", "slope"};
  fit.rows.push_back({Cell{cfg.window}, Cell{sulf::fit_front_slope(ts, xs, cfg.window)}});

  RunResult rr;
  rr.labels = {{"n", Cell{static_cast<long long>(n)}}, {"a", Cell{cfg.params.a}}};
  rr.records = std::move(run.records);
  rr.summary = {{"final_front", xs.back()},
                {"slope", std::get<double>(fit.rows.front()[1])}};
  result.runs.push_back(std::move(rr));
  result.tables.push_back(std::move(front));
  result.tables.push_back(std::move(fit));
  return result;
}

/// 2D corner simulation: final fields plus the per-step iteration counts
/// for every requested preconditioner mode.
inline StudyResult run_sulfation_2d(const ExperimentConfig& cfg) {
  StudyResult result;
  result.study = to_string(StudyKind::sulfation_2d);
  const std::size_t n = cfg.grid_sizes.front();
  const sulf::StaggeredGrid grid(Dimensionality::two_d, n);

  Table fields;
  fields.name = "fields";
  fields.columns = {"x", "y", "field", "value"};
  bool dumped = false;

  for (const std::string& mode : cfg.modes) {
    sulf::StepOptions opts = detail::sulfation_options(cfg, mode);
    auto run = sulf::integrate(cfg.params, grid, cfg.t_final, detail::sulfation_dt(cfg, grid), opts);
    if (!dumped) {
      const sulf::SulfationState& st = run.final_state;
      for (std::size_t jc = 0; jc < n; ++jc)
        for (std::size_t ic = 0; ic < n; ++ic)
          fields.rows.push_back({Cell{grid.cell_coord(ic)}, Cell{grid.cell_coord(jc)},
                                 Cell{std::string("c")}, Cell{st.c[jc * n + ic]}});
      for (std::size_t j = 1; j <= n; ++j)
        for (std::size_t i = 1; i <= n; ++i)
          fields.rows.push_back({Cell{grid.node_coord(i)}, Cell{grid.node_coord(j)},
                                 Cell{std::string("s")}, Cell{st.s[(j - 1) * n + (i - 1)]}});
      dumped = true;
    }
    RunResult rr;
    rr.labels = {{"n", Cell{static_cast<long long>(n)}}, {"mode", Cell{mode}}};
    rr.records = std::move(run.records);
    const detail::GmresAggregate g = detail::aggregate(rr.records);
    rr.summary = {{"gmres_min", static_cast<double>(g.min)},
                  {"gmres_avg", g.avg},
                  {"gmres_max", static_cast<double>(g.max)},
                  {"newton_avg", g.newton_avg}};
    result.runs.push_back(std::move(rr));
  }
  result.tables.push_back(std::move(fields));
  return result;
}

/// Dispatch a configuration to its study.
inline StudyResult run_study(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case StudyKind::porous_convergence: return run_porous_convergence(cfg);
    case StudyKind::porous_iterations:
    case StudyKind::sulfation_iterations: return run_iteration_study(cfg);
    case StudyKind::sulfation_profile: return run_sulfation_profile(cfg);
    case StudyKind::sulfation_front: return run_front_tracking(cfg);
    case StudyKind::sulfation_2d: return run_sulfation_2d(cfg);
  }
  throw ConfigError("unknown study kind");
}

}  // namespace marmor::harness
