#pragma once

#include <iostream>

#include "CLI11.hpp"
#include "marmor/harness/studies.hpp"

namespace marmor::harness {

namespace detail {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "results";
  std::string format = "csv";
  bool quiet = false;
};

inline void add_common_flags(CLI::App* sub, CliOptions& opts) {
  sub->add_option("--config", opts.config_path, "Configuration file (key = value sections)");
  sub->add_option("--out", opts.out_dir, "Output directory");
  sub->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
}

inline ExperimentConfig config_for(const CliOptions& opts, StudyKind fallback,
                                   const std::vector<StudyKind>& accepted) {
  ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig::defaults(fallback)
                                                  : load_config(opts.config_path);
  bool ok = false;
  for (StudyKind k : accepted) ok = ok || cfg.kind == k;
  if (!ok)
    throw ConfigError(std::string("configuration study kind '") + to_string(cfg.kind) +
                      "' does not match this subcommand");
  cfg.validate();
  return cfg;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 1 solver failure, 2 configuration/usage error.
inline int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Implicit solvers for porous-medium flow and marble sulfation"};
  app.require_subcommand(1);

  detail::CliOptions opts;
  struct Sub {
    CLI::App* app;
    StudyKind fallback;
    std::vector<StudyKind> accepted;
  };
  std::vector<Sub> subs;
  const auto add = [&](const char* name, const char* desc, StudyKind fallback,
                       std::vector<StudyKind> accepted) {
    CLI::App* sub = app.add_subcommand(name, desc);
    detail::add_common_flags(sub, opts);
    subs.push_back({sub, fallback, std::move(accepted)});
  };
  add("porous-convergence", "Error decay of the implicit schemes on the exact benchmark",
      StudyKind::porous_convergence, {StudyKind::porous_convergence});
  add("iterations", "GMRES/Newton iteration counts per grid size and preconditioner",
      StudyKind::porous_iterations,
      {StudyKind::porous_iterations, StudyKind::sulfation_iterations});
  add("sulfation-profile", "Concentration profiles at snapshot times",
      StudyKind::sulfation_profile, {StudyKind::sulfation_profile});
  add("front", "Gypsum-carbonate front position and its asymptotic slope",
      StudyKind::sulfation_front, {StudyKind::sulfation_front});
  add("sulfation-2d", "Two-dimensional corner simulation with iteration statistics",
      StudyKind::sulfation_2d, {StudyKind::sulfation_2d});

  // CLI11 wants argv in reverse order without the program name.
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    for (const Sub& sub : subs) {
      if (!sub.app->parsed()) continue;
      ExperimentConfig cfg = detail::config_for(opts, sub.fallback, sub.accepted);
      if (!cfg.output.empty() && opts.out_dir == "results") opts.out_dir = cfg.output;
      if (!opts.quiet)
        std::cerr << "marmor: running " << to_string(cfg.kind) << "...\n";
      const StudyResult result = run_study(cfg);
      const OutputFormat fmt =
          opts.format == "json" ? OutputFormat::json : OutputFormat::csv;
      const std::vector<std::string> files = write_study(result, opts.out_dir, fmt);
      if (!opts.quiet)
        for (const std::string& f : files) std::cerr << "marmor: wrote " << f << "\n";
      return 0;
    }
    std::cerr << "marmor: no subcommand selected\n" << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "marmor: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "marmor: " << e.what() << "\n";
    return 1;
  }
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args);
}

}  // namespace marmor::harness
