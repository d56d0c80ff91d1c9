#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "marmor/common.hpp"
#include "marmor/sulfation.hpp"

namespace marmor::harness {

enum class StudyKind {
  porous_convergence,
  porous_iterations,
  sulfation_profile,
  sulfation_front,
  sulfation_iterations,
  sulfation_2d,
};

inline const char* to_string(StudyKind k) {
  switch (k) {
    case StudyKind::porous_convergence: return "porous-convergence";
    case StudyKind::porous_iterations: return "porous-iterations";
    case StudyKind::sulfation_profile: return "sulfation-profile";
    case StudyKind::sulfation_front: return "sulfation-front";
    case StudyKind::sulfation_iterations: return "sulfation-iterations";
    case StudyKind::sulfation_2d: return "sulfation-2d";
  }
  return "?";
}

inline StudyKind study_from_string(const std::string& s) {
  for (StudyKind k : {StudyKind::porous_convergence, StudyKind::porous_iterations,
                      StudyKind::sulfation_profile, StudyKind::sulfation_front,
                      StudyKind::sulfation_iterations, StudyKind::sulfation_2d})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown study kind '" + s + "'");
}

/// Experiment description: one study section of key = value pairs. The
/// defaults reproduce the reference runs, so an empty section is a valid
/// configuration.
struct ExperimentConfig {
  StudyKind kind = StudyKind::porous_convergence;
  Dimensionality dimension = Dimensionality::one_d;
  SchemeKind scheme = SchemeKind::crank_nicholson;
  std::vector<std::size_t> grid_sizes;
  std::vector<std::string> modes;  // preconditioner modes for iteration studies
  std::string preconditioner;     // single mode for profile/front studies

  // porous model
  double m = 4.0;
  double domain_half_width = 6.5;
  double t_start = 1.0;
  double t_elapsed = 20.0 / 32.0;
  double dt_ratio = 1.0;

  // sulfation model
  sulf::SulfationParams params{};
  double t_final = 1.0;
  double dt = 0.0;  // 0 selects dt = h
  std::vector<double> snapshot_times;
  double window = 0.5;

  std::string output;
  unsigned long seed = 0;

  bool operator==(const ExperimentConfig&) const = default;

  static ExperimentConfig defaults(StudyKind kind);
  static ExperimentConfig parse(const std::string& text);
  std::string emit() const;
  void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline const std::set<std::string>& allowed_keys(StudyKind kind) {
  static const std::set<std::string> porous_conv = {"dimension",  "n",        "m",
                                                    "domain_half_width", "t_start", "t_elapsed",
                                                    "dt_ratio",   "seed",     "output"};
  static const std::set<std::string> porous_iter = {"dimension", "n", "m", "domain_half_width",
                                                    "t_start",   "t_elapsed", "dt_ratio", "modes",
                                                    "scheme",    "seed", "output"};
  static const std::set<std::string> sulf_common = {"n",     "a",     "d",    "m_c",   "m_s",
                                                    "alpha", "beta",  "c0",   "rho_s0", "dt",
                                                    "t_final", "scheme", "seed", "output"};
  static const std::set<std::string> sulf_profile = [] {
    auto s = sulf_common;
    s.insert("snapshot_times");
    s.insert("preconditioner");
    return s;
  }();
  static const std::set<std::string> sulf_front = [] {
    auto s = sulf_common;
    s.insert("window");
    s.insert("preconditioner");
    return s;
  }();
  static const std::set<std::string> sulf_iter = [] {
    auto s = sulf_common;
    s.insert("modes");
    return s;
  }();
  switch (kind) {
    case StudyKind::porous_convergence: return porous_conv;
    case StudyKind::porous_iterations: return porous_iter;
    case StudyKind::sulfation_profile: return sulf_profile;
    case StudyKind::sulfation_front: return sulf_front;
    case StudyKind::sulfation_iterations: return sulf_iter;
    case StudyKind::sulfation_2d: return sulf_iter;
  }
  return sulf_common;
}

inline const std::set<std::string>& known_modes() {
  static const std::set<std::string> modes = {
      "none", "one-v-cycle", "mgm-to-convergence", "block-triangular/one-v-cycle",
      "block-triangular/mgm-to-convergence"};
  return modes;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::defaults(StudyKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case StudyKind::porous_convergence:
      c.grid_sizes = {32, 64, 128, 256, 512};
      break;
    case StudyKind::porous_iterations:
      c.grid_sizes = {32, 64, 128, 256, 512};
      c.modes = {"none", "one-v-cycle"};
      break;
    case StudyKind::sulfation_profile:
      c.grid_sizes = {128};
      c.params.a = 1e4;
      c.snapshot_times = {0.25, 0.5, 0.75, 1.0};
      c.preconditioner = "block-triangular/one-v-cycle";
      break;
    case StudyKind::sulfation_front:
      c.grid_sizes = {128};
      c.params.a = 1e4;
      c.t_final = 2.0;
      c.preconditioner = "block-triangular/one-v-cycle";
      break;
    case StudyKind::sulfation_iterations:
      c.grid_sizes = {64, 128, 256};
      c.params.a = 1.0;
      c.t_final = 0.5;
      c.modes = {"block-triangular/one-v-cycle", "block-triangular/mgm-to-convergence"};
      break;
    case StudyKind::sulfation_2d:
      c.dimension = Dimensionality::two_d;
      c.grid_sizes = {32};
      c.params.a = 10.0;
      c.modes = {"none", "block-triangular/one-v-cycle"};
      break;
  }
  return c;
}

inline void ExperimentConfig::validate() const {
  if (grid_sizes.empty()) throw ConfigError("invalid value for key 'n': list is empty");
  for (std::size_t n : grid_sizes)
    if (n < 8) throw ConfigError("invalid value for key 'n': grid sizes must be at least 8");
  for (const std::string& mode : modes)
    if (!detail::known_modes().count(mode)) throw ConfigError("invalid value for key 'modes': '" + mode + "'");
  if (!preconditioner.empty() && !detail::known_modes().count(preconditioner))
    throw ConfigError("invalid value for key 'preconditioner': '" + preconditioner + "'");
  if (dt < 0.0) throw ConfigError("invalid value for key 'dt': must be non-negative");
  if (!(dt_ratio > 0.0)) throw ConfigError("invalid value for key 'dt_ratio': must be positive");
  if (!(window > 0.0 && window <= 1.0))
    throw ConfigError("invalid value for key 'window': must lie in (0,1]");
  if (!(m > 1.0)) throw ConfigError("invalid value for key 'm': must exceed 1");
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  std::optional<ExperimentConfig> cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("line " + std::to_string(line) + ": malformed section header");
      if (cfg) throw ConfigError("line " + std::to_string(line) + ": multiple study sections");
      cfg = defaults(study_from_string(detail::trim(s.substr(1, s.size() - 2))));
      continue;
    }
    if (!cfg) throw ConfigError("line " + std::to_string(line) + ": key before study section");
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (!detail::allowed_keys(cfg->kind).count(key))
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' for study " +
                        to_string(cfg->kind));

    ExperimentConfig& c = *cfg;
    if (key == "dimension") {
      if (value == "1d") c.dimension = Dimensionality::one_d;
      else if (value == "2d") c.dimension = Dimensionality::two_d;
      else throw ConfigError("line " + std::to_string(line) + ": dimension must be 1d or 2d");
    } else if (key == "scheme") {
      if (value == "crank-nicholson") c.scheme = SchemeKind::crank_nicholson;
      else if (value == "implicit-euler") c.scheme = SchemeKind::implicit_euler;
      else throw ConfigError("line " + std::to_string(line) + ": unknown scheme '" + value + "'");
    } else if (key == "n") {
      c.grid_sizes.clear();
      for (const std::string& item : detail::split_list(value)) {
        const double x = detail::parse_double(item, line);
        if (x < 1.0 || x != std::floor(x))
          throw ConfigError("line " + std::to_string(line) + ": invalid value for key 'n'");
        c.grid_sizes.push_back(static_cast<std::size_t>(x));
      }
    } else if (key == "modes") {
      c.modes = detail::split_list(value);
    } else if (key == "preconditioner") {
      c.preconditioner = value;
    } else if (key == "snapshot_times") {
      c.snapshot_times.clear();
      for (const std::string& item : detail::split_list(value))
        c.snapshot_times.push_back(detail::parse_double(item, line));
    } else if (key == "output") {
      c.output = value;
    } else if (key == "seed") {
      c.seed = static_cast<unsigned long>(detail::parse_double(value, line));
    } else if (key == "m") {
      c.m = detail::parse_double(value, line);
    } else if (key == "domain_half_width") {
      c.domain_half_width = detail::parse_double(value, line);
    } else if (key == "t_start") {
      c.t_start = detail::parse_double(value, line);
    } else if (key == "t_elapsed") {
      c.t_elapsed = detail::parse_double(value, line);
    } else if (key == "dt_ratio") {
      c.dt_ratio = detail::parse_double(value, line);
    } else if (key == "a") {
      c.params.a = detail::parse_double(value, line);
    } else if (key == "d") {
      c.params.d = detail::parse_double(value, line);
    } else if (key == "m_c") {
      c.params.m_c = detail::parse_double(value, line);
    } else if (key == "m_s") {
      c.params.m_s = detail::parse_double(value, line);
    } else if (key == "alpha") {
      c.params.alpha = detail::parse_double(value, line);
    } else if (key == "beta") {
      c.params.beta = detail::parse_double(value, line);
    } else if (key == "c0") {
      c.params.c0 = detail::parse_double(value, line);
    } else if (key == "rho_s0") {
      c.params.rho_s0 = detail::parse_double(value, line);
    } else if (key == "dt") {
      c.dt = detail::parse_double(value, line);
    } else if (key == "t_final") {
      c.t_final = detail::parse_double(value, line);
    } else if (key == "window") {
      c.window = detail::parse_double(value, line);
    } else {
      throw ConfigError("line " + std::to_string(line) + ": unhandled key '" + key + "'");
    }
  }
  if (!cfg) throw ConfigError("configuration has no study section");
  cfg->validate();
  return *cfg;
}

inline std::string ExperimentConfig::emit() const {
  using detail::format_double;
  std::ostringstream out;
  out << "[" << to_string(kind) << "]\n";
  const auto& keys = detail::allowed_keys(kind);
  const auto join_sizes = [&] {
    std::string s;
    for (std::size_t i = 0; i < grid_sizes.size(); ++i)
      s += (i ? ", " : "") + std::to_string(grid_sizes[i]);
    return s;
  };
  if (keys.count("dimension"))
    out << "dimension = " << (dimension == Dimensionality::one_d ? "1d" : "2d") << "\n";
  out << "n = " << join_sizes() << "\n";
  if (keys.count("scheme"))
    out << "scheme = "
        << (scheme == SchemeKind::crank_nicholson ? "crank-nicholson" : "implicit-euler") << "\n";
  if (keys.count("m")) out << "m = " << format_double(m) << "\n";
  if (keys.count("domain_half_width"))
    out << "domain_half_width = " << format_double(domain_half_width) << "\n";
  if (keys.count("t_start")) out << "t_start = " << format_double(t_start) << "\n";
  if (keys.count("t_elapsed")) out << "t_elapsed = " << format_double(t_elapsed) << "\n";
  if (keys.count("dt_ratio")) out << "dt_ratio = " << format_double(dt_ratio) << "\n";
  if (keys.count("a")) out << "a = " << format_double(params.a) << "\n";
  if (keys.count("d")) out << "d = " << format_double(params.d) << "\n";
  if (keys.count("m_c")) out << "m_c = " << format_double(params.m_c) << "\n";
  if (keys.count("m_s")) out << "m_s = " << format_double(params.m_s) << "\n";
  if (keys.count("alpha")) out << "alpha = " << format_double(params.alpha) << "\n";
  if (keys.count("beta")) out << "beta = " << format_double(params.beta) << "\n";
  if (keys.count("c0")) out << "c0 = " << format_double(params.c0) << "\n";
  if (keys.count("rho_s0")) out << "rho_s0 = " << format_double(params.rho_s0) << "\n";
  if (keys.count("dt")) out << "dt = " << format_double(dt) << "\n";
  if (keys.count("t_final")) out << "t_final = " << format_double(t_final) << "\n";
  if (keys.count("window")) out << "window = " << format_double(window) << "\n";
  if (keys.count("snapshot_times")) {
    out << "snapshot_times = ";
    for (std::size_t i = 0; i < snapshot_times.size(); ++i)
      out << (i ? ", " : "") << format_double(snapshot_times[i]);
    out << "\n";
  }
  if (keys.count("modes")) {
    out << "modes = ";
    for (std::size_t i = 0; i < modes.size(); ++i) out << (i ? ", " : "") << modes[i];
    out << "\n";
  }
  if (keys.count("preconditioner") && !preconditioner.empty())
    out << "preconditioner = " << preconditioner << "\n";
  if (!output.empty()) out << "output = " << output << "\n";
  out << "seed = " << seed << "\n";
  return out.str();
}

/// Read and parse a configuration file.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ExperimentConfig::parse(ss.str());
}

}  // namespace marmor::harness
