#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <variant>

#include "json.hpp"
#include "marmor/common.hpp"
#include "marmor/record.hpp"

namespace marmor::harness {

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// One run of a study: identifying labels, per-timestep records, and
/// scalar summary metrics.
struct RunResult {
  std::vector<std::pair<std::string, Cell>> labels;
  std::vector<RunRecord> records;
  std::vector<std::pair<std::string, double>> summary;
};

struct StudyResult {
  std::string study;
  std::vector<RunResult> runs;
  std::vector<Table> tables;
};

namespace detail {

inline std::string cell_to_csv(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return {};
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

inline nlohmann::json cell_to_json(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return nullptr;
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  return std::get<std::string>(c);
}

inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {
      "step",     "t",         "newton_iterations", "gmres_min",     "gmres_avg",
      "gmres_max", "l1_error", "linf_error",        "front_position"};
  return cols;
}

inline std::vector<Cell> record_cells(const RunRecord& r) {
  const auto opt = [](const std::optional<double>& v) -> Cell {
    if (v) return *v;
    return std::monostate{};
  };
  return {static_cast<long long>(r.step),
          r.t,
          static_cast<long long>(r.newton_iterations),
          static_cast<long long>(r.gmres_min),
          r.gmres_avg,
          static_cast<long long>(r.gmres_max),
          opt(r.l1_error),
          opt(r.linf_error),
          opt(r.front_position)};
}

}  // namespace detail

/// Flatten the per-run records into one table (label columns first).
inline Table records_table(const StudyResult& result) {
  Table t;
  t.name = "records";
  if (!result.runs.empty())
    for (const auto& [key, value] : result.runs.front().labels) t.columns.push_back(key);
  for (const std::string& c : detail::record_columns()) t.columns.push_back(c);
  for (const RunResult& run : result.runs)
    for (const RunRecord& rec : run.records) {
      std::vector<Cell> row;
      for (const auto& [key, value] : run.labels) row.push_back(value);
      for (Cell& c : detail::record_cells(rec)) row.push_back(std::move(c));
      t.rows.push_back(std::move(row));
    }
  return t;
}

inline Table summary_table(const StudyResult& result) {
  Table t;
  t.name = "summary";
  if (!result.runs.empty()) {
    for (const auto& [key, value] : result.runs.front().labels) t.columns.push_back(key);
    for (const auto& [key, value] : result.runs.front().summary) t.columns.push_back(key);
  }
  for (const RunResult& run : result.runs) {
    std::vector<Cell> row;
    for (const auto& [key, value] : run.labels) row.push_back(value);
    for (const auto& [key, value] : run.summary) row.push_back(Cell{value});
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += detail::cell_to_csv(row[i]);
    }
    out += '\n';
  }
  return out;
}

/// JSON document: one object per run with its records array, plus the
/// study's summary tables.
inline nlohmann::json to_json(const StudyResult& result) {
  nlohmann::json doc;
  doc["study"] = result.study;
  doc["runs"] = nlohmann::json::array();
  for (const RunResult& run : result.runs) {
    nlohmann::json jr;
    for (const auto& [key, value] : run.labels) jr[key] = detail::cell_to_json(value);
    nlohmann::json recs = nlohmann::json::array();
    for (const RunRecord& rec : run.records) {
      nlohmann::json r;
      const auto cells = detail::record_cells(rec);
      const auto& cols = detail::record_columns();
      for (std::size_t i = 0; i < cols.size(); ++i) {
        nlohmann::json v = detail::cell_to_json(cells[i]);
        if (!v.is_null()) r[cols[i]] = std::move(v);
      }
      recs.push_back(std::move(r));
    }
    jr["records"] = std::move(recs);
    nlohmann::json sum;
    for (const auto& [key, value] : run.summary) sum[key] = value;
    jr["summary"] = std::move(sum);
    doc["runs"].push_back(std::move(jr));
  }
  for (const Table& t : result.tables) {
    nlohmann::json jt;
    jt["columns"] = t.columns;
    jt["rows"] = nlohmann::json::array();
    for (const auto& row : t.rows) {
      nlohmann::json jrow = nlohmann::json::array();
      for (const Cell& c : row) jrow.push_back(detail::cell_to_json(c));
      jt["rows"].push_back(std::move(jrow));
    }
    doc["tables"][t.name] = std::move(jt);
  }
  return doc;
}

enum class OutputFormat { csv, json };

/// Write a study's outputs under dir; returns the list of files written.
inline std::vector<std::string> write_study(const StudyResult& result, const std::string& dir,
                                            OutputFormat format) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  const auto emit = [&](const std::string& name, const std::string& content) {
    const fs::path p = fs::path(dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + p.string() + "'");
    out << content;
    written.push_back(p.string());
  };
  if (format == OutputFormat::csv) {
    emit(result.study + "_records.csv", to_csv(records_table(result)));
    emit(result.study + "_summary.csv", to_csv(summary_table(result)));
    for (const Table& t : result.tables) emit(result.study + "_" + t.name + ".csv", to_csv(t));
  } else {
    emit(result.study + ".json", to_json(result).dump(2) + "\n");
  }
  return written;
}

}  // namespace marmor::harness
