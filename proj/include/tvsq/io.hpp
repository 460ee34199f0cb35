// Copyright 2026 The tvsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/** @file
 * File formats: trace, panel and plot CSVs; JSON for models, configs,
 * reports and dataset manifests.
 *
 * CSV is plain comma-separated text without quoting. LF and CRLF line
 * endings are both accepted. Numbers are written in shortest round-trip
 * form, so a write/read cycle reproduces every double exactly.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tvsq/analysis.hpp"
#include "tvsq/dataprep.hpp"
#include "tvsq/error.hpp"
#include "tvsq/ident.hpp"
#include "tvsq/metrics.hpp"
#include "tvsq/model.hpp"
#include "tvsq/order.hpp"
#include "tvsq/synth.hpp"
#include "tvsq/trace.hpp"

namespace tvsq {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------- files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

inline void write_text(const std::filesystem::path& path,
                       std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " +
                    path.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("error while writing " + path.string());
}

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// ------------------------------------------------------------------ CSV

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  ///< 1-based source line of each row

  /// Position of each requested column; ParseError names the first missing.
  std::vector<std::size_t> columns(
      std::initializer_list<std::string_view> names) const {
    std::vector<std::size_t> idx;
    for (auto name : names) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw ParseError(source, 1, header.size() + 1,
                         "missing column '" + std::string(name) + "'");
      }
      idx.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    return idx;
  }

  /// Column number (1-based) of field k in a row.
  static std::size_t column_of(const std::vector<std::string>& row,
                               std::size_t k) {
    std::size_t col = 1;
    for (std::size_t i = 0; i < k; ++i) col += row[i].size() + 1;
    return col;
  }

  double number(std::size_t row, std::size_t field) const {
    const std::string& s = rows[row][field];
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() ||
        !std::isfinite(x)) {
      throw ParseError(source, lines[row], column_of(rows[row], field),
                       "expected a finite number, got '" + s + "'");
    }
    return x;
  }

  std::size_t integer(std::size_t row, std::size_t field) const {
    const std::string& s = rows[row][field];
    std::size_t x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ParseError(source, lines[row], column_of(rows[row], field),
                       "expected a non-negative integer, got '" + s + "'");
    }
    return x;
  }

  [[noreturn]] void fail(std::size_t row, std::size_t field,
                         const std::string& what) const {
    throw ParseError(source, lines[row], column_of(rows[row], field), what);
  }
};

namespace detail {

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
      f.remove_prefix(1);
    }
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) {
      f.remove_suffix(1);
    }
    out.emplace_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Header row plus data rows, all with the header's field count. Blank
/// lines are skipped.
inline CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto fields = detail::split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      const std::size_t k = std::min(fields.size(), table.header.size());
      const std::size_t col =
          k < fields.size() ? CsvTable::column_of(fields, k) : line.size() + 1;
      throw ParseError(source, line_no, col,
                       "expected " + std::to_string(table.header.size()) +
                           " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.lines.push_back(line_no);
  }
  if (!have_header) throw ParseError(source, 1, 1, "empty file, no header");
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text(path), path.string());
}

namespace detail {

/// Rows must carry t = 1, 2, ... in order.
inline void check_time_column(const CsvTable& table, std::size_t col) {
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    if (table.integer(k, col) != k + 1) {
      table.fail(k, col, "expected t = " + std::to_string(k + 1));
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------- trace CSV

inline std::string trace_csv(const TraceRecord& trace) {
  const std::size_t T = trace.stsq.size();
  if (trace.tvsq.values.size() != T || trace.tvsq.ci.size() != T) {
    throw ContractError("trace columns differ in length");
  }
  std::string out = "t,stsq,tvsq,ci\n";
  for (std::size_t t = 0; t < T; ++t) {
    out += std::to_string(t + 1) + ',' + format_number(trace.stsq[t]) + ',' +
           format_number(trace.tvsq.values[t]) + ',' +
           format_number(trace.tvsq.ci[t]) + '\n';
  }
  return out;
}

/// Parses a trace CSV; name and group are left empty.
inline TraceRecord parse_trace_csv(std::string_view text,
                                   const std::string& source) {
  const CsvTable table = parse_csv(text, source);
  const auto c = table.columns({"t", "stsq", "tvsq", "ci"});
  if (table.rows.empty()) throw ParseError(source, 2, 1, "trace has no rows");
  detail::check_time_column(table, c[0]);
  TraceRecord rec;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    rec.stsq.push_back(table.number(k, c[1]));
    rec.tvsq.values.push_back(table.number(k, c[2]));
    const double ci = table.number(k, c[3]);
    if (!(ci > 0.0)) table.fail(k, c[3], "confidence half-width must be > 0");
    rec.tvsq.ci.push_back(ci);
  }
  return rec;
}

inline void write_trace_csv(const std::filesystem::path& path,
                            const TraceRecord& trace) {
  write_text(path, trace_csv(trace));
}

/// Name defaults to the file stem; group to the name.
inline TraceRecord read_trace_csv(const std::filesystem::path& path) {
  TraceRecord rec = parse_trace_csv(read_text(path), path.string());
  rec.name = path.stem().string();
  rec.group = rec.name;
  return rec;
}

/// Quality input: any CSV with a `stsq` column (e.g. a trace CSV).
inline Series read_stsq_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto c = table.columns({"stsq"});
  Series out;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    out.push_back(table.number(k, c[0]));
  }
  if (out.empty()) throw ParseError(path.string(), 2, 1, "no rows");
  return out;
}

/// Prediction output: t,stsq,predicted,warmup (warmup = 1 for t <= r).
inline std::string prediction_csv(std::span<const double> stsq,
                                  const PredictedTrace& pred) {
  if (stsq.size() != pred.values.size()) {
    throw ContractError("prediction length differs from the input");
  }
  std::string out = "t,stsq,predicted,warmup\n";
  for (std::size_t t = 0; t < stsq.size(); ++t) {
    out += std::to_string(t + 1) + ',' + format_number(stsq[t]) + ',' +
           format_number(pred.values[t]) + ',' +
           (t < pred.warmup ? "1" : "0") + '\n';
  }
  return out;
}

// ---------------------------------------------------------- panel CSV

namespace detail {

/// Fills cube from rows keyed by 1-based indices; every cell exactly once.
inline void fill_cube(const CsvTable& table, ScoreCube& cube,
                      std::size_t c_subject, std::optional<std::size_t> c_video,
                      std::size_t c_t, std::size_t c_score) {
  std::vector<bool> seen(cube.subjects() * cube.videos() * cube.seconds());
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const std::size_t i = table.integer(k, c_subject) - 1;
    const std::size_t j = c_video ? table.integer(k, *c_video) - 1 : 0;
    const std::size_t t = table.integer(k, c_t) - 1;
    const std::size_t cell = (i * cube.videos() + j) * cube.seconds() + t;
    if (seen[cell]) table.fail(k, c_t, "duplicate score for this cell");
    seen[cell] = true;
    cube(i, j, t) = table.number(k, c_score);
  }
  const auto missing = std::find(seen.begin(), seen.end(), false);
  if (missing != seen.end()) {
    const std::size_t cell = static_cast<std::size_t>(missing - seen.begin());
    const std::size_t t = cell % cube.seconds();
    const std::size_t j = (cell / cube.seconds()) % cube.videos();
    const std::size_t i = cell / (cube.seconds() * cube.videos());
    throw ParseError(table.source, 0, 0,
                     "no score for subject " + std::to_string(i + 1) +
                         (c_video ? ", video " + std::to_string(j + 1) : "") +
                         ", t " + std::to_string(t + 1));
  }
}

/// Largest value of a 1-based index column; rejects 0.
inline std::size_t index_extent(const CsvTable& table, std::size_t col) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const std::size_t x = table.integer(k, col);
    if (x == 0) table.fail(k, col, "indices start at 1");
    n = std::max(n, x);
  }
  return n;
}

}  // namespace detail

inline SubjectScorePanel parse_panel_csv(std::string_view scores,
                                         const std::string& scores_source,
                                         std::string_view reference,
                                         const std::string& reference_source) {
  const CsvTable st = parse_csv(scores, scores_source);
  const CsvTable rt = parse_csv(reference, reference_source);
  const auto sc = st.columns({"subject", "video", "t", "score"});
  const auto rc = rt.columns({"subject", "t", "score"});
  if (st.rows.empty()) throw ParseError(scores_source, 2, 1, "no scores");
  if (rt.rows.empty()) throw ParseError(reference_source, 2, 1, "no scores");
  const std::size_t I = detail::index_extent(st, sc[0]);
  const std::size_t J = detail::index_extent(st, sc[1]);
  const std::size_t T = detail::index_extent(st, sc[2]);
  if (detail::index_extent(rt, rc[0]) != I ||
      detail::index_extent(rt, rc[1]) != T) {
    throw ParseError(reference_source, 1, 1,
                     "reference subjects/seconds do not match the panel");
  }
  SubjectScorePanel panel;
  panel.scores = ScoreCube(I, J, T);
  panel.reference = ScoreCube(I, 1, T);
  detail::fill_cube(st, panel.scores, sc[0], sc[1], sc[2], sc[3]);
  detail::fill_cube(rt, panel.reference, rc[0], std::nullopt, rc[1], rc[2]);
  return panel;
}

inline SubjectScorePanel read_panel_csv(const std::filesystem::path& scores,
                                        const std::filesystem::path& reference) {
  SubjectScorePanel panel =
      parse_panel_csv(read_text(scores), scores.string(), read_text(reference),
                      reference.string());
  panel.session = scores.stem().string();
  return panel;
}

inline std::string panel_scores_csv(const SubjectScorePanel& p) {
  std::string out = "subject,video,t,score\n";
  const auto& s = p.scores;
  for (std::size_t i = 0; i < s.subjects(); ++i) {
    for (std::size_t j = 0; j < s.videos(); ++j) {
      for (std::size_t t = 0; t < s.seconds(); ++t) {
        out += std::to_string(i + 1) + ',' + std::to_string(j + 1) + ',' +
               std::to_string(t + 1) + ',' + format_number(s(i, j, t)) + '\n';
      }
    }
  }
  return out;
}

inline std::string panel_reference_csv(const SubjectScorePanel& p) {
  std::string out = "subject,t,score\n";
  const auto& r = p.reference;
  for (std::size_t i = 0; i < r.subjects(); ++i) {
    for (std::size_t t = 0; t < r.seconds(); ++t) {
      out += std::to_string(i + 1) + ',' + std::to_string(t + 1) + ',' +
             format_number(r(i, 0, t)) + '\n';
    }
  }
  return out;
}

// ----------------------------------------------------------- plot CSV

inline std::string impulse_csv(std::span<const double> h) {
  std::string out = "d,h\n";
  for (std::size_t d = 0; d < h.size(); ++d) {
    out += std::to_string(d) + ',' + format_number(h[d]) + '\n';
  }
  return out;
}

inline std::string curve_csv(const Curve& c) {
  std::string out = "x,y\n";
  for (std::size_t k = 0; k < c.x.size(); ++k) {
    out += format_number(c.x[k]) + ',' + format_number(c.y[k]) + '\n';
  }
  return out;
}

// ----------------------------------------------------------------- JSON

namespace detail {

/// Non-finite doubles are stored as null (JSON has no inf/nan).
inline Json number_or_null(double x) {
  return std::isfinite(x) ? Json(x) : Json(nullptr);
}

inline Json optional_number(const std::optional<double>& x) {
  return x ? number_or_null(*x) : Json(nullptr);
}

inline void reject_unknown_keys(const Json& j,
                                std::initializer_list<std::string_view> keys,
                                const std::string& what) {
  if (!j.is_object()) throw ContractError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ContractError("unknown key '" + key + "' in " + what);
    }
  }
}

inline double get_number(const Json& j, const char* key,
                         const std::string& what) {
  if (!j.contains(key)) {
    throw ContractError(what + " is missing '" + key + "'");
  }
  const Json& v = j.at(key);
  if (!v.is_number()) {
    throw ContractError("'" + std::string(key) + "' in " + what +
                        " must be a number");
  }
  return v.get<double>();
}

inline std::uint64_t get_count(const Json& j, const char* key,
                               const std::string& what) {
  if (!j.contains(key)) {
    throw ContractError(what + " is missing '" + key + "'");
  }
  const Json& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ContractError("'" + std::string(key) + "' in " + what +
                        " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline Series get_series(const Json& j, const char* key,
                         const std::string& what) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ContractError(what + " needs an array '" + key + "'");
  }
  Series out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) {
      throw ContractError("'" + std::string(key) + "' in " + what +
                          " must hold numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

inline void check_format(const Json& j, std::string_view format) {
  if (!j.is_object() || !j.contains("format") ||
      j.at("format") != std::string(format)) {
    throw ContractError("not a " + std::string(format) + " document");
  }
  if (!j.contains("version") || j.at("version") != kFormatVersion) {
    throw ContractError("unsupported " + std::string(format) + " version");
  }
}

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text,
                                                       std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t k = 0; k < byte; ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses JSON text; syntax errors become ParseError with line and column.
inline Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = detail::line_column(text, at);
    throw ParseError(source, line, col, "invalid JSON");
  }
}

inline Json read_json(const std::filesystem::path& path) {
  return parse_json(read_text(path), path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Logistic / HWParams

inline Json to_json(const Logistic& g) {
  return {{"slope", g.slope}, {"bias", g.bias}, {"offset", g.offset},
          {"gain", g.gain}};
}

inline Logistic logistic_from_json(const Json& j, const std::string& what) {
  detail::reject_unknown_keys(j, {"slope", "bias", "offset", "gain"}, what);
  return {detail::get_number(j, "slope", what),
          detail::get_number(j, "bias", what),
          detail::get_number(j, "offset", what),
          detail::get_number(j, "gain", what)};
}

/// Bare parameter object (no format tag).
inline Json params_json(const HWParams& p) {
  return {{"order", p.order}, {"b", p.b},
          {"f", p.f},         {"beta", to_json(p.beta)},
          {"gamma", to_json(p.gamma)}};
}

inline HWParams params_from_json(const Json& j) {
  const std::string what = "model parameters";
  detail::reject_unknown_keys(
      j, {"format", "version", "order", "b", "f", "beta", "gamma"}, what);
  HWParams p;
  p.order = detail::get_count(j, "order", what);
  p.b = detail::get_series(j, "b", what);
  p.f = detail::get_series(j, "f", what);
  if (!j.contains("beta") || !j.contains("gamma")) {
    throw ContractError(what + " need 'beta' and 'gamma'");
  }
  p.beta = logistic_from_json(j.at("beta"), "beta");
  p.gamma = logistic_from_json(j.at("gamma"), "gamma");
  validate(p);
  return p;
}

inline Json model_json(const HWParams& p) {
  Json j = params_json(p);
  j["format"] = "tvsq-model";
  j["version"] = kFormatVersion;
  return j;
}

// TrainConfig

inline Json to_json(const TrainConfig& c) {
  return {{"nu_init", c.nu_init},
          {"nu_factor", c.nu_factor},
          {"nu_max", c.nu_max},
          {"armijo_coeff", c.armijo_coeff},
          {"backtrack_factor", c.backtrack_factor},
          {"descent_tol", c.descent_tol},
          {"initial_step", c.initial_step},
          {"min_step", c.min_step},
          {"gradient_tol", c.gradient_tol},
          {"stability_margin", c.stability_margin},
          {"max_outer_iters", c.max_outer_iters},
          {"max_descent_iters", c.max_descent_iters},
          {"normalized_coordinates", c.normalized_coordinates}};
}

/// Overrides on top of `base`; absent keys keep their value, unknown keys
/// are rejected.
inline TrainConfig train_config_from_json(const Json& j,
                                          TrainConfig base = {}) {
  const std::string what = "training config";
  detail::reject_unknown_keys(
      j,
      {"nu_init", "nu_factor", "nu_max", "armijo_coeff", "backtrack_factor",
       "descent_tol", "initial_step", "min_step", "gradient_tol",
       "stability_margin", "max_outer_iters", "max_descent_iters",
       "normalized_coordinates"},
      what);
  const auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::get_number(j, key, what);
  };
  const auto count = [&](const char* key, std::size_t& out) {
    if (j.contains(key)) out = detail::get_count(j, key, what);
  };
  num("nu_init", base.nu_init);
  num("nu_factor", base.nu_factor);
  num("nu_max", base.nu_max);
  num("armijo_coeff", base.armijo_coeff);
  num("backtrack_factor", base.backtrack_factor);
  num("descent_tol", base.descent_tol);
  num("initial_step", base.initial_step);
  num("min_step", base.min_step);
  num("gradient_tol", base.gradient_tol);
  num("stability_margin", base.stability_margin);
  count("max_outer_iters", base.max_outer_iters);
  count("max_descent_iters", base.max_descent_iters);
  if (j.contains("normalized_coordinates")) {
    if (!j.at("normalized_coordinates").is_boolean()) {
      throw ContractError("'normalized_coordinates' must be a boolean");
    }
    base.normalized_coordinates = j.at("normalized_coordinates").get<bool>();
  }
  validate(base);
  return base;
}

// TrainReport

inline Json to_json(const StageRecord& s) {
  return {{"nu", s.nu},
          {"approx_objective", s.approx_objective},
          {"outage", s.outage},
          {"descent_iterations", s.descent_iterations},
          {"stalled", s.stalled}};
}

inline Json report_json(const TrainReport& r) {
  Json history = Json::array();
  for (const auto& s : r.history) history.push_back(to_json(s));
  return {{"format", "tvsq-train-report"},
          {"version", kFormatVersion},
          {"theta_star", params_json(r.theta_star)},
          {"final_outage", r.final_outage},
          {"history", std::move(history)},
          {"gradient_norm_history", r.gradient_norm_history},
          {"warnings", r.warnings},
          {"wall_time_seconds", r.wall_time_seconds}};
}

inline TrainReport report_from_json(const Json& j) {
  detail::check_format(j, "tvsq-train-report");
  const std::string what = "train report";
  detail::reject_unknown_keys(
      j,
      {"format", "version", "theta_star", "final_outage", "history",
       "gradient_norm_history", "warnings", "wall_time_seconds"},
      what);
  TrainReport r;
  if (!j.contains("theta_star")) throw ContractError(what + " has no theta_star");
  r.theta_star = params_from_json(j.at("theta_star"));
  r.final_outage = detail::get_number(j, "final_outage", what);
  if (!j.contains("history") || !j.at("history").is_array()) {
    throw ContractError(what + " needs a 'history' array");
  }
  for (const auto& s : j.at("history")) {
    detail::reject_unknown_keys(s,
                                {"nu", "approx_objective", "outage",
                                 "descent_iterations", "stalled"},
                                "stage record");
    StageRecord rec;
    rec.nu = detail::get_number(s, "nu", "stage record");
    rec.approx_objective =
        detail::get_number(s, "approx_objective", "stage record");
    rec.outage = detail::get_number(s, "outage", "stage record");
    rec.descent_iterations =
        detail::get_count(s, "descent_iterations", "stage record");
    if (!s.contains("stalled") || !s.at("stalled").is_boolean()) {
      throw ContractError("stage record needs a boolean 'stalled'");
    }
    rec.stalled = s.at("stalled").get<bool>();
    r.history.push_back(rec);
  }
  r.gradient_norm_history = detail::get_series(j, "gradient_norm_history", what);
  if (j.contains("warnings")) {
    for (const auto& w : j.at("warnings")) {
      if (!w.is_string()) throw ContractError("warnings must be strings");
      r.warnings.push_back(w.get<std::string>());
    }
  }
  if (j.contains("wall_time_seconds")) {
    r.wall_time_seconds = detail::get_number(j, "wall_time_seconds", what);
  }
  return r;
}

/// A model document or a train report (its theta_star).
inline HWParams model_from_json(const Json& j) {
  if (j.is_object() && j.value("format", "") == "tvsq-train-report") {
    return report_from_json(j).theta_star;
  }
  detail::check_format(j, "tvsq-model");
  return params_from_json(j);
}

inline HWParams load_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

inline void save_model(const std::filesystem::path& path, const HWParams& p) {
  write_json(path, model_json(p));
}

// OrderScan

inline Json to_json(const OrderScan& scan) {
  Json rows = Json::array();
  for (const auto& c : scan.candidates) {
    Json row = {{"order", c.order},
                {"lipschitz", detail::number_or_null(c.lipschitz)},
                {"outage", detail::optional_number(c.outage)},
                {"description_length",
                 detail::optional_number(c.description_length)}};
    if (c.report) row["theta_star"] = params_json(c.report->theta_star);
    rows.push_back(std::move(row));
  }
  Json j = {{"format", "tvsq-order-scan"},
            {"version", kFormatVersion},
            {"candidates", std::move(rows)}};
  j["selected"] = scan.selected ? Json(scan.selected) : Json(nullptr);
  return j;
}

// StabilityReport

inline Json to_json(const Interval& i) {
  return Json::array({detail::number_or_null(i.lo),
                      detail::number_or_null(i.hi)});
}

inline Json to_json(const StabilityReport& s) {
  return {{"format", "tvsq-stability-report"},
          {"version", kFormatVersion},
          {"rho", s.rho},
          {"tau", detail::number_or_null(s.tau)},
          {"l1_norm", s.l1_norm},
          {"peak_lag", s.peak_lag},
          {"impulse_length", s.impulse.size()},
          {"bounds",
           {{"input", to_json(s.bounds.input)},
            {"latent_input", to_json(s.bounds.latent_input)},
            {"latent_output", to_json(s.bounds.latent_output)},
            {"output", to_json(s.bounds.output)},
            {"coarse_latent", detail::number_or_null(s.bounds.coarse_latent)},
            {"coarse_output", to_json(s.bounds.coarse_output)}}}};
}

inline Json to_json(const Curve& c) {
  return {{"x", c.x},
          {"y", c.y},
          {"slope", c.slope},
          {"concave", c.concave},
          {"chord_deviation", c.chord_deviation}};
}

// Metrics

inline Json to_json(const EvalMetrics& m) {
  Json traces = Json::array();
  for (const auto& t : m.per_trace) {
    traces.push_back({{"name", t.name},
                      {"outage", t.outage},
                      {"pearson", detail::optional_number(t.pearson)},
                      {"spearman", detail::optional_number(t.spearman)}});
  }
  return {{"warmup", m.warmup},
          {"samples", m.samples},
          {"outage", m.outage},
          {"pearson", detail::optional_number(m.pearson)},
          {"spearman", detail::optional_number(m.spearman)},
          {"mean_outage", m.mean_outage},
          {"mean_pearson", detail::optional_number(m.mean_pearson)},
          {"mean_spearman", detail::optional_number(m.mean_spearman)},
          {"per_trace", std::move(traces)},
          {"warnings", m.warnings}};
}

inline Json to_json(const CrossValidation& cv) {
  Json folds = Json::array();
  for (const auto& f : cv.folds) {
    folds.push_back({{"group", f.group},
                     {"theta_star", params_json(f.params)},
                     {"metrics", to_json(f.metrics)}});
  }
  return {{"folds", std::move(folds)},
          {"mean_outage", cv.mean_outage},
          {"mean_pearson", detail::optional_number(cv.mean_pearson)},
          {"mean_spearman", detail::optional_number(cv.mean_spearman)}};
}

// Synthetic specs

inline Json to_json(const TargetSpec& s) {
  return {{"durations", s.durations},   {"quality_mean", s.quality_mean},
          {"quality_std", s.quality_std}, {"quality_min", s.quality_min},
          {"quality_max", s.quality_max}, {"length", s.length},
          {"seed", s.seed}};
}

inline TargetSpec target_spec_from_json(const Json& j) {
  const std::string what = "target spec";
  detail::reject_unknown_keys(j,
                              {"durations", "quality_mean", "quality_std",
                               "quality_min", "quality_max", "length", "seed"},
                              what);
  TargetSpec s;
  if (j.contains("durations")) {
    s.durations.clear();
    if (!j.at("durations").is_array()) {
      throw ContractError("'durations' must be an array");
    }
    for (const auto& d : j.at("durations")) {
      if (!d.is_number_unsigned()) {
        throw ContractError("durations must be non-negative integers");
      }
      s.durations.push_back(d.get<std::size_t>());
    }
  }
  const auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::get_number(j, key, what);
  };
  num("quality_mean", s.quality_mean);
  num("quality_std", s.quality_std);
  num("quality_min", s.quality_min);
  num("quality_max", s.quality_max);
  if (j.contains("length")) s.length = detail::get_count(j, "length", what);
  if (j.contains("seed")) s.seed = detail::get_count(j, "seed", what);
  validate(s);
  return s;
}

inline Json to_json(const GroundTruthSpec& s) {
  return {{"format", "tvsq-ground-truth-spec"},
          {"version", kFormatVersion},
          {"generator", params_json(s.generator)},
          {"noise_std", s.noise_std},
          {"ci_value", s.ci_value},
          {"n_traces", s.n_traces},
          {"target", to_json(s.target)}};
}

inline GroundTruthSpec ground_truth_spec_from_json(const Json& j) {
  detail::check_format(j, "tvsq-ground-truth-spec");
  const std::string what = "ground-truth spec";
  detail::reject_unknown_keys(j,
                              {"format", "version", "generator", "noise_std",
                               "ci_value", "n_traces", "target"},
                              what);
  GroundTruthSpec s;
  if (!j.contains("generator")) throw ContractError(what + " has no generator");
  s.generator = params_from_json(j.at("generator"));
  if (j.contains("noise_std")) {
    s.noise_std = detail::get_number(j, "noise_std", what);
  }
  if (j.contains("ci_value")) {
    s.ci_value = detail::get_number(j, "ci_value", what);
  }
  if (j.contains("n_traces")) {
    s.n_traces = detail::get_count(j, "n_traces", what);
  }
  if (j.contains("target")) s.target = target_spec_from_json(j.at("target"));
  validate(s);
  return s;
}

// --------------------------------------------------- dataset manifest

/// Manifest JSON next to one trace CSV per item:
///   {"format": "tvsq-dataset", "version": 1, "session": {...},
///    "traces": [{"name", "group", "path"}, ...]}
/// Paths are relative to the manifest's directory.
struct DatasetFile {
  TrainingDataset data;
  Json session = Json::object();  ///< free-form metadata
};

namespace detail {

inline void check_trace_name(const std::string& name) {
  if (name.empty() || name == "." || name == ".." ||
      name.find_first_of("/\\") != std::string::npos) {
    throw ContractError("trace name '" + name + "' is not a valid file name");
  }
}

}  // namespace detail

inline void save_dataset(const std::filesystem::path& manifest,
                         const TrainingDataset& data,
                         const Json& session = Json::object()) {
  validate(data);
  std::set<std::string> names;
  Json traces = Json::array();
  const auto dir = manifest.parent_path();
  for (const auto& item : data.items) {
    detail::check_trace_name(item.name);
    if (!names.insert(item.name).second) {
      throw ContractError("duplicate trace name '" + item.name + "'");
    }
    const std::string file = item.name + ".csv";
    write_trace_csv(dir / file, item);
    traces.push_back({{"name", item.name}, {"group", item.group},
                      {"path", file}});
  }
  write_json(manifest, {{"format", "tvsq-dataset"},
                        {"version", kFormatVersion},
                        {"session", session},
                        {"traces", std::move(traces)}});
}

inline DatasetFile load_dataset_file(const std::filesystem::path& manifest) {
  const Json j = read_json(manifest);
  detail::check_format(j, "tvsq-dataset");
  detail::reject_unknown_keys(j, {"format", "version", "session", "traces"},
                              "dataset manifest");
  DatasetFile out;
  if (j.contains("session")) out.session = j.at("session");
  if (!j.contains("traces") || !j.at("traces").is_array()) {
    throw ContractError("dataset manifest needs a 'traces' array");
  }
  const auto dir = manifest.parent_path();
  for (const auto& t : j.at("traces")) {
    detail::reject_unknown_keys(t, {"name", "group", "path"}, "trace entry");
    if (!t.contains("path") || !t.at("path").is_string()) {
      throw ContractError("trace entry needs a 'path'");
    }
    TraceRecord rec = read_trace_csv(dir / t.at("path").get<std::string>());
    if (t.contains("name")) rec.name = t.at("name").get<std::string>();
    rec.group = t.contains("group") ? t.at("group").get<std::string>()
                                    : rec.name;
    out.data.items.push_back(std::move(rec));
  }
  validate(out.data);
  return out;
}

inline TrainingDataset load_dataset(const std::filesystem::path& manifest) {
  return load_dataset_file(manifest).data;
}

}  // namespace tvsq
