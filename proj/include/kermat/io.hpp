#pragma once

// Dataset loading and experiment-record emission.
//
// Input formats: csv and whitespace tables (optional header row, optional
// trailing integer class label used only when a class filter is requested)
// and libsvm sparse lines ("label idx:val ...", 1-based, dimension inferred
// as the largest index seen).  Output records serialize to CSV or JSON-lines
// with a fixed field order and shortest round-trip float formatting, so
// identical runs produce byte-identical files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kermat/core.hpp"

namespace kermat {

enum class DataFormat { csv, libsvm, whitespace };

inline const char* data_format_name(DataFormat f) {
  switch (f) {
    case DataFormat::csv: return "csv";
    case DataFormat::libsvm: return "libsvm";
    case DataFormat::whitespace: return "whitespace";
  }
  return "?";
}

inline DataFormat data_format_from_name(std::string_view s) {
  if (s == "csv") return DataFormat::csv;
  if (s == "libsvm") return DataFormat::libsvm;
  if (s == "whitespace") return DataFormat::whitespace;
  throw std::invalid_argument("unknown data format: " + std::string(s));
}

struct DatasetSource {
  std::string path;
  DataFormat format = DataFormat::csv;
  std::optional<double> class_filter;  // when set, the last column / libsvm label selects rows
  bool normalize = false;              // per-dimension min-max scaling to [0,1]
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;  // from_chars rejects leading '+'
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && p == last && first != last;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line_no,
                                    const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace detail

// shortest decimal representation that parses back to the same double
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, p);
}

inline PointSet load_dataset(const DatasetSource& src) {
  std::ifstream in(src.path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + src.path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_cols = 0;
  std::size_t max_index = 0;  // libsvm dimension inference

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view sv = detail::strip_cr(line);
    if (sv.empty()) continue;

    if (src.format == DataFormat::libsvm) {
      const auto toks = detail::split_ws(sv);
      if (toks.empty()) continue;
      double label;
      if (!detail::parse_double(toks[0], label))
        detail::parse_fail(src.path, line_no, "bad libsvm label '" + std::string(toks[0]) + "'");
      if (src.class_filter && label != *src.class_filter) continue;
      std::vector<double> sparse;  // flattened (index, value) pairs
      for (std::size_t t = 1; t < toks.size(); ++t) {
        const std::size_t colon = toks[t].find(':');
        if (colon == std::string_view::npos)
          detail::parse_fail(src.path, line_no, "bad libsvm pair '" + std::string(toks[t]) + "'");
        double idx_d, val;
        if (!detail::parse_double(toks[t].substr(0, colon), idx_d) || idx_d < 1.0 ||
            idx_d != std::floor(idx_d))
          detail::parse_fail(src.path, line_no, "bad libsvm index in '" + std::string(toks[t]) + "'");
        if (!detail::parse_double(toks[t].substr(colon + 1), val))
          detail::parse_fail(src.path, line_no, "bad libsvm value in '" + std::string(toks[t]) + "'");
        max_index = std::max(max_index, static_cast<std::size_t>(idx_d));
        sparse.push_back(idx_d);
        sparse.push_back(val);
      }
      rows.push_back(std::move(sparse));
      continue;
    }

    const auto toks = src.format == DataFormat::csv ? detail::split(sv, ',') : detail::split_ws(sv);
    std::vector<double> vals(toks.size());
    bool numeric = true;
    for (std::size_t t = 0; t < toks.size(); ++t)
      if (!detail::parse_double(toks[t], vals[t])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (rows.empty() && expected_cols == 0) continue;  // header row
      detail::parse_fail(src.path, line_no, "non-numeric field");
    }
    if (expected_cols == 0)
      expected_cols = vals.size();
    else if (vals.size() != expected_cols)
      detail::parse_fail(src.path, line_no,
                         "inconsistent column count (" + std::to_string(vals.size()) + " vs " +
                             std::to_string(expected_cols) + ")");
    if (src.class_filter) {
      if (expected_cols < 2)
        detail::parse_fail(src.path, line_no, "class filter needs a trailing label column");
      const double label = vals.back();
      if (label != *src.class_filter) continue;
      vals.pop_back();
    }
    rows.push_back(std::move(vals));
  }

  if (rows.empty()) throw std::runtime_error("load_dataset: no rows left after filtering " + src.path);

  std::size_t d;
  std::vector<double> coords;
  if (src.format == DataFormat::libsvm) {
    d = std::max<std::size_t>(max_index, 1);
    coords.assign(rows.size() * d, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t t = 0; t + 1 < rows[i].size(); t += 2)
        coords[i * d + static_cast<std::size_t>(rows[i][t]) - 1] = rows[i][t + 1];
  } else {
    d = rows.front().size();
    coords.reserve(rows.size() * d);
    for (const auto& r : rows) coords.insert(coords.end(), r.begin(), r.end());
  }

  if (src.normalize) {
    for (std::size_t j = 0; j < d; ++j) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        lo = std::min(lo, coords[i * d + j]);
        hi = std::max(hi, coords[i * d + j]);
      }
      const double span = hi - lo;
      for (std::size_t i = 0; i < rows.size(); ++i)
        coords[i * d + j] = span > 0.0 ? (coords[i * d + j] - lo) / span : 0.0;
    }
  }
  return PointSet(rows.size(), d, std::move(coords));
}

// ---------------------------------------------------------------------------

struct RunRecord {
  std::uint64_t iter = 0;
  std::uint64_t evals_cum = 0;
  double rayleigh = 0.0;
  std::optional<double> rel_err;  // present when ground truth was available
  std::string method;             // full | uniform | knpm
  std::uint64_t seed = 0;
};

enum class RecordFormat { csv, jsonl };

inline RecordFormat record_format_from_name(std::string_view s) {
  if (s == "csv") return RecordFormat::csv;
  if (s == "jsonl" || s == "json-lines") return RecordFormat::jsonl;
  throw std::invalid_argument("unknown record format: " + std::string(s));
}

inline void emit(const std::vector<RunRecord>& records, std::ostream& out, RecordFormat format) {
  if (format == RecordFormat::csv) {
    out << "iter,evals_cum,rayleigh,rel_err,method,seed\n";
    for (const auto& r : records) {
      out << r.iter << ',' << r.evals_cum << ',' << format_double(r.rayleigh) << ','
          << (r.rel_err ? format_double(*r.rel_err) : std::string{}) << ',' << r.method << ','
          << r.seed << '\n';
    }
    return;
  }
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["iter"] = r.iter;
    j["evals_cum"] = r.evals_cum;
    j["rayleigh"] = r.rayleigh;
    if (r.rel_err) j["rel_err"] = *r.rel_err;
    j["method"] = r.method;
    j["seed"] = r.seed;
    out << j.dump() << '\n';
  }
}

inline void emit(const std::vector<RunRecord>& records, const std::string& path,
                 RecordFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit: cannot open " + path);
  emit(records, out, format);
  if (!out) throw std::runtime_error("emit: write failed for " + path);
}

inline std::vector<RunRecord> parse_records(std::istream& in, RecordFormat format) {
  std::vector<RunRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view sv = detail::strip_cr(line);
    if (sv.empty()) continue;
    if (format == RecordFormat::csv) {
      if (line_no == 1 && sv.rfind("iter,", 0) == 0) continue;  // header
      const auto toks = detail::split(sv, ',');
      if (toks.size() != 6)
        throw std::runtime_error("parse_records: line " + std::to_string(line_no) +
                                 ": expected 6 fields");
      RunRecord r;
      double iter_d, evals_d, seed_d;
      if (!detail::parse_double(toks[0], iter_d) || !detail::parse_double(toks[1], evals_d) ||
          !detail::parse_double(toks[2], r.rayleigh) || !detail::parse_double(toks[5], seed_d))
        throw std::runtime_error("parse_records: line " + std::to_string(line_no) + ": bad number");
      r.iter = static_cast<std::uint64_t>(iter_d);
      r.evals_cum = static_cast<std::uint64_t>(evals_d);
      if (!toks[3].empty()) {
        double re;
        if (!detail::parse_double(toks[3], re))
          throw std::runtime_error("parse_records: line " + std::to_string(line_no) +
                                   ": bad rel_err");
        r.rel_err = re;
      }
      r.method = std::string(toks[4]);
      r.seed = static_cast<std::uint64_t>(seed_d);
      out.push_back(std::move(r));
    } else {
      const auto j = nlohmann::json::parse(sv);
      RunRecord r;
      r.iter = j.at("iter").get<std::uint64_t>();
      r.evals_cum = j.at("evals_cum").get<std::uint64_t>();
      r.rayleigh = j.at("rayleigh").get<double>();
      if (j.contains("rel_err")) r.rel_err = j.at("rel_err").get<double>();
      r.method = j.at("method").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::vector<RunRecord> parse_records(const std::string& path, RecordFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_records: cannot open " + path);
  return parse_records(in, format);
}

}  // namespace kermat
