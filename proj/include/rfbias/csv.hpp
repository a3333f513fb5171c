#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rfbias/dataset.hpp"
#include "rfbias/error.hpp"

namespace rfbias::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto end = comma == std::string_view::npos ? line.size() : comma;
    cells.emplace_back(trim(line.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Strict decimal parse: the whole cell must be consumed and the value finite.
inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest representation that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Header plus raw string cells; rows with a wrong cell count are kept as-is
/// and left to the caller to reject.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");
  Table table;
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw DataError("CSV file '" + path.string() + "' has no header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    table.rows.push_back(split_line(line));
  }
  return table;
}

struct LoadResult {
  Dataset data;
  std::size_t dropped_rows = 0;
};

/// Numeric columns become features as-is; each categorical column becomes
/// one 0/1 indicator per observed level (`col=level`, levels sorted). Rows
/// with a missing or unparseable cell are dropped and counted.
inline LoadResult load_csv(const std::filesystem::path& path, const std::string& target_column,
                           const std::vector<std::string>& categorical_columns = {}) {
  if (!std::filesystem::exists(path)) throw DataError("CSV file '" + path.string() + "' does not exist");
  const Table table = read_table(path);
  const auto target_idx = table.column(target_column);
  if (!target_idx) {
    throw DataError("target column '" + target_column + "' not found in '" + path.string() + "'");
  }
  const std::size_t ncol = table.header.size();
  std::vector<bool> categorical(ncol, false);
  for (const auto& name : categorical_columns) {
    auto idx = table.column(name);
    if (!idx) throw DataError("categorical column '" + name + "' not found in '" + path.string() + "'");
    if (*idx == *target_idx) throw DataError("target column '" + name + "' cannot be categorical");
    categorical[*idx] = true;
  }

  std::vector<const std::vector<std::string>*> kept;
  std::size_t dropped = 0;
  for (const auto& row : table.rows) {
    bool ok = row.size() == ncol;
    for (std::size_t c = 0; ok && c < ncol; ++c) {
      ok = categorical[c] ? !row[c].empty() : parse_double(row[c]).has_value();
    }
    if (ok) {
      kept.push_back(&row);
    } else {
      ++dropped;
    }
  }
  if (kept.empty()) throw DataError("no usable rows in '" + path.string() + "'");

  std::map<std::size_t, std::vector<std::string>> levels;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (!categorical[c]) continue;
    std::set<std::string> seen;
    for (const auto* row : kept) seen.insert((*row)[c]);
    levels[c].assign(seen.begin(), seen.end());
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (c == *target_idx) continue;
    if (categorical[c]) {
      for (const auto& level : levels[c]) names.push_back(table.header[c] + "=" + level);
    } else {
      names.push_back(table.header[c]);
    }
  }

  std::vector<double> features;
  std::vector<double> target;
  features.reserve(kept.size() * names.size());
  for (const auto* row : kept) {
    for (std::size_t c = 0; c < ncol; ++c) {
      if (c == *target_idx) continue;
      if (categorical[c]) {
        for (const auto& level : levels[c]) features.push_back((*row)[c] == level ? 1.0 : 0.0);
      } else {
        features.push_back(*parse_double((*row)[c]));
      }
    }
    target.push_back(*parse_double((*row)[*target_idx]));
  }
  return {Dataset(std::move(features), std::move(target), std::move(names), target_column), dropped};
}

/// Feature columns in order, then the target column.
inline void write_dataset(std::ostream& out, const Dataset& data) {
  for (const auto& name : data.feature_names()) out << name << ',';
  out << data.target_name() << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (double v : data.row(i)) out << format_double(v) << ',';
    out << format_double(data.target()[i]) << '\n';
  }
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file '" + path.string() + "'");
  write_dataset(out, data);
}

}  // namespace rfbias::csv
