#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace adf::cli {

using Json = nlohmann::ordered_json;

/// Floats are written with 17 significant digits; non-finite values become
/// null.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Compact text of a scalar or nested cell, sharing the number format with
/// the JSON writer.
inline std::string cell_text(const Json& j) {
  switch (j.type()) {
    case Json::value_t::number_float: return format_number(j.get<double>());
    case Json::value_t::string: return j.get<std::string>();
    case Json::value_t::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < j.size(); ++i) out += (i ? ", " : "") + cell_text(j[i]);
      return out + "]";
    }
    case Json::value_t::object: {
      std::string out = "{";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        out += (first ? "" : ", ") + k + ": " + cell_text(v);
        first = false;
      }
      return out + "}";
    }
    default: return j.dump();
  }
}

inline void write_json(std::ostream& out, const Json& j, int indent = 0) {
  const std::string pad(indent + 2, ' ');
  const std::string close(indent, ' ');
  switch (j.type()) {
    case Json::value_t::number_float: out << format_number(j.get<double>()); return;
    case Json::value_t::array:
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out << pad;
        write_json(out, j[i], indent + 2);
        out << (i + 1 < j.size() ? ",\n" : "\n");
      }
      out << close << "]";
      return;
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      std::size_t i = 0;
      for (const auto& [k, v] : j.items()) {
        out << pad << Json(k).dump() << ": ";
        write_json(out, v, indent + 2);
        out << (++i < j.size() ? ",\n" : "\n");
      }
      out << close << "}";
      return;
    }
    default: out << j.dump(); return;
  }
}

struct Style {
  bool color = false;

  std::string bold(const std::string& s) const { return color ? "\033[1m" + s + "\033[0m" : s; }
  std::string red(const std::string& s) const { return color ? "\033[31m" + s + "\033[0m" : s; }
};

/// Renders rows as aligned fixed-width tables. Consecutive rows with the same
/// keys share a table.
inline void write_table(std::ostream& out, const Json& report, const Style& style) {
  out << style.bold(report["command"].get<std::string>()) << "  backends: " << cell_text(report["backends"])
      << "  seed: " << cell_text(report["seed"]) << "\n";
  if (!report["tolerances"].empty()) out << "tolerances: " << cell_text(report["tolerances"]) << "\n";

  const Json& rows = report["results"];
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::vector<std::string> keys;
    for (const auto& [k, v] : rows[begin].items()) keys.push_back(k);
    auto same_keys = [&](const Json& row) {
      if (row.size() != keys.size()) return false;
      std::size_t i = 0;
      for (const auto& [k, v] : row.items()) {
        if (k != keys[i++]) return false;
      }
      return true;
    };
    std::size_t end = begin;
    while (end < rows.size() && same_keys(rows[end])) ++end;

    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width;
    for (const auto& k : keys) width.push_back(k.size());
    for (std::size_t r = begin; r < end; ++r) {
      std::vector<std::string> line;
      for (std::size_t c = 0; c < keys.size(); ++c) {
        line.push_back(cell_text(rows[r][keys[c]]));
        width[c] = std::max(width[c], line.back().size());
      }
      cells.push_back(std::move(line));
    }

    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
    out << "\n";
    std::string header;
    for (std::size_t c = 0; c < keys.size(); ++c) header += (c ? "  " : "") + pad(keys[c], width[c]);
    out << style.bold(header) << "\n";
    for (const auto& line : cells) {
      std::string text;
      bool failed = false;
      for (std::size_t c = 0; c < keys.size(); ++c) {
        text += (c ? "  " : "") + pad(line[c], width[c]);
        if (line[c] == "false" && (keys[c] == "ok" || keys[c] == "converged")) failed = true;
      }
      out << (failed ? style.red(text) : text) << "\n";
    }
    begin = end;
  }
  if (rows.empty()) out << "(no results)\n";
}

}  // namespace adf::cli
