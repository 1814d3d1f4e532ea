#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace segmarket::cli {

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// A command's output: ordered scalar summary plus named tables.
struct Report {
  std::string command;
  std::vector<std::pair<std::string, Cell>> summary;
  std::deque<Table> tables;  // stable references from table()

  void add(std::string key, Cell v) { summary.emplace_back(std::move(key), std::move(v)); }
  Table& table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
  }
};

enum class Format { Json, Csv, Table };

inline std::string fixed6(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return fixed6(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return std::get<std::string>(c);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return nullptr;
    return *d;
  }
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  return std::get<std::string>(c);
}

inline nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["command"] = r.command;
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.summary) s[k] = cell_json(v);
  j["summary"] = s;
  nlohmann::ordered_json tabs = nlohmann::ordered_json::object();
  for (const auto& t : r.tables) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
      nlohmann::ordered_json o;
      for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = cell_json(row[i]);
      rows.push_back(o);
    }
    tabs[t.name] = rows;
  }
  j["tables"] = tabs;
  return j;
}

namespace detail {

inline void write_csv_table(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << csv_field(t.columns[i]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(cell_text(row[i]));
    os << '\n';
  }
}

inline void write_text_table(std::ostream& os, const Table& t) {
  std::vector<std::size_t> width(t.columns.size());
  for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
  for (const auto& row : t.rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], cell_text(row[i]).size());
  auto line = [&](auto&& text_of) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string s = text_of(i);
      os << (i ? "  " : "") << s;
      if (i + 1 < width.size()) os << std::string(width[i] - s.size(), ' ');
    }
    os << '\n';
  };
  line([&](std::size_t i) { return t.columns[i]; });
  line([&](std::size_t i) { return std::string(width[i], '-'); });
  for (const auto& row : t.rows) line([&](std::size_t i) { return cell_text(row[i]); });
}

}  // namespace detail

// CSV: a lone table is written bare; otherwise each table (summary first) gets a "# name" line.
inline void write_report(std::ostream& os, const Report& r, Format f) {
  if (f == Format::Json) {
    os << to_json(r).dump(2) << '\n';
    return;
  }
  std::vector<Table> all;
  if (!r.summary.empty()) {
    Table s{"summary", {"key", "value"}, {}};
    for (const auto& [k, v] : r.summary) s.rows.push_back({k, v});
    all.push_back(std::move(s));
  }
  all.insert(all.end(), r.tables.begin(), r.tables.end());
  const bool bare = f == Format::Csv && all.size() == 1;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i) os << '\n';
    if (!bare) os << "# " << all[i].name << '\n';
    if (f == Format::Csv)
      detail::write_csv_table(os, all[i]);
    else
      detail::write_text_table(os, all[i]);
  }
}

}  // namespace segmarket::cli
