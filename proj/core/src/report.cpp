#include "gnnbias/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gnnbias/error.hpp"
#include "gnnbias/graph_io.hpp"
#include "json.hpp"

namespace gnnbias {

using nlohmann::ordered_json;

std::string_view to_string(ReportFormat f) { return f == ReportFormat::csv ? "csv" : "json"; }

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw InvalidArgument("unknown report format '" + std::string(s) + "' (expected csv or json)");
}

void Report::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw InvalidArgument("report row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t Report::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw InvalidArgument("report has no column '" + std::string(name) + "'");
}

const Cell& Report::at(std::size_t row, std::string_view column) const { return rows.at(row).at(column_index(column)); }

std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(double v) const {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      return buf;
    }
  };
  return std::visit(Visitor{}, c);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

ordered_json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  const double v = std::get<double>(c);
  if (!std::isfinite(v)) return nullptr;
  // Round through the 6-significant-digit text so both formats agree.
  return std::stod(format_cell(c));
}

}  // namespace

std::string to_csv(const Report& r) {
  std::ostringstream out;
  for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << csv_escape(r.columns[i]);
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(format_cell(row[i]));
    out << '\n';
  }
  return out.str();
}

std::string to_json(const Report& r) {
  ordered_json j;
  j["experiment"] = r.experiment;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  j["seeds"] = r.seeds;
  j["columns"] = r.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json o = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) o[r.columns[i]] = cell_json(row[i]);
    rows.push_back(o);
  }
  j["rows"] = rows;
  if (r.wall_clock_seconds) j["wall_clock_seconds"] = *r.wall_clock_seconds;
  return j.dump(2) + "\n";
}

Report report_from_json(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(where + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    Report r;
    r.experiment = j.at("experiment").get<std::string>();
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& o : j.at("rows")) {
      std::vector<Cell> row;
      for (const auto& col : r.columns) {
        const auto& v = o.at(col);
        if (v.is_string()) {
          row.emplace_back(v.get<std::string>());
        } else if (v.is_boolean()) {
          row.emplace_back(v.get<bool>());
        } else if (v.is_number_integer()) {
          row.emplace_back(v.get<std::int64_t>());
        } else if (v.is_number()) {
          row.emplace_back(v.get<double>());
        } else if (v.is_null()) {
          row.emplace_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          throw ParseError(where + ": unsupported cell in column '" + col + "'");
        }
      }
      r.rows.push_back(std::move(row));
    }
    if (j.contains("wall_clock_seconds")) r.wall_clock_seconds = j["wall_clock_seconds"].get<double>();
    return r;
  } catch (const ordered_json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

std::string render(const Report& r, ReportFormat f) { return f == ReportFormat::csv ? to_csv(r) : to_json(r); }

void emit_report(const Report& r, ReportFormat f, const std::filesystem::path& path) {
  write_text_file(path, render(r, f));
}

}  // namespace gnnbias
