#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gnnbias {

/// One table cell. Doubles are written with 6 significant digits.
using Cell = std::variant<std::string, std::int64_t, double, bool>;

enum class ReportFormat { csv, json };
std::string_view to_string(ReportFormat f);
ReportFormat report_format_from_string(std::string_view s);

/// Tabular experiment output with its configuration snapshot.
struct Report {
  std::string experiment;
  /// Ordered key/value snapshot of the configuration that produced the table.
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Only written when set; left empty by default so reruns are
  /// byte-identical.
  std::optional<double> wall_clock_seconds;

  void add_row(std::vector<Cell> row);
  std::size_t column_index(std::string_view name) const;
  const Cell& at(std::size_t row, std::string_view column) const;
};

std::string format_cell(const Cell& c);
std::string to_csv(const Report& r);
std::string to_json(const Report& r);
/// Inverse of to_json. Throws ParseError.
Report report_from_json(std::string_view text, std::string_view origin = "<report>");

std::string render(const Report& r, ReportFormat f);
/// Writes the rendered report, creating parent directories. Throws IoError.
void emit_report(const Report& r, ReportFormat f, const std::filesystem::path& path);

}  // namespace gnnbias
