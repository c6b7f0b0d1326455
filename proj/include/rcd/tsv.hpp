#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rcd::tsv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

/// A parsed tab-separated table: mandatory header, `#` comment lines and
/// blank lines skipped, trailing CR stripped.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column position by name, if present.
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

Table read(std::istream& in, std::string source_name);
Table read_file(const std::filesystem::path& path);

/// Throws ValidationError unless `table.header` equals `expected` exactly.
void require_header(const Table& table, const std::vector<std::string>& expected);

/// Throws ValidationError unless every row has `width` fields.
void require_width(const Table& table, std::size_t width);

std::vector<std::string> split(std::string_view line, char sep = '\t');

double parse_double(std::string_view text, const std::string& source, std::size_t line);
long long parse_integer(std::string_view text, const std::string& source, std::size_t line);

}  // namespace rcd::tsv
