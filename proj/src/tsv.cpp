#include "rcd/tsv.hpp"

#include <charconv>
#include <fstream>

#include <fmt/core.h>

#include "rcd/error.hpp"

namespace rcd::tsv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Table read(std::istream& in, std::string source_name) {
  Table table;
  table.source = std::move(source_name);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      table.rows.push_back({lineno, std::move(fields)});
    }
  }
  if (!have_header) throw ValidationError(fmt::format("{}: missing header row", table.source));
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  return read(in, path.string());
}

void require_header(const Table& table, const std::vector<std::string>& expected) {
  if (table.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : " ") + h;
    throw ValidationError(
        fmt::format("{}: header must be `{}` (tab-separated)", table.source, want));
  }
}

void require_width(const Table& table, std::size_t width) {
  for (const auto& row : table.rows) {
    if (row.fields.size() != width) {
      throw ValidationError(fmt::format("{}:{}: malformed row: expected {} fields, found {}",
                                        table.source, row.line, width, row.fields.size()));
    }
  }
}

double parse_double(std::string_view text, const std::string& source, std::size_t line) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ValidationError(fmt::format("{}:{}: malformed row: non-numeric value `{}`", source,
                                      line, text));
  }
  return value;
}

long long parse_integer(std::string_view text, const std::string& source, std::size_t line) {
  long long value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ValidationError(
        fmt::format("{}:{}: malformed row: non-integer value `{}`", source, line, text));
  }
  return value;
}

}  // namespace rcd::tsv
