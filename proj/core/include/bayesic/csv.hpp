#pragma once

#include <optional>
#include <string>
#include <vector>

namespace bayesic::csv {

/// A parsed CSV file: header row plus data rows. Comma-separated, UTF-8,
/// no quoting (none of the project's formats need it). CRLF tolerated.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position of `name`, or nullopt.
  std::optional<std::size_t> column(const std::string& name) const;
};

/// Reads an entire CSV file. Throws IoError if unreadable, SchemaError if
/// the header is empty or a row has more cells than the header.
Table read_file(const std::string& path);

Table parse(const std::string& text);

/// Writes rows under a header. Cells are emitted verbatim.
void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

/// Shortest-exact formatting for doubles (round-trips through strtod).
std::string format_double(double v);

}  // namespace bayesic::csv
