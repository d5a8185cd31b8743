#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace medharness::detail {

struct CsvRecord {
  /// 1-based line on which the record starts.
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may contain the delimiter, doubled quotes,
/// and line breaks. A leading UTF-8 BOM is skipped. Blank lines are dropped.
std::vector<CsvRecord> parse_csv(std::string_view content, char delimiter = ',');

std::string read_file(const std::string& path);

}  // namespace medharness::detail
