#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace medharness {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// One compact JSON document, UTF-8 kept as-is, invalid bytes replaced.
std::string dump_compact(const ordered_json& value);
std::string dump_pretty(const ordered_json& value);

struct JsonLine {
  std::size_t line = 0;
  ordered_json value;
  /// Parse error text; only set when parsing tolerantly.
  std::string error;
};

/// Parses non-blank lines. Bad JSON throws MalformedRow naming the line, or
/// with `tolerant` is reported in JsonLine::error instead.
std::vector<JsonLine> parse_jsonl(std::string_view content, bool tolerant = false);

}  // namespace medharness
