#include "medharness/jsonio.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include <unistd.h>

#include "csv.hpp"
#include "medharness/error.hpp"

namespace medharness {

std::string read_text_file(const std::filesystem::path& path) {
  return detail::read_file(path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      fail(ErrorCode::IoError, "cannot create directory '" +
                                   path.parent_path().string() + "': " + ec.message());
    }
  }
  std::ostringstream suffix;
  suffix << ".tmp." << ::getpid() << '.' << std::this_thread::get_id() << '.'
         << counter.fetch_add(1);
  std::filesystem::path tmp = path;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot move result into '" + path.string() + "'");
  }
}

std::string dump_compact(const ordered_json& value) {
  return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string dump_pretty(const ordered_json& value) {
  return value.dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::vector<JsonLine> parse_jsonl(std::string_view content, bool tolerant) {
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
  std::vector<JsonLine> out;
  std::size_t line = 0;
  while (!content.empty()) {
    ++line;
    const auto nl = content.find('\n');
    std::string_view row = content.substr(0, nl);
    content.remove_prefix(nl == std::string_view::npos ? content.size() : nl + 1);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.push_back({line, ordered_json::parse(row), {}});
    } catch (const nlohmann::json::parse_error& e) {
      if (tolerant) {
        out.push_back({line, ordered_json{}, e.what()});
        continue;
      }
      fail(ErrorCode::MalformedRow,
           "line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
    }
  }
  return out;
}

}  // namespace medharness
