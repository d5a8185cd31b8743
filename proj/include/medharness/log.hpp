#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "medharness/jsonio.hpp"

// Process-wide structured logger. Lines go to stderr unless a sink is set.
namespace medharness::log {

enum class Level { debug, info, warn, error };

void set_level(Level level);
/// One JSON object per line instead of "[level] event key=value".
void set_json(bool enabled);
/// Receives every formatted line; pass nullptr to restore stderr.
void set_sink(std::function<void(const std::string&)> sink);

void write(Level level, std::string_view event, const ordered_json& fields = ordered_json::object());

inline void debug(std::string_view event, const ordered_json& f = ordered_json::object()) {
  write(Level::debug, event, f);
}
inline void info(std::string_view event, const ordered_json& f = ordered_json::object()) {
  write(Level::info, event, f);
}
inline void warn(std::string_view event, const ordered_json& f = ordered_json::object()) {
  write(Level::warn, event, f);
}
inline void error(std::string_view event, const ordered_json& f = ordered_json::object()) {
  write(Level::error, event, f);
}

}  // namespace medharness::log
