#include "medharness/log.hpp"

#include <iostream>
#include <mutex>

namespace medharness::log {

namespace {

struct State {
  std::mutex mutex;
  Level level = Level::info;
  bool json = false;
  std::function<void(const std::string&)> sink;
};

State& state() {
  static State s;
  return s;
}

std::string_view level_name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}

}  // namespace

void set_level(Level level) {
  std::lock_guard lock(state().mutex);
  state().level = level;
}

void set_json(bool enabled) {
  std::lock_guard lock(state().mutex);
  state().json = enabled;
}

void set_sink(std::function<void(const std::string&)> sink) {
  std::lock_guard lock(state().mutex);
  state().sink = std::move(sink);
}

void write(Level level, std::string_view event, const ordered_json& fields) {
  auto& s = state();
  std::lock_guard lock(s.mutex);
  if (level < s.level) return;
  std::string line;
  if (s.json) {
    ordered_json record{{"level", level_name(level)}, {"event", event}};
    for (const auto& [key, value] : fields.items()) record[key] = value;
    line = dump_compact(record);
  } else {
    line = "[" + std::string(level_name(level)) + "] " + std::string(event);
    for (const auto& [key, value] : fields.items()) {
      line += ' ' + key + '=' + (value.is_string() ? value.get<std::string>() : dump_compact(value));
    }
  }
  if (s.sink) {
    s.sink(line);
  } else {
    std::cerr << line << '\n';
  }
}

}  // namespace medharness::log
