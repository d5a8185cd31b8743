#pragma once

#include <string_view>

#include "medharness/jsonio.hpp"

namespace medharness {

/// Reads the TOML subset used by run configs into nested JSON objects:
/// `[section]` / `[a.b]` headers, `key = value` pairs with basic or literal
/// strings, integers, floats, booleans, and single-line arrays, plus `#`
/// comments. Throws InvalidConfig naming the line on anything else.
ordered_json parse_toml_subset(std::string_view content);

}  // namespace medharness
