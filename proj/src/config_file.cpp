#include "medharness/config_file.hpp"

#include <cctype>
#include <charconv>
#include <string>

#include "medharness/error.hpp"
#include "medharness/text.hpp"

namespace medharness {

namespace {

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t number) : s_(line), line_(number) {}

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::InvalidConfig, "config line " + std::to_string(line_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end_or_comment() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  bool consume(char c) {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string key() {
    skip_space();
    if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) return string_value();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '_' || s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) error("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key()};
    while (consume('.')) parts.push_back(key());
    return parts;
  }

  ordered_json value() {
    skip_space();
    if (pos_ >= s_.size()) error("missing value");
    const char c = s_[pos_];
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') return array_value();
    if (s_.substr(pos_).starts_with("true")) {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_).starts_with("false")) {
      pos_ += 5;
      return false;
    }
    return number_value();
  }

 private:
  std::string string_value() {
    const char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      char c = s_[pos_++];
      if (quote == '"' && c == '\\') {
        if (pos_ >= s_.size()) error("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'u': {
            if (pos_ + 4 > s_.size()) error("short \\u escape");
            unsigned code = 0;
            auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + 4, code, 16);
            if (ec != std::errc{} || p != s_.data() + pos_ + 4) error("bad \\u escape");
            pos_ += 4;
            out += text::encode(std::u32string(1, static_cast<char32_t>(code)));
            break;
          }
          default: error(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
    if (pos_ >= s_.size()) error("unterminated string");
    ++pos_;
    return out;
  }

  ordered_json array_value() {
    ++pos_;
    ordered_json array = ordered_json::array();
    if (consume(']')) return array;
    while (true) {
      array.push_back(value());
      if (consume(']')) return array;
      if (!consume(',')) error("expected ',' or ']' in array");
      if (consume(']')) return array;
    }
  }

  ordered_json number_value() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
           s_[pos_] != ' ' && s_[pos_] != '\t') {
      ++pos_;
    }
    std::string token;
    for (char c : s_.substr(start, pos_ - start)) {
      if (c != '_') token.push_back(c);
    }
    if (token.empty()) error("expected a value");
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data() + (token[0] == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (is_float) {
      double d = 0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc{} || p != last) error("bad number '" + token + "'");
      return d;
    }
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(first, last, i);
    if (ec != std::errc{} || p != last) error("bad value '" + token + "'");
    return i;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

ordered_json& descend(ordered_json& root, const std::vector<std::string>& path,
                      const LineParser& parser) {
  ordered_json* node = &root;
  for (const auto& part : path) {
    ordered_json& child = (*node)[part];
    if (child.is_null()) child = ordered_json::object();
    if (!child.is_object()) parser.error("'" + part + "' is already a value");
    node = &child;
  }
  return *node;
}

}  // namespace

ordered_json parse_toml_subset(std::string_view content) {
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
  ordered_json root = ordered_json::object();
  std::vector<std::string> section;
  std::size_t number = 0;
  while (!content.empty()) {
    ++number;
    const auto nl = content.find('\n');
    std::string_view line = content.substr(0, nl);
    content.remove_prefix(nl == std::string_view::npos ? content.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    LineParser parser(line, number);
    if (parser.at_end_or_comment()) continue;
    if (parser.consume('[')) {
      section = parser.dotted_key();
      if (!parser.consume(']')) parser.error("expected ']'");
      if (!parser.at_end_or_comment()) parser.error("trailing characters after section");
      descend(root, section, parser);
      continue;
    }
    auto key_path = parser.dotted_key();
    if (!parser.consume('=')) parser.error("expected '='");
    ordered_json value = parser.value();
    if (!parser.at_end_or_comment()) parser.error("trailing characters after value");
    const std::string leaf = key_path.back();
    key_path.pop_back();
    std::vector<std::string> full = section;
    full.insert(full.end(), key_path.begin(), key_path.end());
    ordered_json& table = descend(root, full, parser);
    if (table.contains(leaf)) parser.error("duplicate key '" + leaf + "'");
    table[leaf] = std::move(value);
  }
  return root;
}

}  // namespace medharness
