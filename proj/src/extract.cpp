#include "medharness/extract.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <vector>

#include "medharness/error.hpp"
#include "medharness/text.hpp"

namespace medharness {

EditDistance levenshtein(std::u32string_view a, std::u32string_view b) {
  // Shared prefix and suffix never change the distance.
  while (!a.empty() && !b.empty() && a.front() == b.front()) {
    a.remove_prefix(1);
    b.remove_prefix(1);
  }
  while (!a.empty() && !b.empty() && a.back() == b.back()) {
    a.remove_suffix(1);
    b.remove_suffix(1);
  }
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return {a.size()};

  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({above + 1, row[j - 1] + 1, diagonal + cost});
      diagonal = above;
    }
  }
  return {row[b.size()]};
}

EditDistance levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(text::decode(a), text::decode(b));
}

namespace {

struct PreparedOption {
  char label;
  std::u32string text;  // NFC, trimmed
};

std::vector<PreparedOption> prepare(std::span<const Option> options) {
  if (options.empty()) fail(ErrorCode::NoOptions, "extraction needs at least one option");
  std::vector<PreparedOption> out;
  LabelSet seen;
  for (const auto& option : options) {
    if (!LabelSet::is_label(option.label) || seen.contains(option.label)) {
      fail(ErrorCode::NoOptions, std::string("invalid or repeated option label '") +
                                     option.label + "'");
    }
    seen.insert(option.label);
    out.push_back({option.label, text::trim(text::decode(text::nfc(option.text)))});
  }
  return out;
}

LabelSet label_set(const std::vector<PreparedOption>& options) {
  LabelSet set;
  for (const auto& o : options) set.insert(o.label);
  return set;
}

struct Token {
  std::size_t begin;
  std::size_t end;
};

/// Maximal runs of word characters in s[begin, end).
std::vector<Token> word_tokens(const std::u32string& s, std::size_t begin, std::size_t end) {
  std::vector<Token> tokens;
  std::size_t i = begin;
  while (i < end) {
    if (!text::is_word_char(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < end && text::is_word_char(s[j])) ++j;
    tokens.push_back({i, j});
    i = j;
  }
  return tokens;
}

/// A single-letter token matches case-insensitively; a multi-letter run such
/// as "ABD" only when it is all uppercase option letters.
std::optional<LabelSet> token_labels(const std::u32string& s, Token t, LabelSet allowed) {
  if (t.end - t.begin == 1) {
    const char letter = text::latin_letter(s[t.begin]);
    if (letter != 0 && allowed.contains(letter)) return LabelSet{letter};
    return std::nullopt;
  }
  LabelSet set;
  for (std::size_t i = t.begin; i < t.end; ++i) {
    const char32_t c = s[i];
    const bool upper = (c >= U'A' && c <= U'Z') || (c >= 0xFF21 && c <= 0xFF3A);
    const char letter = text::latin_letter(c);
    if (!upper || !allowed.contains(letter)) return std::nullopt;
    set.insert(letter);
  }
  return set;
}

std::optional<Extraction> match_cue(const std::u32string& s, LabelSet allowed) {
  static const std::array<std::u32string, 3> kCues{U"答案", U"正确选项", U"answer"};
  const std::u32string folded = text::casefold(s);

  struct Hit {
    std::size_t at;
    std::size_t length;
  };
  std::vector<Hit> hits;
  for (const auto& cue : kCues) {
    for (auto pos = folded.find(cue); pos != std::u32string::npos;
         pos = folded.find(cue, pos + 1)) {
      hits.push_back({pos, cue.size()});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) { return x.at < y.at; });

  for (const auto& hit : hits) {
    const std::size_t from = hit.at + hit.length;
    std::size_t line_end = from;
    while (line_end < s.size() && !text::is_line_break(s[line_end])) ++line_end;
    LabelSet found;
    for (const auto& token : word_tokens(s, from, line_end)) {
      if (auto labels = token_labels(s, token, allowed)) {
        found = found | *labels;
      }
    }
    if (!found.empty()) {
      return Extraction{found, Tier::cue,
                        {text::encode(s.substr(hit.at, line_end - hit.at)), hit.at}};
    }
  }
  return std::nullopt;
}

std::optional<Extraction> match_lone_label(const std::u32string& s, LabelSet allowed) {
  std::size_t start = 0;
  while (start < s.size() && text::is_space(s[start])) ++start;
  const auto tokens = word_tokens(s, 0, s.size());
  if (!tokens.empty() && tokens.front().begin == start &&
      tokens.front().end - tokens.front().begin == 1) {
    const char letter = text::latin_letter(s[start]);
    if (letter != 0 && allowed.contains(letter)) {
      return Extraction{LabelSet{letter}, Tier::lone_label, {text::encode(s.substr(start, 1)), start}};
    }
  }
  LabelSet found;
  std::size_t offset = 0;
  for (const auto& token : tokens) {
    if (token.end - token.begin != 1) continue;
    const char32_t c = s[token.begin];
    const bool upper = (c >= U'A' && c <= U'Z') || (c >= 0xFF21 && c <= 0xFF3A);
    const char letter = text::latin_letter(c);
    if (!upper || !allowed.contains(letter)) continue;
    if (found.empty()) offset = token.begin;
    found.insert(letter);
  }
  if (found.size() == 1) {
    return Extraction{found, Tier::lone_label, {text::encode(s.substr(offset, 1)), offset}};
  }
  return std::nullopt;
}

std::optional<Extraction> match_option_text(const std::u32string& s,
                                            const std::vector<PreparedOption>& options) {
  const std::u32string folded = text::casefold(s);
  const PreparedOption* best = nullptr;
  std::size_t best_length = 0;
  std::size_t best_offset = 0;
  for (const auto& option : options) {
    if (option.text.empty()) continue;
    const auto pos = folded.find(text::casefold(option.text));
    if (pos == std::u32string::npos) continue;
    const std::size_t length = option.text.size();
    const bool better = best == nullptr || length > best_length ||
                        (length == best_length && pos < best_offset) ||
                        (length == best_length && pos == best_offset && option.label < best->label);
    if (better) {
      best = &option;
      best_length = length;
      best_offset = pos;
    }
  }
  if (best == nullptr) return std::nullopt;
  return Extraction{LabelSet{best->label}, Tier::option_text,
                    {text::encode(s.substr(best_offset, best_length)), best_offset}};
}

Extraction match_levenshtein(const std::u32string& s, const std::vector<PreparedOption>& options) {
  // First line; a blank first line falls through to the first non-blank one.
  std::u32string line;
  std::size_t line_offset = 0;
  std::size_t cursor = 0;
  while (cursor <= s.size()) {
    std::size_t end = cursor;
    while (end < s.size() && !text::is_line_break(s[end])) ++end;
    std::u32string candidate = text::trim(std::u32string_view(s).substr(cursor, end - cursor));
    if (!candidate.empty()) {
      line = std::move(candidate);
      line_offset = cursor;
      while (line_offset < end && text::is_space(s[line_offset])) ++line_offset;
      break;
    }
    if (end >= s.size()) break;
    cursor = end + 1;
    if (s[end] == U'\r' && cursor < s.size() && s[cursor] == U'\n') ++cursor;
  }

  const PreparedOption* best = nullptr;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  for (const auto& option : options) {
    std::u32string echoed;
    echoed.push_back(static_cast<char32_t>(option.label));
    echoed += U". ";
    echoed += option.text;
    const std::size_t d =
        std::min(levenshtein(line, option.text).value, levenshtein(line, echoed).value);
    if (d < best_distance || (d == best_distance && option.label < best->label)) {
      best = &option;
      best_distance = d;
    }
  }
  return Extraction{LabelSet{best->label}, Tier::levenshtein, {text::encode(line), line_offset}};
}

bool is_hard_separator(char32_t c) {
  return c == U' ' || c == U',' || c == U'，' || c == U'、' || c == 0x3000;
}

bool is_upper_option(char32_t c, LabelSet allowed, char& letter) {
  const bool upper = (c >= U'A' && c <= U'Z') || (c >= 0xFF21 && c <= 0xFF3A);
  letter = text::latin_letter(c);
  return upper && allowed.contains(letter);
}

}  // namespace

Extraction extract_fuzzy(std::string_view raw, std::span<const Option> options) {
  const auto prepared = prepare(options);
  const LabelSet allowed = label_set(prepared);
  const std::u32string s = text::decode(text::nfc(raw));

  if (auto e = match_cue(s, allowed)) return *e;
  if (auto e = match_lone_label(s, allowed)) return *e;
  if (auto e = match_option_text(s, prepared)) return *e;
  return match_levenshtein(s, prepared);
}

Extraction extract_hard(std::string_view raw, std::span<const Option> options,
                        HardMatchOptions match) {
  const auto prepared = prepare(options);
  const LabelSet allowed = label_set(prepared);
  const std::u32string s = text::trim(text::decode(text::nfc(raw)));
  const Extraction none{};

  char letter = 0;
  if (s.empty() || !is_upper_option(s[0], allowed, letter)) return none;

  LabelSet labels;
  std::size_t i = 0;
  while (true) {
    is_upper_option(s[i], allowed, letter);
    labels.insert(letter);
    ++i;
    std::size_t j = i;
    while (j < s.size() && is_hard_separator(s[j])) ++j;
    if (j < s.size() && is_upper_option(s[j], allowed, letter)) {
      i = j;
      continue;
    }
    break;
  }
  const Extraction hit{labels, Tier::hard, {text::encode(s.substr(0, i)), 0}};
  if (i == s.size()) return hit;
  if (match.strict) return none;

  // The letters must end at punctuation or whitespace, and whatever follows
  // must not be more Latin text ("A patient ...", "Because").
  auto is_break = [](char32_t c) { return text::is_space(c) || text::is_punct(c); };
  if (!is_break(s[i])) return none;
  std::size_t k = i;
  while (k < s.size() && is_break(s[k])) ++k;
  if (k < s.size() && text::latin_letter(s[k]) != 0) return none;
  return hit;
}

}  // namespace medharness
