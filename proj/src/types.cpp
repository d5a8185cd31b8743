#include "medharness/types.hpp"

#include <bit>

#include "medharness/error.hpp"
#include "medharness/text.hpp"

namespace medharness {

std::optional<LabelSet> LabelSet::from_letters(std::string_view letters) {
  LabelSet set;
  for (char c : letters) {
    if (!is_label(c)) return std::nullopt;
    set.insert(c);
  }
  return set;
}

void LabelSet::insert(char label) {
  if (!is_label(label)) {
    fail(ErrorCode::UnknownLabel, std::string("not an option label: '") + label + "'");
  }
  bits_ |= 1u << (label - 'A');
}

std::size_t LabelSet::size() const noexcept {
  return static_cast<std::size_t>(std::popcount(bits_));
}

std::vector<char> LabelSet::labels() const {
  std::vector<char> out;
  for (char c = 'A'; c <= 'Z'; ++c) {
    if (contains(c)) out.push_back(c);
  }
  return out;
}

std::string LabelSet::to_string() const {
  std::string out;
  for (char c : labels()) out.push_back(c);
  return out;
}

LabelSet ExamItem::option_labels() const {
  LabelSet set;
  for (const auto& option : options) {
    if (LabelSet::is_label(option.label)) set.insert(option.label);
  }
  return set;
}

bool ExamItem::has_explanation() const {
  return explanation.has_value() && !text::trim(*explanation).empty();
}

void validate_options(const std::vector<Option>& options) {
  if (options.empty()) fail(ErrorCode::MalformedRow, "no options");
  if (options.size() > static_cast<std::size_t>(kMaxOptionLabel - 'A' + 1)) {
    fail(ErrorCode::MalformedRow, "more than " +
                                      std::to_string(kMaxOptionLabel - 'A' + 1) +
                                      " options");
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    const char expected = static_cast<char>('A' + i);
    if (options[i].label != expected) {
      fail(ErrorCode::MalformedRow, std::string("option labels must run A.. in order; got '") +
                                        options[i].label + "' at position " +
                                        std::to_string(i + 1));
    }
    if (text::trim(options[i].text).empty()) {
      fail(ErrorCode::MalformedRow, std::string("option ") + expected + " is blank");
    }
  }
}

void validate(const ExamItem& item) {
  if (text::trim(item.question).empty()) {
    fail(ErrorCode::MalformedRow, "item '" + item.id + "': blank question");
  }
  try {
    validate_options(item.options);
  } catch (const Error& e) {
    fail(e.code(), "item '" + item.id + "': " + e.what());
  }
  if (item.answer.empty()) {
    fail(ErrorCode::MalformedRow, "item '" + item.id + "': empty answer");
  }
  if (!item.answer.is_subset_of(item.option_labels())) {
    fail(ErrorCode::UnknownLabel, "item '" + item.id + "': answer " +
                                      item.answer.to_string() +
                                      " not among options");
  }
}

void validate(const InstructionExample& example) {
  if (text::trim(example.instruction).empty()) {
    fail(ErrorCode::MalformedRow, "instruction example with blank instruction");
  }
  if (text::trim(example.output).empty()) {
    fail(ErrorCode::MalformedRow, "instruction example with blank output");
  }
}

std::string_view to_string(Tier tier) noexcept {
  switch (tier) {
    case Tier::cue: return "cue";
    case Tier::lone_label: return "lone_label";
    case Tier::option_text: return "option_text";
    case Tier::levenshtein: return "levenshtein";
    case Tier::hard: return "hard";
    case Tier::none: return "none";
  }
  return "none";
}

std::optional<Tier> tier_from_string(std::string_view name) noexcept {
  for (Tier t : {Tier::cue, Tier::lone_label, Tier::option_text, Tier::levenshtein,
                 Tier::hard, Tier::none}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

}  // namespace medharness
