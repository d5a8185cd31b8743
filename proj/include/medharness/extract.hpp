#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "medharness/types.hpp"

namespace medharness {

/// Edit distance in single-scalar insertions, deletions and substitutions.
struct EditDistance {
  std::size_t value = 0;

  auto operator<=>(const EditDistance&) const = default;
};

EditDistance levenshtein(std::u32string_view a, std::u32string_view b);
/// UTF-8 overload; compares scalars, not bytes.
EditDistance levenshtein(std::string_view a, std::string_view b);

/// Recovers an answer from free-form output of a model that was not tuned to
/// emit bare letters. Tiers, first success wins:
///   cue          "答案" / "正确选项" / "answer" then option letters on that line
///                (multi-label, e.g. "答案：ABD")
///   lone_label   output opens with a standalone option letter, or exactly one
///                distinct uppercase option letter stands alone anywhere
///   option_text  longest option text found in the case-folded output
///   levenshtein  option closest to the first line (always succeeds)
/// Inputs are NFC-normalized first. Throws NoOptions on an empty option list.
Extraction extract_fuzzy(std::string_view raw, std::span<const Option> options);

struct HardMatchOptions {
  /// When set, the trimmed output must consist of the letter pattern only;
  /// no trailing punctuation or explanation is tolerated.
  bool strict = false;
};

/// Hard match for fine-tuned models: the trimmed output must open with
/// option letters separated by nothing, spaces, commas, or "、" ("B",
/// "A,B,D", "A、B"). The pattern may be followed by punctuation or whitespace
/// and then non-Latin content ("B。因为……"). Anything else yields tier none
/// with no labels.
Extraction extract_hard(std::string_view raw, std::span<const Option> options,
                        HardMatchOptions match = {});

}  // namespace medharness
