#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace medharness {

/// Highest option label an ExamItem may carry.
inline constexpr char kMaxOptionLabel = 'E';

/// A set of uppercase option letters, stored as a bitmask over 'A'..'Z'.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<char> labels) {
    for (char c : labels) insert(c);
  }

  /// Parses concatenated letters; returns nullopt on any non-letter.
  static std::optional<LabelSet> from_letters(std::string_view letters);

  static constexpr bool is_label(char c) noexcept { return c >= 'A' && c <= 'Z'; }

  void insert(char label);
  bool contains(char label) const noexcept {
    return is_label(label) && (bits_ >> (label - 'A') & 1u) != 0;
  }
  bool empty() const noexcept { return bits_ == 0; }
  std::size_t size() const noexcept;
  std::uint32_t bits() const noexcept { return bits_; }

  bool is_subset_of(LabelSet other) const noexcept {
    return (bits_ & ~other.bits_) == 0;
  }
  LabelSet operator&(LabelSet other) const noexcept {
    LabelSet r;
    r.bits_ = bits_ & other.bits_;
    return r;
  }
  LabelSet operator|(LabelSet other) const noexcept {
    LabelSet r;
    r.bits_ = bits_ | other.bits_;
    return r;
  }

  /// Labels in ascending order.
  std::vector<char> labels() const;
  /// Sorted concatenation, e.g. "ABD".
  std::string to_string() const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::uint32_t bits_ = 0;
};

struct Option {
  char label = 'A';
  std::string text;

  bool operator==(const Option&) const = default;
};

struct ItemMeta {
  std::string source;
  std::string split;
  std::optional<std::string> subject;
  std::optional<std::string> disease_category;

  bool operator==(const ItemMeta&) const = default;
};

struct ExamItem {
  std::string id;
  std::string question;
  std::vector<Option> options;
  LabelSet answer;
  std::optional<std::string> explanation;
  ItemMeta meta;

  LabelSet option_labels() const;
  bool has_explanation() const;

  bool operator==(const ExamItem&) const = default;
};

/// Throws MalformedRow or UnknownLabel when an item breaks the ExamItem
/// invariants (contiguous labels from A, non-empty texts, answer within the
/// options).
void validate(const ExamItem& item);

/// Checks the option list alone: non-empty, labels distinct and contiguous
/// from 'A' up to kMaxOptionLabel, texts non-blank.
void validate_options(const std::vector<Option>& options);

struct InstructionExample {
  std::string instruction;
  std::string input;
  std::string output;

  bool operator==(const InstructionExample&) const = default;
};

void validate(const InstructionExample& example);

enum class Tier { cue, lone_label, option_text, levenshtein, hard, none };

std::string_view to_string(Tier tier) noexcept;
std::optional<Tier> tier_from_string(std::string_view name) noexcept;

struct Evidence {
  std::string matched;
  /// Offset in Unicode scalars into the NFC-normalized output.
  std::size_t offset = 0;

  bool operator==(const Evidence&) const = default;
};

struct Extraction {
  LabelSet labels;
  Tier tier = Tier::none;
  Evidence evidence;

  bool operator==(const Extraction&) const = default;
};

struct Prediction {
  std::string id;
  std::string raw_output;
  Extraction extraction;
  std::string prompt_hash;
  std::string template_id;
  double latency_ms = 0.0;
  bool cached = false;
  int retries = 0;
  /// Set when the request failed after all retries.
  std::optional<std::string> error;

  bool failed() const noexcept { return error.has_value(); }
};

}  // namespace medharness
