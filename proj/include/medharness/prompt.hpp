#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medharness/types.hpp"

namespace medharness {

namespace templates {
inline constexpr std::string_view kCmexamZh = "cmexam-zh-v1";
inline constexpr std::string_view kMmluEn5Shot = "mmlu-en-5shot-v1";
inline constexpr std::string_view kCmmluZh5Shot = "cmmlu-zh-5shot-v1";
inline constexpr std::string_view kAlpaca = "alpaca-v1";
}  // namespace templates

struct PromptText {
  std::string text;
  std::string template_id;
  std::size_t shot_count = 0;
  std::optional<std::string> subject;

  bool operator==(const PromptText&) const = default;
};

/// Zero-shot exam prompt.
///  - cmexam-zh-v1: instruction line, stem, "L. text" option lines, "答案：".
///  - alpaca-v1: the cmexam-zh-v1 instruction/input wrapped in the Alpaca
///    inference layout, for fine-tuned checkpoints.
/// Option texts are flattened to one line each.
PromptText render_exam_prompt(const ExamItem& item,
                              std::string_view template_id = templates::kCmexamZh);

/// Solved dev exemplars grouped by subject, kept in insertion order.
class FewShotBank {
 public:
  FewShotBank() = default;

  /// Groups by meta.subject; items without a subject are rejected.
  static FewShotBank from_items(const std::vector<ExamItem>& items);

  /// Throws MultiLabelGold for exemplars whose answer is not a single label.
  void add(const std::string& subject, ExamItem exemplar);

  bool has_subject(const std::string& subject) const;
  const std::vector<ExamItem>& exemplars(const std::string& subject) const;
  std::vector<std::string> subjects() const;

 private:
  std::map<std::string, std::vector<ExamItem>> by_subject_;
};

enum class PromptLanguage { en, zh };

/// MMLU/CMMLU-style k-shot prompt: header naming the subject, the first k
/// exemplars of that subject with their answers, then the test question with
/// a bare answer cue. With k = 0 the bank is not consulted.
PromptText render_few_shot(const FewShotBank& bank, const std::string& subject, std::size_t k,
                           const ExamItem& test_item, PromptLanguage language);

enum class AlpacaRender { training, inference };

/// Standard Alpaca serialization; the "### Input:" block is omitted when the
/// input is empty. Inference mode stops right after "### Response:\n".
PromptText render_alpaca(const InstructionExample& example,
                         AlpacaRender mode = AlpacaRender::inference);

}  // namespace medharness
