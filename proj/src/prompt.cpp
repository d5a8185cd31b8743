#include "medharness/prompt.hpp"

#include "medharness/corpus.hpp"
#include "medharness/error.hpp"
#include "medharness/text.hpp"

namespace medharness {

namespace {

constexpr std::string_view kAlpacaPreambleWithInput =
    "Below is an instruction that describes a task, paired with an input that provides "
    "further context. Write a response that appropriately completes the request.\n\n";
constexpr std::string_view kAlpacaPreambleNoInput =
    "Below is an instruction that describes a task. Write a response that appropriately "
    "completes the request.\n\n";

void append_question(std::string& out, const ExamItem& item) {
  out += item.question;
  for (const auto& option : item.options) {
    out += '\n';
    out += option.label;
    out += ". ";
    out += text::single_line(option.text);
  }
  out += '\n';
}

std::string display_subject(const std::string& subject) {
  std::string out = subject;
  for (char& c : out) {
    if (c == '_') c = ' ';
  }
  return out;
}

}  // namespace

PromptText render_exam_prompt(const ExamItem& item, std::string_view template_id) {
  validate(item);
  if (template_id == templates::kCmexamZh) {
    std::string out(instruction_template(kExamTemplateId));
    out += '\n';
    append_question(out, item);
    out += "答案：";
    return {out, std::string(template_id), 0, item.meta.subject};
  }
  if (template_id == templates::kAlpaca) {
    InstructionExample example{std::string(instruction_template(kExamTemplateId)),
                               render_exam_input(item), item.answer.to_string()};
    PromptText prompt = render_alpaca(example, AlpacaRender::inference);
    prompt.subject = item.meta.subject;
    return prompt;
  }
  fail(ErrorCode::UnknownTemplate, "no exam prompt template '" + std::string(template_id) + "'");
}

FewShotBank FewShotBank::from_items(const std::vector<ExamItem>& items) {
  FewShotBank bank;
  for (const auto& item : items) {
    if (!item.meta.subject) {
      fail(ErrorCode::UnknownSubject, "exemplar '" + item.id + "' has no subject");
    }
    bank.add(*item.meta.subject, item);
  }
  return bank;
}

void FewShotBank::add(const std::string& subject, ExamItem exemplar) {
  validate(exemplar);
  if (exemplar.answer.size() != 1) {
    fail(ErrorCode::MultiLabelGold,
         "few-shot exemplar '" + exemplar.id + "' must have a single answer");
  }
  by_subject_[subject].push_back(std::move(exemplar));
}

bool FewShotBank::has_subject(const std::string& subject) const {
  return by_subject_.contains(subject);
}

const std::vector<ExamItem>& FewShotBank::exemplars(const std::string& subject) const {
  auto it = by_subject_.find(subject);
  if (it == by_subject_.end()) fail(ErrorCode::UnknownSubject, "no exemplars for '" + subject + "'");
  return it->second;
}

std::vector<std::string> FewShotBank::subjects() const {
  std::vector<std::string> out;
  for (const auto& [subject, _] : by_subject_) out.push_back(subject);
  return out;
}

PromptText render_few_shot(const FewShotBank& bank, const std::string& subject, std::size_t k,
                           const ExamItem& test_item, PromptLanguage language) {
  validate(test_item);
  if (test_item.options.size() != 4) {
    fail(ErrorCode::MalformedRow, "few-shot test items need exactly 4 options; '" +
                                      test_item.id + "' has " +
                                      std::to_string(test_item.options.size()));
  }
  const bool zh = language == PromptLanguage::zh;
  const std::string_view cue = zh ? "答案：" : "Answer:";

  std::string out;
  if (zh) {
    out += "以下是关于" + subject + "的单项选择题，请直接给出正确答案的选项。\n\n";
  } else {
    out += "The following are multiple choice questions (with answers) about " +
           display_subject(subject) + ".\n\n";
  }
  if (k > 0) {
    const auto& exemplars = bank.exemplars(subject);
    if (exemplars.size() < k) {
      fail(ErrorCode::InsufficientExemplars,
           "subject '" + subject + "' has " + std::to_string(exemplars.size()) +
               " exemplars, " + std::to_string(k) + " requested");
    }
    for (std::size_t i = 0; i < k; ++i) {
      append_question(out, exemplars[i]);
      out += cue;
      if (!zh) out += ' ';
      out += exemplars[i].answer.to_string();
      out += "\n\n";
    }
  }
  append_question(out, test_item);
  out += cue;
  return {out,
          std::string(zh ? templates::kCmmluZh5Shot : templates::kMmluEn5Shot), k, subject};
}

PromptText render_alpaca(const InstructionExample& example, AlpacaRender mode) {
  const bool has_input = !example.input.empty();
  std::string out(has_input ? kAlpacaPreambleWithInput : kAlpacaPreambleNoInput);
  out += "### Instruction:\n";
  out += example.instruction;
  out += "\n\n";
  if (has_input) {
    out += "### Input:\n";
    out += example.input;
    out += "\n\n";
  }
  out += "### Response:\n";
  if (mode == AlpacaRender::training) out += example.output;
  return {out, std::string(templates::kAlpaca), 0, std::nullopt};
}

}  // namespace medharness
