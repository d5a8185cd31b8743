#include "medharness/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "csv.hpp"
#include "medharness/text.hpp"

namespace medharness {

namespace {

/// Lowercases ASCII and drops spaces/underscores/hyphens so that
/// "Disease Group", "disease_group" and "diseasegroup" compare equal.
std::string normalize_key(std::string_view key) {
  std::string out;
  for (char c : text::trim(key)) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

bool is_blank(std::string_view s) { return text::trim(s).empty(); }

std::optional<std::string> non_blank(std::string s) {
  if (is_blank(s)) return std::nullopt;
  return text::trim(s);
}

bool is_answer_separator(char32_t c) {
  return text::is_space(c) || c == U',' || c == U'，' || c == U'、' || c == U';' ||
         c == U'；' || c == U'/' || c == U'|';
}

LabelSet parse_answer_letters(std::string_view cell, LabelSet option_labels) {
  LabelSet answer;
  for (char32_t c : text::decode(text::trim(cell))) {
    if (is_answer_separator(c)) continue;
    const char letter = text::latin_letter(c);
    if (letter == 0) {
      fail(ErrorCode::MalformedRow,
           "answer '" + std::string(cell) + "' contains a non-letter character");
    }
    if (!option_labels.contains(letter)) {
      fail(ErrorCode::UnknownLabel, std::string("answer letter '") + letter +
                                        "' is not among options " +
                                        option_labels.to_string());
    }
    answer.insert(letter);
  }
  if (answer.empty()) fail(ErrorCode::MalformedRow, "empty answer");
  return answer;
}

bool is_option_marker_separator(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'.' || c == U'．' || c == U'、' ||
         c == U':' || c == U'：' || c == U')' || c == U'）' || c == 0x3000;
}

/// Parses a block such as "A 高血压\nB 糖尿病". A line that does not open the
/// next expected label continues the previous option.
std::vector<Option> parse_options_block(std::string_view block) {
  std::vector<Option> options;
  for (const auto& raw_line : text::split_lines(text::decode(block))) {
    std::u32string line = text::trim(raw_line);
    if (line.empty()) continue;
    const char expected = static_cast<char>('A' + options.size());
    const bool opens_option =
        !line.empty() && text::latin_letter(line[0]) == expected &&
        (line.size() == 1 || is_option_marker_separator(line[1]));
    if (opens_option) {
      std::size_t start = 1;
      while (start < line.size() && is_option_marker_separator(line[start])) ++start;
      options.push_back({expected, text::encode(line.substr(start))});
    } else if (!options.empty()) {
      options.back().text += " " + text::encode(line);
    } else {
      fail(ErrorCode::MalformedRow, "options block does not start with 'A'");
    }
  }
  return options;
}

/// Per-letter columns/fields; trailing blank options are dropped so that
/// four-option rows in a five-column file are accepted.
std::vector<Option> options_from_letters(const std::vector<std::string>& texts) {
  std::vector<Option> options;
  std::size_t last = texts.size();
  while (last > 0 && is_blank(texts[last - 1])) --last;
  for (std::size_t i = 0; i < last; ++i) {
    options.push_back({static_cast<char>('A' + i), text::trim(texts[i])});
  }
  return options;
}

std::string format_errors(std::string_view source, const std::vector<RowError>& errors) {
  std::string message = std::to_string(errors.size()) + " bad row(s) in " + std::string(source);
  const std::size_t shown = std::min<std::size_t>(errors.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    message += "\n  row " + std::to_string(errors[i].row) + ": " + errors[i].message;
  }
  if (errors.size() > shown) message += "\n  ...";
  return message;
}

template <typename T>
class Collector {
 public:
  Collector(ParseMode mode, std::string source) : mode_(mode), source_(std::move(source)) {}

  /// Runs `build` for one row, recording any Error it throws against `row`.
  template <typename Fn>
  void row(std::size_t row, Fn&& build) {
    try {
      T item = build();
      if constexpr (std::is_same_v<T, ExamItem>) {
        validate(item);
        if (!ids_.insert(item.id).second) {
          fail(ErrorCode::DuplicateId, "duplicate id '" + item.id + "'");
        }
      }
      report_.items.push_back(std::move(item));
    } catch (const Error& e) {
      report_.errors.push_back({row, e.code(), e.what()});
    } catch (const nlohmann::json::exception& e) {
      report_.errors.push_back({row, ErrorCode::SchemaMismatch, e.what()});
    }
  }

  void error(std::size_t row, ErrorCode code, std::string message) {
    report_.errors.push_back({row, code, std::move(message)});
  }

  ParseReport<T> finish() {
    if (mode_ == ParseMode::strict && !report_.errors.empty()) {
      fail(report_.errors.front().code, format_errors(source_, report_.errors));
    }
    return std::move(report_);
  }

 private:
  ParseMode mode_;
  std::string source_;
  ParseReport<T> report_;
  std::unordered_set<std::string> ids_;
};

bool is_json_path(const std::filesystem::path& path) {
  const auto ext = normalize_key(path.extension().string());
  return ext == ".jsonl" || ext == ".json" || ext == ".ndjson";
}

std::string json_text(const ordered_json& value) {
  if (value.is_null()) return {};
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

/// JSON object view with normalized keys.
class Fields {
 public:
  explicit Fields(const ordered_json& object) {
    if (!object.is_object()) fail(ErrorCode::SchemaMismatch, "row is not a JSON object");
    for (const auto& [key, value] : object.items()) fields_[normalize_key(key)] = &value;
  }
  const ordered_json* find(std::string_view key) const {
    auto it = fields_.find(std::string(key));
    return it == fields_.end() ? nullptr : it->second;
  }
  std::string text(std::string_view key) const {
    const auto* v = find(key);
    return v ? json_text(*v) : std::string{};
  }
  const ordered_json& require(std::string_view key) const {
    const auto* v = find(key);
    if (!v) fail(ErrorCode::SchemaMismatch, "missing field '" + std::string(key) + "'");
    return *v;
  }

 private:
  std::map<std::string, const ordered_json*> fields_;
};

std::vector<Option> options_from_json(const ordered_json& value) {
  if (value.is_string()) return parse_options_block(value.get<std::string>());
  if (value.is_object()) {
    std::vector<std::string> texts;
    for (char c = 'A'; c <= kMaxOptionLabel; ++c) {
      const std::string key(1, c);
      if (!value.contains(key)) break;
      texts.push_back(json_text(value.at(key)));
    }
    if (texts.size() != value.size()) {
      fail(ErrorCode::MalformedRow, "option keys must be contiguous letters from A");
    }
    return options_from_letters(texts);
  }
  if (value.is_array()) {
    std::vector<Option> options;
    for (const auto& entry : value) {
      const std::string label = entry.at("label").get<std::string>();
      if (label.size() != 1) fail(ErrorCode::MalformedRow, "bad option label '" + label + "'");
      options.push_back({label[0], entry.at("text").get<std::string>()});
    }
    return options;
  }
  fail(ErrorCode::SchemaMismatch, "options must be a string, object, or array");
}

LabelSet answer_from_json(const ordered_json& value, LabelSet option_labels) {
  if (value.is_array()) {
    std::string letters;
    for (const auto& v : value) letters += v.get<std::string>();
    return parse_answer_letters(letters, option_labels);
  }
  return parse_answer_letters(json_text(value), option_labels);
}

ItemMeta make_meta(std::string source, std::string_view split) {
  ItemMeta meta;
  meta.source = std::move(source);
  meta.split = std::string(split);
  return meta;
}

std::string subject_from_filename(const std::filesystem::path& path) {
  std::string stem = path.stem().string();
  for (std::string_view suffix : {"_test", "_dev", "_val", "_train"}) {
    if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
      stem.resize(stem.size() - suffix.size());
      break;
    }
  }
  return stem;
}

// CMExam ---------------------------------------------------------------------

struct CmexamColumns {
  std::optional<std::size_t> id, question, options, answer, explanation, subject, disease;
  std::vector<std::size_t> letters;  // A..E columns
};

CmexamColumns resolve_cmexam_header(const std::vector<std::string>& header) {
  CmexamColumns cols;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(normalize_key(header[i]), i);
  auto pick = [&](std::initializer_list<std::string_view> names) -> std::optional<std::size_t> {
    for (auto name : names) {
      auto it = index.find(std::string(name));
      if (it != index.end()) return it->second;
    }
    return std::nullopt;
  };
  cols.id = pick({"id", "qid"});
  cols.question = pick({"question", "stem"});
  cols.options = pick({"options", "choices"});
  cols.answer = pick({"answer", "label"});
  cols.explanation = pick({"explanation", "analysis", "exp"});
  cols.subject = pick({"subject", "clinicaldepartment", "department"});
  cols.disease = pick({"diseasecategory", "diseasegroup", "disease"});
  for (char c = 'a'; c <= 'e'; ++c) {
    auto col = pick({std::string_view(&c, 1)});
    if (!col) break;
    cols.letters.push_back(*col);
  }
  if (!cols.question || !cols.answer || (!cols.options && cols.letters.empty())) {
    fail(ErrorCode::SchemaMismatch,
         "CMExam header needs Question, Answer, and Options or A..E columns");
  }
  return cols;
}

ExamItem cmexam_from_record(const CmexamColumns& cols, const std::vector<std::string>& fields,
                            std::size_t ordinal, std::string_view split) {
  auto cell = [&](std::optional<std::size_t> col) -> std::string {
    if (!col || *col >= fields.size()) return {};
    return fields[*col];
  };
  ExamItem item;
  item.id = non_blank(cell(cols.id)).value_or("cmexam-" + std::string(split) + "-" +
                                              std::to_string(ordinal));
  item.question = text::trim(cell(cols.question));
  if (item.question.empty()) fail(ErrorCode::MalformedRow, "missing question stem");
  if (cols.options) {
    item.options = parse_options_block(cell(cols.options));
  } else {
    std::vector<std::string> texts;
    for (auto col : cols.letters) texts.push_back(cell(col));
    item.options = options_from_letters(texts);
  }
  validate_options(item.options);
  item.answer = parse_answer_letters(cell(cols.answer), item.option_labels());
  item.explanation = non_blank(cell(cols.explanation));
  item.meta = make_meta("cmexam", split);
  item.meta.subject = non_blank(cell(cols.subject));
  item.meta.disease_category = non_blank(cell(cols.disease));
  return item;
}

ExamItem cmexam_from_json(const ordered_json& row, std::size_t ordinal, std::string_view split) {
  Fields f(row);
  ExamItem item;
  item.id = non_blank(f.text("id")).value_or("cmexam-" + std::string(split) + "-" +
                                             std::to_string(ordinal));
  item.question = text::trim(f.text("question"));
  if (item.question.empty()) fail(ErrorCode::MalformedRow, "missing question stem");
  if (const auto* opts = f.find("options")) {
    item.options = options_from_json(*opts);
  } else {
    std::vector<std::string> texts;
    for (char c = 'a'; c <= 'e'; ++c) {
      const auto* v = f.find(std::string(1, c));
      if (!v) break;
      texts.push_back(json_text(*v));
    }
    item.options = options_from_letters(texts);
  }
  validate_options(item.options);
  item.answer = answer_from_json(f.require("answer"), item.option_labels());
  item.explanation = non_blank(f.text("explanation"));
  item.meta = make_meta("cmexam", split);
  if (const auto* meta = f.find("meta"); meta && meta->is_object()) {
    Fields m(*meta);
    item.meta.subject = non_blank(m.text("subject"));
    item.meta.disease_category = non_blank(m.text("diseasecategory"));
  } else {
    item.meta.subject = non_blank(f.text("subject"));
    if (!item.meta.subject) item.meta.subject = non_blank(f.text("clinicaldepartment"));
    item.meta.disease_category = non_blank(f.text("diseasecategory"));
    if (!item.meta.disease_category) item.meta.disease_category = non_blank(f.text("diseasegroup"));
  }
  return item;
}

template <typename Fn>
ParseReport<ExamItem> parse_json_rows(const std::filesystem::path& path, ParseMode mode,
                                      Fn&& to_item) {
  Collector<ExamItem> collector(mode, path.string());
  std::size_t ordinal = 0;
  for (auto& line : parse_jsonl(read_text_file(path), true)) {
    ++ordinal;
    if (!line.error.empty()) {
      collector.error(line.line, ErrorCode::MalformedRow, "invalid JSON: " + line.error);
      continue;
    }
    collector.row(line.line, [&] { return to_item(line.value, ordinal); });
  }
  return collector.finish();
}

}  // namespace

ParseReport<ExamItem> parse_cmexam(const std::filesystem::path& path, std::string_view split,
                                   ParseMode mode) {
  if (is_json_path(path)) {
    return parse_json_rows(path, mode, [&](const ordered_json& row, std::size_t ordinal) {
      return cmexam_from_json(row, ordinal, split);
    });
  }
  const char delimiter = normalize_key(path.extension().string()) == ".tsv" ? '\t' : ',';
  const auto records = detail::parse_csv(read_text_file(path), delimiter);
  if (records.empty()) fail(ErrorCode::SchemaMismatch, "'" + path.string() + "' has no header");
  const CmexamColumns cols = resolve_cmexam_header(records.front().fields);
  Collector<ExamItem> collector(mode, path.string());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    if (!std::all_of(fields.begin(), fields.end(),
                     [](const std::string& f) { return text::is_valid_utf8(f); })) {
      collector.error(records[r].line, ErrorCode::MalformedRow, "invalid UTF-8");
      continue;
    }
    collector.row(records[r].line,
                  [&] { return cmexam_from_record(cols, records[r].fields, r, split); });
  }
  return collector.finish();
}

std::string_view to_string(ChoiceSchema schema) noexcept {
  switch (schema) {
    case ChoiceSchema::medqa: return "medqa";
    case ChoiceSchema::medmcqa: return "medmcqa";
    case ChoiceSchema::mmlu: return "mmlu";
    case ChoiceSchema::cmmlu: return "cmmlu";
  }
  return "medqa";
}

std::optional<ChoiceSchema> choice_schema_from_string(std::string_view name) noexcept {
  for (auto s : {ChoiceSchema::medqa, ChoiceSchema::medmcqa, ChoiceSchema::mmlu,
                 ChoiceSchema::cmmlu}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

ParseReport<ExamItem> parse_choice_dataset(const std::filesystem::path& path,
                                           ChoiceSchema schema, std::string_view split,
                                           ParseMode mode) {
  const std::string split_str(split);
  switch (schema) {
    case ChoiceSchema::medqa:
      return parse_json_rows(path, mode, [&](const ordered_json& row, std::size_t ordinal) {
        Fields f(row);
        ExamItem item;
        item.id = non_blank(f.text("id")).value_or("medqa-" + split_str + "-" +
                                                   std::to_string(ordinal));
        item.question = text::trim(json_text(f.require("question")));
        const auto& opts = f.require("options");
        if (!opts.is_object()) fail(ErrorCode::SchemaMismatch, "medqa options must be an object");
        item.options = options_from_json(opts);
        validate_options(item.options);
        if (const auto* idx = f.find("answeridx")) {
          item.answer = parse_answer_letters(json_text(*idx), item.option_labels());
        } else {
          const std::string answer_text = text::trim(f.text("answer"));
          for (const auto& option : item.options) {
            if (option.text == answer_text) item.answer.insert(option.label);
          }
          if (item.answer.size() != 1) {
            fail(ErrorCode::UnknownLabel, "answer text matches no single option");
          }
        }
        item.meta = make_meta("medqa", split);
        item.meta.subject = non_blank(f.text("metainfo"));
        return item;
      });
    case ChoiceSchema::medmcqa:
      return parse_json_rows(path, mode, [&](const ordered_json& row, std::size_t ordinal) {
        Fields f(row);
        ExamItem item;
        item.id = non_blank(f.text("id")).value_or("medmcqa-" + split_str + "-" +
                                                   std::to_string(ordinal));
        item.question = text::trim(json_text(f.require("question")));
        for (char c : {'a', 'b', 'c', 'd'}) {
          const std::string key = std::string("op") + c;
          item.options.push_back({static_cast<char>(c - 'a' + 'A'),
                                  text::trim(json_text(f.require(key)))});
        }
        validate_options(item.options);
        const auto& cop = f.require("cop");
        if (!cop.is_number_integer()) fail(ErrorCode::MalformedRow, "cop must be an integer");
        const auto index = cop.get<std::int64_t>();
        if (index < 1 || index > 4) {
          fail(ErrorCode::UnknownLabel, "cop " + std::to_string(index) + " outside 1..4");
        }
        item.answer.insert(static_cast<char>('A' + index - 1));
        item.explanation = non_blank(f.text("exp"));
        item.meta = make_meta("medmcqa", split);
        item.meta.subject = non_blank(f.text("subjectname"));
        return item;
      });
    case ChoiceSchema::mmlu: {
      const std::string subject = subject_from_filename(path);
      const auto records = detail::parse_csv(read_text_file(path));
      Collector<ExamItem> collector(mode, path.string());
      std::size_t ordinal = 0;
      for (const auto& rec : records) {
        ++ordinal;
        collector.row(rec.line, [&] {
          if (rec.fields.size() != 6) {
            fail(ErrorCode::SchemaMismatch,
                 "expected 6 columns (question,A,B,C,D,answer), got " +
                     std::to_string(rec.fields.size()));
          }
          ExamItem item;
          item.id = "mmlu-" + subject + "-" + split_str + "-" + std::to_string(ordinal);
          item.question = text::trim(rec.fields[0]);
          item.options = options_from_letters({rec.fields.begin() + 1, rec.fields.begin() + 5});
          if (item.options.size() != 4) fail(ErrorCode::MalformedRow, "blank option");
          validate_options(item.options);
          item.answer = parse_answer_letters(rec.fields[5], item.option_labels());
          item.meta = make_meta("mmlu", split);
          item.meta.subject = subject;
          return item;
        });
      }
      return collector.finish();
    }
    case ChoiceSchema::cmmlu: {
      const std::string subject = subject_from_filename(path);
      const auto records = detail::parse_csv(read_text_file(path));
      if (records.empty()) fail(ErrorCode::SchemaMismatch, "'" + path.string() + "' is empty");
      const auto& header = records.front().fields;
      std::vector<std::string> keys;
      for (const auto& h : header) keys.push_back(normalize_key(h));
      const std::vector<std::string> expected{"", "question", "a", "b", "c", "d", "answer"};
      if (keys != expected) {
        fail(ErrorCode::SchemaMismatch, "CMMLU header must be ',Question,A,B,C,D,Answer'");
      }
      Collector<ExamItem> collector(mode, path.string());
      for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        collector.row(rec.line, [&] {
          if (rec.fields.size() != 7) {
            fail(ErrorCode::SchemaMismatch,
                 "expected 7 columns, got " + std::to_string(rec.fields.size()));
          }
          ExamItem item;
          item.id = "cmmlu-" + subject + "-" +
                    non_blank(rec.fields[0]).value_or(std::to_string(r));
          item.question = text::trim(rec.fields[1]);
          item.options = options_from_letters({rec.fields.begin() + 2, rec.fields.begin() + 6});
          if (item.options.size() != 4) fail(ErrorCode::MalformedRow, "blank option");
          validate_options(item.options);
          item.answer = parse_answer_letters(rec.fields[6], item.option_labels());
          item.meta = make_meta("cmmlu", split);
          item.meta.subject = subject;
          return item;
        });
      }
      return collector.finish();
    }
  }
  fail(ErrorCode::SchemaMismatch, "unknown schema");
}

// Canonical JSONL --------------------------------------------------------------

namespace {
ordered_json optional_json(const std::optional<std::string>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}
std::optional<std::string> optional_string(const ordered_json& object, const char* key) {
  if (!object.contains(key) || object.at(key).is_null()) return std::nullopt;
  return object.at(key).get<std::string>();
}
}  // namespace

ordered_json to_json(const ExamItem& item) {
  ordered_json options = ordered_json::array();
  for (const auto& option : item.options) {
    options.push_back({{"label", std::string(1, option.label)}, {"text", option.text}});
  }
  ordered_json answer = ordered_json::array();
  for (char c : item.answer.labels()) answer.push_back(std::string(1, c));
  return ordered_json{
      {"id", item.id},
      {"question", item.question},
      {"options", std::move(options)},
      {"answer", std::move(answer)},
      {"explanation", optional_json(item.explanation)},
      {"meta",
       {{"source", item.meta.source},
        {"split", item.meta.split},
        {"subject", optional_json(item.meta.subject)},
        {"disease_category", optional_json(item.meta.disease_category)}}},
  };
}

ExamItem exam_item_from_json(const ordered_json& value) {
  ExamItem item;
  try {
    item.id = value.at("id").get<std::string>();
    item.question = value.at("question").get<std::string>();
    for (const auto& entry : value.at("options")) {
      const auto label = entry.at("label").get<std::string>();
      if (label.size() != 1) fail(ErrorCode::MalformedRow, "bad option label '" + label + "'");
      item.options.push_back({label[0], entry.at("text").get<std::string>()});
    }
    for (const auto& label : value.at("answer")) {
      const auto s = label.get<std::string>();
      if (s.size() != 1 || !LabelSet::is_label(s[0])) {
        fail(ErrorCode::UnknownLabel, "bad answer label '" + s + "'");
      }
      item.answer.insert(s[0]);
    }
    item.explanation = optional_string(value, "explanation");
    const auto& meta = value.at("meta");
    item.meta.source = meta.at("source").get<std::string>();
    item.meta.split = meta.at("split").get<std::string>();
    item.meta.subject = optional_string(meta, "subject");
    item.meta.disease_category = optional_string(meta, "disease_category");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("canonical item: ") + e.what());
  }
  validate(item);
  return item;
}

std::string items_to_jsonl(std::span<const ExamItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += dump_compact(to_json(item));
    out += '\n';
  }
  return out;
}

std::vector<ExamItem> items_from_jsonl(std::string_view content) {
  std::vector<ExamItem> items;
  std::unordered_set<std::string> ids;
  for (const auto& line : parse_jsonl(content)) {
    try {
      items.push_back(exam_item_from_json(line.value));
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line.line) + ": " + e.what());
    }
    if (!ids.insert(items.back().id).second) {
      fail(ErrorCode::DuplicateId, "line " + std::to_string(line.line) + ": duplicate id '" +
                                       items.back().id + "'");
    }
  }
  return items;
}

std::vector<ExamItem> read_items_jsonl(const std::filesystem::path& path) {
  return items_from_jsonl(read_text_file(path));
}

void write_items_jsonl(const std::filesystem::path& path, std::span<const ExamItem> items) {
  write_text_file(path, items_to_jsonl(items));
}

// Alpaca -------------------------------------------------------------------------

std::string_view to_string(AlpacaMode mode) noexcept {
  return mode == AlpacaMode::answer_only ? "answer_only" : "with_reasoning";
}

std::optional<AlpacaMode> alpaca_mode_from_string(std::string_view name) noexcept {
  if (name == "answer_only") return AlpacaMode::answer_only;
  if (name == "with_reasoning") return AlpacaMode::with_reasoning;
  return std::nullopt;
}

std::string_view instruction_template(std::string_view template_id) {
  if (template_id == kExamTemplateId) {
    return "以下是一道中国医学考试单选/多选题，请从选项中选出正确答案。";
  }
  fail(ErrorCode::UnknownTemplate, "unknown instruction template '" + std::string(template_id) + "'");
}

std::string render_exam_input(const ExamItem& item) {
  std::string out = item.question;
  for (const auto& option : item.options) {
    out += '\n';
    out += option.label;
    out += ". ";
    out += text::single_line(option.text);
  }
  return out;
}

std::string render_exam_output(const ExamItem& item, AlpacaMode mode) {
  std::string out = item.answer.to_string();
  if (mode == AlpacaMode::with_reasoning && item.has_explanation()) {
    out += "。";
    out += text::trim(*item.explanation);
  }
  return out;
}

std::vector<InstructionExample> to_alpaca(std::span<const ExamItem> items, AlpacaMode mode,
                                          std::string_view template_id) {
  const std::string_view instruction = instruction_template(template_id);
  if (items.empty()) fail(ErrorCode::EmptyInput, "no items to convert");
  std::vector<InstructionExample> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    validate(item);
    out.push_back({std::string(instruction), render_exam_input(item),
                   render_exam_output(item, mode)});
  }
  return out;
}

ordered_json to_json(const InstructionExample& example) {
  return {{"instruction", example.instruction},
          {"input", example.input},
          {"output", example.output}};
}

InstructionExample instruction_example_from_json(const ordered_json& value) {
  InstructionExample example;
  try {
    example.instruction = value.at("instruction").get<std::string>();
    example.input = value.contains("input") ? value.at("input").get<std::string>() : "";
    example.output = value.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("alpaca example: ") + e.what());
  }
  validate(example);
  return example;
}

std::string alpaca_to_json(std::span<const InstructionExample> examples) {
  ordered_json array = ordered_json::array();
  for (const auto& e : examples) array.push_back(to_json(e));
  return dump_pretty(array) + "\n";
}

std::vector<InstructionExample> alpaca_from_json(std::string_view content) {
  ordered_json array;
  try {
    array = ordered_json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::MalformedRow, std::string("alpaca file: ") + e.what());
  }
  if (!array.is_array()) fail(ErrorCode::SchemaMismatch, "alpaca file must hold a JSON array");
  std::vector<InstructionExample> out;
  out.reserve(array.size());
  for (const auto& v : array) out.push_back(instruction_example_from_json(v));
  return out;
}

// Corpus ---------------------------------------------------------------------------

std::size_t heuristic_tokens(std::string_view utf8) {
  std::size_t tokens = 0;
  bool in_word = false;
  for (char32_t c : text::decode(utf8)) {
    if (text::is_cjk(c)) {
      ++tokens;
      in_word = false;
    } else if (text::is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      ++tokens;
      in_word = true;
    }
  }
  return tokens;
}

CorpusDoc make_doc(std::string id, std::string doc_text, std::string source) {
  CorpusDoc doc;
  doc.id = std::move(id);
  doc.char_count = text::decode(doc_text).size();
  doc.approx_tokens = heuristic_tokens(doc_text);
  doc.text = std::move(doc_text);
  doc.source = std::move(source);
  return doc;
}

ParseReport<CorpusDoc> to_pretrain_corpus(std::span<const QaPair> pairs,
                                          std::string_view layout, ParseMode mode) {
  std::string prefix_q, separator;
  if (layout == "qa-newline") {
    separator = "\n";
  } else if (layout == "qa-labeled") {
    prefix_q = "问：";
    separator = "\n答：";
  } else {
    fail(ErrorCode::UnknownLayout, "unknown corpus layout '" + std::string(layout) + "'");
  }
  if (pairs.empty()) fail(ErrorCode::EmptyInput, "no question-answer pairs");

  Collector<CorpusDoc> collector(mode, "qa pairs");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    collector.row(i + 1, [&] {
      const auto& pair = pairs[i];
      if (is_blank(pair.question)) fail(ErrorCode::EmptyInput, "empty question");
      if (is_blank(pair.answer)) fail(ErrorCode::EmptyInput, "empty answer");
      std::string id = pair.id.empty() ? "doc-" + std::to_string(i) : pair.id;
      return make_doc(std::move(id), prefix_q + pair.question + separator + pair.answer,
                      pair.source);
    });
  }
  return collector.finish();
}

ParseReport<QaPair> read_qa_jsonl(const std::filesystem::path& path, ParseMode mode) {
  Collector<QaPair> collector(mode, path.string());
  for (auto& line : parse_jsonl(read_text_file(path), true)) {
    if (!line.error.empty()) {
      collector.error(line.line, ErrorCode::MalformedRow, "invalid JSON: " + line.error);
      continue;
    }
    collector.row(line.line, [&] {
      Fields f(line.value);
      QaPair pair;
      pair.id = f.text("id");
      pair.question = json_text(f.require("question"));
      pair.answer = json_text(f.require("answer"));
      if (auto source = non_blank(f.text("source"))) pair.source = *source;
      return pair;
    });
  }
  return collector.finish();
}

std::string docs_to_jsonl(std::span<const CorpusDoc> docs) {
  std::string out;
  for (const auto& doc : docs) {
    out += dump_compact(ordered_json{{"id", doc.id}, {"text", doc.text}});
    out += '\n';
  }
  return out;
}

std::vector<CorpusDoc> docs_from_jsonl(std::string_view content) {
  std::vector<CorpusDoc> docs;
  for (const auto& line : parse_jsonl(content)) {
    try {
      const auto& v = line.value;
      CorpusDoc doc = make_doc(v.at("id").get<std::string>(), v.at("text").get<std::string>(),
                               v.value("source", std::string("corpus")));
      if (v.contains("approx_tokens")) doc.approx_tokens = v.at("approx_tokens").get<std::size_t>();
      docs.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::SchemaMismatch, "line " + std::to_string(line.line) + ": " + e.what());
    }
  }
  return docs;
}

DatasetStats& DatasetStats::operator+=(const DatasetStats& other) {
  n_docs += other.n_docs;
  total_chars += other.total_chars;
  total_approx_tokens += other.total_approx_tokens;
  for (const auto& [source, counts] : other.per_source) {
    auto& mine = per_source[source];
    mine.n_docs += counts.n_docs;
    mine.total_chars += counts.total_chars;
    mine.total_approx_tokens += counts.total_approx_tokens;
  }
  return *this;
}

DatasetStats corpus_stats(std::span<const CorpusDoc> docs, TokenMode token_mode) {
  DatasetStats stats;
  for (const auto& doc : docs) {
    const std::size_t chars = text::decode(doc.text).size();
    const std::size_t tokens =
        token_mode == TokenMode::heuristic ? heuristic_tokens(doc.text) : doc.approx_tokens;
    ++stats.n_docs;
    stats.total_chars += chars;
    stats.total_approx_tokens += tokens;
    auto& per = stats.per_source[doc.source];
    ++per.n_docs;
    per.total_chars += chars;
    per.total_approx_tokens += tokens;
  }
  return stats;
}

ordered_json to_json(const DatasetStats& stats) {
  ordered_json per_source = ordered_json::object();
  for (const auto& [source, c] : stats.per_source) {
    per_source[source] = {{"n_docs", c.n_docs},
                          {"total_chars", c.total_chars},
                          {"total_approx_tokens", c.total_approx_tokens}};
  }
  return {{"n_docs", stats.n_docs},
          {"total_chars", stats.total_chars},
          {"total_approx_tokens", stats.total_approx_tokens},
          {"per_source", std::move(per_source)}};
}

// Mixing -------------------------------------------------------------------------------

namespace {
/// Uniform draw in [0, bound] by rejection; std::uniform_int_distribution is
/// not specified bit-for-bit across standard libraries.
std::uint64_t draw_inclusive(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t range = bound + 1;
  if (range == 0) return rng();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}
}  // namespace

MixResult mix(std::span<const TaggedExamples> datasets, std::uint64_t seed) {
  if (datasets.empty()) fail(ErrorCode::EmptyInput, "no datasets to mix");
  MixResult result;
  for (const auto& dataset : datasets) {
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
      result.examples.push_back(dataset.examples[i]);
      result.audit.push_back({dataset.tag, i});
    }
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = result.examples.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(draw_inclusive(rng, i - 1));
    std::swap(result.examples[i - 1], result.examples[j]);
    std::swap(result.audit[i - 1], result.audit[j]);
  }
  return result;
}

std::string audit_to_jsonl(const MixResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.audit.size(); ++i) {
    out += dump_compact(ordered_json{{"index", i},
                                     {"source", result.audit[i].source},
                                     {"source_index", result.audit[i].source_index}});
    out += '\n';
  }
  return out;
}

}  // namespace medharness
