#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medharness/error.hpp"
#include "medharness/jsonio.hpp"
#include "medharness/types.hpp"

namespace medharness {

enum class ParseMode { strict, lenient };

struct RowError {
  std::size_t row = 0;  // 1-based line in the source file
  ErrorCode code = ErrorCode::MalformedRow;
  std::string message;
};

template <typename T>
struct ParseReport {
  std::vector<T> items;
  /// Rows skipped under ParseMode::lenient. Always empty in strict mode,
  /// which throws instead.
  std::vector<RowError> errors;
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

/// Reads CMExam exports. `.jsonl`/`.json` files are JSON lines, `.tsv` is
/// tab-separated, anything else is CSV with a header row. Options come either
/// from per-letter columns A..E or from one "Options" column holding lines
/// like "A 选项文本". Answers may be written "ABD", "A,B,D" or "A、B、D".
ParseReport<ExamItem> parse_cmexam(const std::filesystem::path& path,
                                   std::string_view split,
                                   ParseMode mode = ParseMode::strict);

enum class ChoiceSchema { medqa, medmcqa, mmlu, cmmlu };

std::string_view to_string(ChoiceSchema schema) noexcept;
std::optional<ChoiceSchema> choice_schema_from_string(std::string_view name) noexcept;

/// Importers for the published layouts:
///  - medqa: JSON lines with `question`, `options` {"A": ...}, `answer_idx`.
///  - medmcqa: JSON lines with `opa`..`opd` and `cop`, a 1-based index of the
///    correct option (cop=2 means B), as in the original MedMCQA release.
///  - mmlu: header-less CSV `question,A,B,C,D,answer`; the subject comes from
///    the file name (`anatomy_test.csv` -> "anatomy").
///  - cmmlu: CSV with header `,Question,A,B,C,D,Answer`; subject from the file
///    name.
ParseReport<ExamItem> parse_choice_dataset(const std::filesystem::path& path,
                                           ChoiceSchema schema, std::string_view split,
                                           ParseMode mode = ParseMode::strict);

// Canonical ExamItem JSON lines.
ordered_json to_json(const ExamItem& item);
ExamItem exam_item_from_json(const ordered_json& value);
std::string items_to_jsonl(std::span<const ExamItem> items);
std::vector<ExamItem> items_from_jsonl(std::string_view content);
std::vector<ExamItem> read_items_jsonl(const std::filesystem::path& path);
void write_items_jsonl(const std::filesystem::path& path, std::span<const ExamItem> items);

// ---------------------------------------------------------------------------
// Alpaca conversion
// ---------------------------------------------------------------------------

enum class AlpacaMode { answer_only, with_reasoning };

std::string_view to_string(AlpacaMode mode) noexcept;
std::optional<AlpacaMode> alpaca_mode_from_string(std::string_view name) noexcept;

inline constexpr std::string_view kExamTemplateId = "cmexam-zh-v1";

/// Instruction text for a conversion template; throws UnknownTemplate.
std::string_view instruction_template(std::string_view template_id);

/// Question followed by one "L. text" line per option; option texts are
/// flattened to a single line.
std::string render_exam_input(const ExamItem& item);

/// Answer letters, or in with_reasoning mode letters + "。" + explanation
/// (answer-only when the item has no explanation).
std::string render_exam_output(const ExamItem& item, AlpacaMode mode);

std::vector<InstructionExample> to_alpaca(std::span<const ExamItem> items, AlpacaMode mode,
                                          std::string_view template_id = kExamTemplateId);

ordered_json to_json(const InstructionExample& example);
InstructionExample instruction_example_from_json(const ordered_json& value);
/// Alpaca files are one JSON array of {"instruction","input","output"}.
std::string alpaca_to_json(std::span<const InstructionExample> examples);
std::vector<InstructionExample> alpaca_from_json(std::string_view content);

// ---------------------------------------------------------------------------
// Continual-pretraining corpus
// ---------------------------------------------------------------------------

struct QaPair {
  std::string id;  // optional; generated when empty
  std::string question;
  std::string answer;
  std::string source = "corpus";
};

struct CorpusDoc {
  std::string id;
  std::string text;
  std::string source = "corpus";
  std::size_t char_count = 0;
  std::size_t approx_tokens = 0;

  bool operator==(const CorpusDoc&) const = default;
};

/// Builds a doc, filling char_count and the heuristic token estimate.
CorpusDoc make_doc(std::string id, std::string text, std::string source = "corpus");

/// Layouts: "qa-newline" (question, newline, answer) and "qa-labeled"
/// ("问：" question, newline, "答：" answer).
ParseReport<CorpusDoc> to_pretrain_corpus(std::span<const QaPair> pairs,
                                          std::string_view layout = "qa-newline",
                                          ParseMode mode = ParseMode::strict);

/// Count of CJK scalars plus maximal runs of other non-space scalars.
std::size_t heuristic_tokens(std::string_view text);

ParseReport<QaPair> read_qa_jsonl(const std::filesystem::path& path,
                                  ParseMode mode = ParseMode::strict);

/// Docs as `{"id","text"}` lines. Reading also accepts optional "source" and
/// "approx_tokens" (an externally computed count).
std::string docs_to_jsonl(std::span<const CorpusDoc> docs);
std::vector<CorpusDoc> docs_from_jsonl(std::string_view content);

struct SourceCounts {
  std::size_t n_docs = 0;
  std::size_t total_chars = 0;
  std::size_t total_approx_tokens = 0;

  bool operator==(const SourceCounts&) const = default;
};

struct DatasetStats {
  std::size_t n_docs = 0;
  std::size_t total_chars = 0;
  std::size_t total_approx_tokens = 0;
  std::map<std::string, SourceCounts> per_source;

  DatasetStats& operator+=(const DatasetStats& other);
  bool operator==(const DatasetStats&) const = default;
};

enum class TokenMode { heuristic, external };

/// `heuristic` recounts tokens from the text; `external` trusts each doc's
/// approx_tokens as supplied.
DatasetStats corpus_stats(std::span<const CorpusDoc> docs,
                          TokenMode token_mode = TokenMode::heuristic);

ordered_json to_json(const DatasetStats& stats);

// ---------------------------------------------------------------------------
// Dataset mixing
// ---------------------------------------------------------------------------

struct TaggedExamples {
  std::string tag;
  std::vector<InstructionExample> examples;
};

struct MixEntry {
  std::string source;
  std::size_t source_index = 0;

  bool operator==(const MixEntry&) const = default;
};

struct MixResult {
  std::vector<InstructionExample> examples;
  /// audit[i] names where examples[i] came from.
  std::vector<MixEntry> audit;
};

/// Concatenates the datasets and applies a seeded Fisher-Yates shuffle
/// (mt19937_64 with rejection sampling, so the order is identical on every
/// platform).
MixResult mix(std::span<const TaggedExamples> datasets, std::uint64_t seed);

std::string audit_to_jsonl(const MixResult& result);

}  // namespace medharness
