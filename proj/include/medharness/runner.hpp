#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medharness/inference.hpp"
#include "medharness/jsonio.hpp"
#include "medharness/metrics.hpp"

namespace medharness {

inline constexpr std::string_view kHarnessVersion = "0.1.0";

/// fuzzy: three-tier recovery for base models; hard: strict letter match for
/// fine-tuned models.
enum class ExtractionMode { fuzzy, hard };

std::string_view to_string(ExtractionMode mode) noexcept;
std::optional<ExtractionMode> extraction_mode_from_string(std::string_view name) noexcept;

struct RunConfig {
  std::filesystem::path dataset_path;
  /// cmexam, canonical (ExamItem JSONL), medqa, medmcqa, mmlu or cmmlu.
  std::string schema = "cmexam";
  std::string split = "test";
  /// Name used in reports; defaults to the schema.
  std::string dataset_name;
  /// Solved dev items used as k-shot exemplars.
  std::filesystem::path fewshot_path;
  /// Schema of fewshot_path; defaults to `schema`.
  std::string fewshot_schema;
  std::string template_id = "cmexam-zh-v1";
  ExtractionMode extraction = ExtractionMode::fuzzy;
  bool hard_strict = false;
  EndpointConfig endpoint;
  DecodeParams decode;
  int shots = 0;
  /// Permits shot counts other than 0 and 5.
  bool allow_any_shots = false;
  std::filesystem::path output_dir = "runs/default";
  /// Defaults to {output_dir}/cache.
  std::filesystem::path cache_dir;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> checkpoint;
  /// Model name for reports; defaults to endpoint.model_name.
  std::string model_label;
  bool lenient = false;

  void validate() const;
  std::string effective_dataset_name() const;
  std::string effective_model_label() const;
  std::filesystem::path effective_cache_dir() const;
};

/// Config echo. Never contains the auth token.
ordered_json to_json(const RunConfig& config);

/// Stable across processes; changes whenever any echoed field changes.
std::string run_id(const RunConfig& config);

/// Reads nested sections [dataset] [prompt] [extraction] [endpoint] [decode]
/// [run]. Relative paths resolve against `base_dir`.
RunConfig run_config_from_json(const ordered_json& value, const std::filesystem::path& base_dir);

/// `.json` files are JSON, anything else the TOML subset. The auth token is
/// taken from MEDHARNESS_API_KEY.
RunConfig load_run_config(const std::filesystem::path& path);

struct RunResult {
  std::string run_id;
  std::filesystem::path predictions_path;
  std::filesystem::path report_path;
  std::filesystem::path manifest_path;
  MetricReport report;
  double duration_s = 0.0;
  std::string harness_version{kHarnessVersion};
  std::vector<std::string> failed_ids;

  bool partial() const noexcept { return !failed_ids.empty(); }
};

/// Loads items, renders prompts, queries the endpoint (cache first), extracts
/// answers, scores, and writes manifest.json, predictions.jsonl and
/// report.json under output_dir. The manifest is written before anything
/// else and rewritten at the end. Throws RunFailed when every item failed
/// to get a response, RunLocked when another run holds the directory.
RunResult run_eval(const RunConfig& config);

// Exam items for a config's dataset/schema.
std::vector<ExamItem> load_items(const std::filesystem::path& path, std::string_view schema,
                                 std::string_view split, bool lenient);

ordered_json prediction_to_json(const Prediction& prediction);
Prediction prediction_from_json(const ordered_json& value);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class ReportFormat { json, csv, markdown };

std::string_view to_string(ReportFormat format) noexcept;
std::optional<ReportFormat> report_format_from_string(std::string_view name) noexcept;

/// One row per report: Model | Checkpoint | Dataset | N | Acc | F1.
std::string render_run_reports(std::span<const MetricReport> reports, ReportFormat format);

/// Checkpoint table Model | Checkpoint | CMExam Acc | CMExam F1 | MMLU Acc |
/// CMMLU Acc at one decimal, followed in Markdown by the flagged deltas.
std::string render_series(std::span<const CheckpointSeries> series, ReportFormat format);

void emit_report(std::span<const MetricReport> reports, ReportFormat format,
                 const std::filesystem::path& out);
void emit_report(std::span<const CheckpointSeries> series, ReportFormat format,
                 const std::filesystem::path& out);

/// Groups reports whose dataset is "cmexam", "mmlu" or "cmmlu" by model and
/// checkpoint (missing checkpoint counts as 0) into one series per model.
std::vector<CheckpointSeries> series_from_reports(
    std::span<const MetricReport> reports,
    double threshold_pts = kDefaultForgettingThresholdPts);

// ---------------------------------------------------------------------------
// Training configs for external trainers
// ---------------------------------------------------------------------------

enum class TrainStage { continual, finetune };

std::string_view to_string(TrainStage stage) noexcept;
std::optional<TrainStage> train_stage_from_string(std::string_view name) noexcept;

struct TrainConfigSpec {
  TrainStage stage = TrainStage::continual;
  double learning_rate = 2e-5;
  int batch_size = 120;
  int max_seq_length = 4096;
  int epochs = 1;
  double warmup_ratio = 0.03;
  std::string precision = "fp16";
  bool gradient_checkpointing = true;
  std::string optimizer = "adafactor";
  std::string sharding = "fsdp";

  void validate() const;
};

/// Flat `key = value` lines in TrainConfigSpec field order.
std::string render_train_config(const TrainConfigSpec& spec);
void emit_train_config(const TrainConfigSpec& spec, const std::filesystem::path& path);

/// Shortest round-trip decimal with a compact exponent ("2e-5", "0.03").
std::string format_number(double value);

}  // namespace medharness
