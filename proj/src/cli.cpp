#include "medharness/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

#include "medharness/corpus.hpp"
#include "medharness/error.hpp"
#include "medharness/log.hpp"
#include "medharness/runner.hpp"

namespace medharness::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSchemas{"cmexam", "medqa", "medmcqa", "mmlu", "cmmlu"};

struct IngestArgs {
  std::string schema = "cmexam";
  fs::path in, out;
  std::string split = "test";
  bool lenient = false;
};

struct ConvertArgs {
  std::string to = "alpaca";
  fs::path in, out;
  std::string mode = "answer_only";
  std::string template_id{kExamTemplateId};
  std::string layout = "qa-newline";
  bool lenient = false;
};

struct MixArgs {
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  fs::path out, audit;
};

struct StatsArgs {
  std::vector<fs::path> inputs;
  std::string token_mode = "heuristic";
  fs::path out;
};

// Optional flag values for eval; set ones override the config file.
struct EvalArgs {
  fs::path config;
  std::optional<std::string> dataset, schema, split, dataset_name, fewshot, fewshot_schema,
      template_id, extraction,
      base_url, api_style, model, model_label, out_dir, cache_dir;
  std::optional<int> shots, parallelism, max_retries, max_new_tokens;
  std::optional<std::int64_t> checkpoint, timeout_ms;
  std::optional<double> temperature;
  std::optional<std::uint64_t> seed;
  bool hard_strict = false, allow_any_shots = false, lenient = false;
};

struct ReportArgs {
  std::vector<fs::path> inputs;
  std::string format = "markdown";
  fs::path out;
  bool series = false;
  double threshold = kDefaultForgettingThresholdPts;
};

struct TrainArgs {
  fs::path out;
  std::string stage = "continual";
  TrainConfigSpec spec;
};

void run_ingest(const IngestArgs& a, std::ostream& out) {
  auto items = load_items(a.in, a.schema, a.split, a.lenient);
  write_items_jsonl(a.out, items);
  log::info("ingested", {{"items", items.size()}, {"out", a.out.string()}});
  out << items.size() << " items -> " << a.out.string() << "\n";
}

void run_convert(const ConvertArgs& a, std::ostream& out) {
  const ParseMode mode = a.lenient ? ParseMode::lenient : ParseMode::strict;
  if (a.to == "alpaca") {
    const auto alpaca_mode = alpaca_mode_from_string(a.mode);
    if (!alpaca_mode) fail(ErrorCode::InvalidConfig, "--mode must be answer_only or with_reasoning");
    const auto items = read_items_jsonl(a.in);
    const auto examples = to_alpaca(items, *alpaca_mode, a.template_id);
    write_text_file(a.out, alpaca_to_json(examples));
    log::info("converted", {{"to", "alpaca"}, {"count", examples.size()}, {"mode", a.mode}});
    out << examples.size() << " examples -> " << a.out.string() << "\n";
    return;
  }
  const auto pairs = read_qa_jsonl(a.in, mode);
  for (const auto& e : pairs.errors) log::warn("row_skipped", {{"row", e.row}, {"error", e.message}});
  const auto docs = to_pretrain_corpus(pairs.items, a.layout, mode);
  for (const auto& e : docs.errors) log::warn("row_skipped", {{"row", e.row}, {"error", e.message}});
  write_text_file(a.out, docs_to_jsonl(docs.items));
  log::info("converted", {{"to", "corpus"}, {"count", docs.items.size()}, {"layout", a.layout}});
  out << docs.items.size() << " docs -> " << a.out.string() << "\n";
}

void run_mix(const MixArgs& a, std::ostream& out) {
  std::vector<TaggedExamples> sets;
  for (const auto& spec : a.inputs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      fail(ErrorCode::InvalidConfig, "--in expects tag=path, got '" + spec + "'");
    }
    sets.push_back({spec.substr(0, eq), alpaca_from_json(read_text_file(spec.substr(eq + 1)))});
  }
  const auto mixed = mix(sets, a.seed);
  write_text_file(a.out, alpaca_to_json(mixed.examples));
  if (!a.audit.empty()) write_text_file(a.audit, audit_to_jsonl(mixed));
  log::info("mixed", {{"count", mixed.examples.size()}, {"seed", a.seed}});
  out << mixed.examples.size() << " examples -> " << a.out.string() << "\n";
}

void run_stats(const StatsArgs& a, std::ostream& out) {
  const TokenMode mode = a.token_mode == "external" ? TokenMode::external : TokenMode::heuristic;
  DatasetStats total;
  for (const auto& path : a.inputs) {
    const auto docs = docs_from_jsonl(read_text_file(path));
    total += corpus_stats(docs, mode);
  }
  const std::string text = dump_pretty(to_json(total)) + "\n";
  if (!a.out.empty()) write_text_file(a.out, text);
  out << text;
}

RunConfig eval_config(const EvalArgs& a) {
  RunConfig c;
  if (!a.config.empty()) {
    c = load_run_config(a.config);
  } else {
    c.endpoint.auth_token = EndpointConfig::token_from_env();
  }
  if (a.dataset) c.dataset_path = *a.dataset;
  if (a.schema) c.schema = *a.schema;
  if (a.split) c.split = *a.split;
  if (a.dataset_name) c.dataset_name = *a.dataset_name;
  if (a.fewshot) c.fewshot_path = *a.fewshot;
  if (a.fewshot_schema) c.fewshot_schema = *a.fewshot_schema;
  if (a.template_id) c.template_id = *a.template_id;
  if (a.extraction) c.extraction = *extraction_mode_from_string(*a.extraction);
  if (a.hard_strict) c.hard_strict = true;
  if (a.allow_any_shots) c.allow_any_shots = true;
  if (a.lenient) c.lenient = true;
  if (a.shots) c.shots = *a.shots;
  if (a.seed) c.seed = *a.seed;
  if (a.base_url) c.endpoint.base_url = *a.base_url;
  if (a.api_style) c.endpoint.api_style = *api_style_from_string(*a.api_style);
  if (a.model) c.endpoint.model_name = *a.model;
  if (a.model_label) c.model_label = *a.model_label;
  if (a.parallelism) c.endpoint.parallelism = *a.parallelism;
  if (a.max_retries) c.endpoint.max_retries = *a.max_retries;
  if (a.timeout_ms) c.endpoint.timeout = std::chrono::milliseconds(*a.timeout_ms);
  if (a.max_new_tokens) c.decode.max_new_tokens = *a.max_new_tokens;
  if (a.temperature) c.decode.temperature = *a.temperature;
  if (a.checkpoint) c.checkpoint = *a.checkpoint;
  if (a.out_dir) c.output_dir = *a.out_dir;
  if (a.cache_dir) c.cache_dir = *a.cache_dir;
  return c;
}

int run_evaluation(const EvalArgs& a, std::ostream& out) {
  const auto result = run_eval(eval_config(a));
  ordered_json summary{{"run_id", result.run_id},
                       {"n", result.report.n},
                       {"accuracy", result.report.accuracy},
                       {"f1_weighted", result.report.f1_weighted},
                       {"failed", result.failed_ids.size()},
                       {"report", result.report_path.string()}};
  out << dump_compact(summary) << "\n";
  return result.partial() ? kPartial : kOk;
}

void run_report(const ReportArgs& a, std::ostream& out) {
  const auto format = *report_format_from_string(a.format);
  std::vector<MetricReport> reports;
  std::vector<CheckpointSeries> series;
  for (const auto& path : a.inputs) {
    ordered_json value;
    try {
      value = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
    }
    auto take = [&](const ordered_json& v) {
      if (v.is_object() && v.contains("points")) {
        series.push_back(checkpoint_series_from_json(v, a.threshold));
      } else {
        reports.push_back(metric_report_from_json(v));
      }
    };
    if (value.is_array()) {
      for (const auto& v : value) take(v);
    } else {
      take(value);
    }
  }
  if (a.series && !reports.empty()) {
    auto grouped = series_from_reports(reports, a.threshold);
    series.insert(series.end(), grouped.begin(), grouped.end());
    reports.clear();
  }
  if (!series.empty() && !reports.empty()) {
    fail(ErrorCode::InvalidConfig, "mixing run reports and checkpoint series; pass --series to group");
  }
  const std::string text =
      series.empty() ? render_run_reports(reports, format) : render_series(series, format);
  if (a.out.empty()) {
    out << text;
  } else {
    write_text_file(a.out, text);
    out << "report -> " << a.out.string() << "\n";
  }
}

void run_train_config(TrainArgs a, std::ostream& out) {
  a.spec.stage = *train_stage_from_string(a.stage);
  emit_train_config(a.spec, a.out);
  out << "train config -> " << a.out.string() << "\n";
}

int exit_code_for(const Error& e) { return is_validation_error(e.code()) ? kUsage : kRuntime; }

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Medical exam evaluation harness", "medharness"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_logs = false;
  std::string log_level = "info";
  app.add_flag("--json-logs", json_logs, "Emit logs as JSON lines");
  app.add_option("--log-level", log_level, "debug|info|warn|error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a raw dataset into canonical JSONL");
  ingest_cmd->add_option("--schema", ingest.schema)->check(CLI::IsMember(kSchemas));
  ingest_cmd->add_option("--in", ingest.in)->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest.out)->required();
  ingest_cmd->add_option("--split", ingest.split);
  ingest_cmd->add_flag("--lenient", ingest.lenient, "Skip bad rows instead of failing");

  ConvertArgs convert;
  auto* convert_cmd = app.add_subcommand("convert", "Canonical JSONL to Alpaca or pretraining corpus");
  convert_cmd->add_option("--to", convert.to)->check(CLI::IsMember({"alpaca", "corpus"}));
  convert_cmd->add_option("--in", convert.in)->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--out", convert.out)->required();
  convert_cmd->add_option("--mode", convert.mode)
      ->check(CLI::IsMember({"answer_only", "with_reasoning"}));
  convert_cmd->add_option("--template", convert.template_id);
  convert_cmd->add_option("--layout", convert.layout)->check(CLI::IsMember({"qa-newline", "qa-labeled"}));
  convert_cmd->add_flag("--lenient", convert.lenient);

  MixArgs mix_args;
  auto* mix_cmd = app.add_subcommand("mix", "Shuffle Alpaca datasets together");
  mix_cmd->add_option("--in", mix_args.inputs, "tag=path, repeatable")->required();
  mix_cmd->add_option("--seed", mix_args.seed);
  mix_cmd->add_option("--out", mix_args.out)->required();
  mix_cmd->add_option("--audit", mix_args.audit, "Write provenance JSONL");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus document and token counts");
  stats_cmd->add_option("--in", stats.inputs)->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--token-mode", stats.token_mode)
      ->check(CLI::IsMember({"heuristic", "external"}));
  stats_cmd->add_option("--out", stats.out);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run an evaluation against an endpoint");
  eval_cmd->add_option("--config", eval.config)->check(CLI::ExistingFile);
  eval_cmd->add_option("--dataset", eval.dataset);
  eval_cmd->add_option("--schema", eval.schema)->check(CLI::IsMember({"cmexam", "canonical", "medqa", "medmcqa", "mmlu", "cmmlu"}));
  eval_cmd->add_option("--split", eval.split);
  eval_cmd->add_option("--dataset-name", eval.dataset_name);
  eval_cmd->add_option("--fewshot", eval.fewshot, "Dev items used as exemplars");
  eval_cmd->add_option("--fewshot-schema", eval.fewshot_schema)
      ->check(CLI::IsMember({"cmexam", "canonical", "medqa", "medmcqa", "mmlu", "cmmlu"}));
  eval_cmd->add_option("--template", eval.template_id);
  eval_cmd->add_option("--extraction", eval.extraction)->check(CLI::IsMember({"fuzzy", "hard"}));
  eval_cmd->add_flag("--hard-strict", eval.hard_strict);
  eval_cmd->add_option("--shots", eval.shots);
  eval_cmd->add_flag("--allow-any-shots", eval.allow_any_shots);
  eval_cmd->add_option("--seed", eval.seed);
  eval_cmd->add_option("--parallelism", eval.parallelism)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-retries", eval.max_retries);
  eval_cmd->add_option("--timeout-ms", eval.timeout_ms);
  eval_cmd->add_option("--cache-dir", eval.cache_dir);
  eval_cmd->add_option("--out-dir", eval.out_dir);
  eval_cmd->add_option("--base-url", eval.base_url);
  eval_cmd->add_option("--api-style", eval.api_style)->check(CLI::IsMember({"chat", "completion"}));
  eval_cmd->add_option("--model", eval.model);
  eval_cmd->add_option("--model-label", eval.model_label);
  eval_cmd->add_option("--checkpoint", eval.checkpoint);
  eval_cmd->add_option("--max-new-tokens", eval.max_new_tokens);
  eval_cmd->add_option("--temperature", eval.temperature);
  eval_cmd->add_flag("--lenient", eval.lenient);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Render stored reports as tables");
  report_cmd->add_option("--in", report.inputs)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", report.format)->check(CLI::IsMember({"json", "csv", "markdown"}));
  report_cmd->add_option("--out", report.out);
  report_cmd->add_flag("--series", report.series, "Group reports into checkpoint series");
  report_cmd->add_option("--threshold", report.threshold, "Forgetting threshold in points");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("emit-train-config", "Write a trainer config file");
  train_cmd->add_option("--out", train.out)->required();
  train_cmd->add_option("--stage", train.stage)->check(CLI::IsMember({"continual", "finetune"}));
  train_cmd->add_option("--learning-rate", train.spec.learning_rate);
  train_cmd->add_option("--batch-size", train.spec.batch_size);
  train_cmd->add_option("--max-seq-length", train.spec.max_seq_length);
  train_cmd->add_option("--epochs", train.spec.epochs);
  train_cmd->add_option("--warmup-ratio", train.spec.warmup_ratio);
  train_cmd->add_option("--precision", train.spec.precision);
  train_cmd->add_option("--gradient-checkpointing", train.spec.gradient_checkpointing);
  train_cmd->add_option("--optimizer", train.spec.optimizer);
  train_cmd->add_option("--sharding", train.spec.sharding);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  log::set_json(json_logs);
  static const std::map<std::string, log::Level> kLevels{
      {"debug", log::Level::debug}, {"info", log::Level::info},
      {"warn", log::Level::warn}, {"error", log::Level::error}};
  log::set_level(kLevels.at(log_level));

  try {
    if (ingest_cmd->parsed()) run_ingest(ingest, out);
    else if (convert_cmd->parsed()) run_convert(convert, out);
    else if (mix_cmd->parsed()) run_mix(mix_args, out);
    else if (stats_cmd->parsed()) run_stats(stats, out);
    else if (eval_cmd->parsed()) return run_evaluation(eval, out);
    else if (report_cmd->parsed()) run_report(report, out);
    else if (train_cmd->parsed()) run_train_config(train, out);
    return kOk;
  } catch (const Error& e) {
    if (json_logs) log::error("failed", {{"code", to_string(e.code())}, {"message", e.what()}});
    else err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    if (json_logs) log::error("failed", {{"message", e.what()}});
    else err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace medharness::cli
