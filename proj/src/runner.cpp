#include "medharness/runner.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <set>

#include "medharness/config_file.hpp"
#include "medharness/corpus.hpp"
#include "medharness/error.hpp"
#include "medharness/extract.hpp"
#include "medharness/hashing.hpp"
#include "medharness/log.hpp"
#include "medharness/prompt.hpp"

namespace medharness {

namespace fs = std::filesystem;

std::string_view to_string(ExtractionMode mode) noexcept {
  return mode == ExtractionMode::fuzzy ? "fuzzy" : "hard";
}

std::optional<ExtractionMode> extraction_mode_from_string(std::string_view name) noexcept {
  if (name == "fuzzy") return ExtractionMode::fuzzy;
  if (name == "hard") return ExtractionMode::hard;
  return std::nullopt;
}

namespace {

bool is_few_shot_template(std::string_view id) {
  return id == templates::kMmluEn5Shot || id == templates::kCmmluZh5Shot;
}

bool is_known_template(std::string_view id) {
  return id == templates::kCmexamZh || id == templates::kAlpaca || is_few_shot_template(id);
}

bool is_known_schema(std::string_view schema) {
  return schema == "cmexam" || schema == "canonical" ||
         choice_schema_from_string(schema).has_value();
}

}  // namespace

void RunConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
  if (dataset_path.empty()) bad("dataset path is required");
  if (!is_known_schema(schema)) bad("unknown schema '" + schema + "'");
  if (!fewshot_schema.empty() && !is_known_schema(fewshot_schema)) {
    bad("unknown fewshot schema '" + fewshot_schema + "'");
  }
  if (!is_known_template(template_id)) {
    fail(ErrorCode::UnknownTemplate, "unknown prompt template '" + template_id + "'");
  }
  if (shots < 0) bad("shots must be >= 0");
  if (!allow_any_shots && shots != 0 && shots != 5) {
    bad("shots must be 0 or 5 (got " + std::to_string(shots) + "); allow_any_shots lifts this");
  }
  if (shots > 0) {
    if (!is_few_shot_template(template_id)) {
      bad("k-shot prompting needs template mmlu-en-5shot-v1 or cmmlu-zh-5shot-v1");
    }
    if (extraction != ExtractionMode::fuzzy) bad("k-shot runs require fuzzy extraction");
    if (fewshot_path.empty()) bad("k-shot runs need a fewshot exemplar file");
  }
  if (output_dir.empty()) bad("output_dir is required");
  endpoint.validate();
  decode.validate();
}

std::string RunConfig::effective_dataset_name() const {
  return dataset_name.empty() ? schema : dataset_name;
}

std::string RunConfig::effective_model_label() const {
  return model_label.empty() ? endpoint.model_name : model_label;
}

fs::path RunConfig::effective_cache_dir() const {
  return cache_dir.empty() ? output_dir / "cache" : cache_dir;
}

ordered_json to_json(const RunConfig& c) {
  return ordered_json{
      {"dataset",
       {{"path", c.dataset_path.generic_string()},
        {"schema", c.schema},
        {"split", c.split},
        {"name", c.dataset_name},
        {"fewshot_path", c.fewshot_path.generic_string()},
        {"fewshot_schema", c.fewshot_schema},
        {"lenient", c.lenient}}},
      {"prompt",
       {{"template", c.template_id}, {"shots", c.shots}, {"allow_any_shots", c.allow_any_shots}}},
      {"extraction", {{"mode", to_string(c.extraction)}, {"hard_strict", c.hard_strict}}},
      {"endpoint",
       {{"base_url", c.endpoint.base_url},
        {"api_style", to_string(c.endpoint.api_style)},
        {"model", c.endpoint.model_name},
        {"timeout_ms", c.endpoint.timeout.count()},
        {"max_retries", c.endpoint.max_retries},
        {"parallelism", c.endpoint.parallelism},
        {"backoff_initial_ms", c.endpoint.backoff_initial.count()},
        {"backoff_max_ms", c.endpoint.backoff_max.count()}}},
      {"decode",
       {{"temperature", c.decode.temperature},
        {"max_new_tokens", c.decode.max_new_tokens},
        {"stop", c.decode.stop}}},
      {"run",
       {{"output_dir", c.output_dir.generic_string()},
        {"cache_dir", c.cache_dir.generic_string()},
        {"seed", c.seed},
        {"checkpoint", c.checkpoint ? ordered_json(*c.checkpoint) : ordered_json(nullptr)},
        {"model_label", c.model_label}}},
  };
}

std::string run_id(const RunConfig& config) {
  return sha256_hex(dump_compact(to_json(config))).substr(0, 16);
}

namespace {

class Section {
 public:
  Section(const ordered_json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      value_ = &root.at(name);
      if (!value_->is_object()) fail(ErrorCode::InvalidConfig, "[" + name_ + "] must be a table");
    }
  }

  /// Rejects keys that were never read, to catch typos.
  void check_unused() const {
    if (!value_) return;
    for (const auto& [key, _] : value_->items()) {
      if (!used_.contains(key)) {
        fail(ErrorCode::InvalidConfig, "unknown config key '" + name_ + "." + key + "'");
      }
    }
  }

  template <typename T>
  void read(const char* key, T& target) {
    used_.insert(key);
    if (!value_ || !value_->contains(key)) return;
    const auto& v = value_->at(key);
    try {
      if constexpr (std::is_same_v<T, fs::path>) {
        target = fs::path(v.get<std::string>());
      } else {
        target = v.get<T>();
      }
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::InvalidConfig, "config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const ordered_json* raw(const char* key) {
    used_.insert(key);
    if (!value_ || !value_->contains(key)) return nullptr;
    return &value_->at(key);
  }

 private:
  std::string name_;
  const ordered_json* value_ = nullptr;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

RunConfig run_config_from_json(const ordered_json& value, const fs::path& base_dir) {
  if (!value.is_object()) fail(ErrorCode::InvalidConfig, "run config must be a table");
  for (const auto& [key, _] : value.items()) {
    static const std::set<std::string> kSections{"dataset", "prompt", "extraction",
                                                 "endpoint", "decode", "run"};
    if (!kSections.contains(key)) fail(ErrorCode::InvalidConfig, "unknown config section '" + key + "'");
  }
  RunConfig c;
  std::string mode, style;

  Section dataset(value, "dataset");
  dataset.read("path", c.dataset_path);
  dataset.read("schema", c.schema);
  dataset.read("split", c.split);
  dataset.read("name", c.dataset_name);
  dataset.read("fewshot_path", c.fewshot_path);
  dataset.read("fewshot_schema", c.fewshot_schema);
  dataset.read("lenient", c.lenient);
  dataset.check_unused();

  Section prompt(value, "prompt");
  prompt.read("template", c.template_id);
  prompt.read("shots", c.shots);
  prompt.read("allow_any_shots", c.allow_any_shots);
  prompt.check_unused();

  Section extraction(value, "extraction");
  extraction.read("mode", mode);
  extraction.read("hard_strict", c.hard_strict);
  extraction.check_unused();
  if (!mode.empty()) {
    auto m = extraction_mode_from_string(mode);
    if (!m) fail(ErrorCode::InvalidConfig, "extraction.mode must be fuzzy or hard");
    c.extraction = *m;
  }

  Section endpoint(value, "endpoint");
  endpoint.read("base_url", c.endpoint.base_url);
  endpoint.read("api_style", style);
  endpoint.read("model", c.endpoint.model_name);
  std::int64_t timeout_ms = c.endpoint.timeout.count();
  std::int64_t backoff_initial_ms = c.endpoint.backoff_initial.count();
  std::int64_t backoff_max_ms = c.endpoint.backoff_max.count();
  endpoint.read("timeout_ms", timeout_ms);
  endpoint.read("max_retries", c.endpoint.max_retries);
  endpoint.read("parallelism", c.endpoint.parallelism);
  endpoint.read("backoff_initial_ms", backoff_initial_ms);
  endpoint.read("backoff_max_ms", backoff_max_ms);
  if (endpoint.raw("auth_token") != nullptr) {
    fail(ErrorCode::InvalidConfig, std::string("secrets do not belong in config files; set ") +
                                       kApiKeyEnv + " instead");
  }
  endpoint.check_unused();
  c.endpoint.timeout = std::chrono::milliseconds(timeout_ms);
  c.endpoint.backoff_initial = std::chrono::milliseconds(backoff_initial_ms);
  c.endpoint.backoff_max = std::chrono::milliseconds(backoff_max_ms);
  if (!style.empty()) {
    auto s = api_style_from_string(style);
    if (!s) fail(ErrorCode::InvalidConfig, "endpoint.api_style must be chat or completion");
    c.endpoint.api_style = *s;
  }

  Section decode(value, "decode");
  decode.read("temperature", c.decode.temperature);
  decode.read("max_new_tokens", c.decode.max_new_tokens);
  decode.read("stop", c.decode.stop);
  decode.check_unused();

  Section run(value, "run");
  run.read("output_dir", c.output_dir);
  run.read("cache_dir", c.cache_dir);
  run.read("seed", c.seed);
  if (const auto* ckpt = run.raw("checkpoint"); ckpt && !ckpt->is_null()) {
    if (!ckpt->is_number_integer()) fail(ErrorCode::InvalidConfig, "run.checkpoint must be an integer");
    c.checkpoint = ckpt->get<std::int64_t>();
  }
  run.read("model_label", c.model_label);
  run.check_unused();

  c.dataset_path = resolve(base_dir, c.dataset_path);
  c.fewshot_path = resolve(base_dir, c.fewshot_path);
  c.output_dir = resolve(base_dir, c.output_dir);
  c.cache_dir = resolve(base_dir, c.cache_dir);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const std::string content = read_text_file(path);
  ordered_json value;
  if (path.extension() == ".json") {
    try {
      value = ordered_json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::InvalidConfig, std::string("config JSON: ") + e.what());
    }
  } else {
    value = parse_toml_subset(content);
  }
  RunConfig config = run_config_from_json(value, path.parent_path());
  config.endpoint.auth_token = EndpointConfig::token_from_env();
  return config;
}

std::vector<ExamItem> load_items(const fs::path& path, std::string_view schema,
                                 std::string_view split, bool lenient) {
  const ParseMode mode = lenient ? ParseMode::lenient : ParseMode::strict;
  ParseReport<ExamItem> report;
  if (schema == "canonical") {
    report.items = read_items_jsonl(path);
  } else if (schema == "cmexam") {
    report = parse_cmexam(path, split, mode);
  } else if (auto s = choice_schema_from_string(schema)) {
    report = parse_choice_dataset(path, *s, split, mode);
  } else {
    fail(ErrorCode::InvalidConfig, "unknown schema '" + std::string(schema) + "'");
  }
  for (const auto& e : report.errors) {
    log::warn("row_skipped", {{"file", path.string()}, {"row", e.row}, {"error", e.message}});
  }
  return std::move(report.items);
}

ordered_json prediction_to_json(const Prediction& p) {
  ordered_json labels = ordered_json::array();
  for (char c : p.extraction.labels.labels()) labels.push_back(std::string(1, c));
  ordered_json out{
      {"id", p.id},
      {"raw_output", p.raw_output},
      {"labels", std::move(labels)},
      {"tier", to_string(p.extraction.tier)},
      {"prompt_hash", p.prompt_hash},
      {"cached", p.cached},
      {"template_id", p.template_id},
  };
  if (p.error) out["error"] = *p.error;
  return out;
}

Prediction prediction_from_json(const ordered_json& v) {
  Prediction p;
  try {
    p.id = v.at("id").get<std::string>();
    p.raw_output = v.at("raw_output").get<std::string>();
    for (const auto& l : v.at("labels")) {
      const auto s = l.get<std::string>();
      if (s.size() != 1 || !LabelSet::is_label(s[0])) fail(ErrorCode::UnknownLabel, "bad label '" + s + "'");
      p.extraction.labels.insert(s[0]);
    }
    const auto tier = tier_from_string(v.at("tier").get<std::string>());
    if (!tier) fail(ErrorCode::SchemaMismatch, "unknown tier");
    p.extraction.tier = *tier;
    p.prompt_hash = v.at("prompt_hash").get<std::string>();
    p.cached = v.at("cached").get<bool>();
    p.template_id = v.value("template_id", std::string{});
    if (v.contains("error")) p.error = v.at("error").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("prediction: ") + e.what());
  }
  return p;
}

namespace {

class DirectoryLock {
 public:
  explicit DirectoryLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        fail(ErrorCode::RunLocked, "another run holds '" + path_.string() +
                                       "'; remove it if no run is active");
      }
      fail(ErrorCode::IoError, "cannot create lock '" + path_.string() + "'");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~DirectoryLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::vector<PromptJob> render_prompts(const RunConfig& config, const std::vector<ExamItem>& items) {
  std::vector<PromptJob> jobs;
  jobs.reserve(items.size());
  if (!is_few_shot_template(config.template_id)) {
    for (const auto& item : items) jobs.push_back({item.id, render_exam_prompt(item, config.template_id)});
    return jobs;
  }
  FewShotBank bank;
  if (config.shots > 0) {
    bank = FewShotBank::from_items(load_items(config.fewshot_path,
                                                config.fewshot_schema.empty() ? config.schema
                                                                              : config.fewshot_schema,
                                                "dev", config.lenient));
  }
  const auto language =
      config.template_id == templates::kCmmluZh5Shot ? PromptLanguage::zh : PromptLanguage::en;
  for (const auto& item : items) {
    const std::string subject = item.meta.subject.value_or(config.effective_dataset_name());
    jobs.push_back({item.id, render_few_shot(bank, subject, static_cast<std::size_t>(config.shots),
                                             item, language)});
  }
  return jobs;
}

}  // namespace

RunResult run_eval(const RunConfig& input) {
  RunConfig config = input;
  config.validate();
  if (!config.endpoint.auth_token) config.endpoint.auth_token = EndpointConfig::token_from_env();

  const auto started = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + config.output_dir.string() + "'");
  DirectoryLock lock(config.output_dir / ".lock");

  RunResult result;
  result.run_id = run_id(config);
  result.manifest_path = config.output_dir / "manifest.json";
  result.predictions_path = config.output_dir / "predictions.jsonl";
  result.report_path = config.output_dir / "report.json";

  std::string dataset_sha;
  if (fs::exists(config.dataset_path, ec)) dataset_sha = sha256_hex(read_text_file(config.dataset_path));
  ordered_json manifest{
      {"run_id", result.run_id},
      {"harness_version", kHarnessVersion},
      {"status", "running"},
      {"dataset",
       {{"path", config.dataset_path.generic_string()},
        {"schema", config.schema},
        {"split", config.split},
        {"sha256", dataset_sha.empty() ? ordered_json(nullptr) : ordered_json(dataset_sha)}}},
      {"config", to_json(config)},
  };
  write_text_file(result.manifest_path, dump_pretty(manifest) + "\n");
  log::info("run_started", {{"run_id", result.run_id}, {"output_dir", config.output_dir.string()}});

  auto finish_manifest = [&](std::string_view status) {
    manifest["status"] = status;
    manifest["failed_ids"] = result.failed_ids;
    manifest["duration_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_text_file(result.manifest_path, dump_pretty(manifest) + "\n");
  };

  try {
    const auto items = load_items(config.dataset_path, config.schema, config.split, config.lenient);
    if (items.empty()) fail(ErrorCode::EmptyInput, "dataset has no items");
    manifest["n_items"] = items.size();

    const auto jobs = render_prompts(config, items);
    const CompletionClient client(config.endpoint);
    auto predictions = batch_eval(client, jobs, config.decode, config.effective_cache_dir());

    for (std::size_t i = 0; i < predictions.size(); ++i) {
      auto& p = predictions[i];
      if (p.failed()) {
        result.failed_ids.push_back(p.id);
        p.extraction = Extraction{};
      } else if (config.extraction == ExtractionMode::fuzzy) {
        p.extraction = extract_fuzzy(p.raw_output, items[i].options);
      } else {
        p.extraction = extract_hard(p.raw_output, items[i].options, {config.hard_strict});
      }
    }

    std::string lines;
    for (const auto& p : predictions) lines += dump_compact(prediction_to_json(p)) + "\n";
    write_text_file(result.predictions_path, lines);

    if (result.failed_ids.size() == predictions.size()) {
      finish_manifest("failed");
      fail(ErrorCode::RunFailed, "no item got a response; first error: " +
                                     predictions.front().error.value_or("unknown"));
    }

    result.report = score_exam(predictions, items,
                               {config.effective_dataset_name(), config.effective_model_label(),
                                config.checkpoint});
    if (is_few_shot_template(config.template_id)) {
      result.report.per_subject = score_fewshot(predictions, items).per_subject;
    }
    write_text_file(result.report_path, dump_pretty(to_json(result.report)) + "\n");
    finish_manifest(result.partial() ? "partial" : "complete");
  } catch (const Error& e) {
    if (manifest["status"] == "running") {
      manifest["error"] = e.what();
      finish_manifest("failed");
    }
    throw;
  }

  result.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log::info("run_finished", {{"run_id", result.run_id},
                             {"n", result.report.n},
                             {"accuracy", result.report.accuracy},
                             {"failed", result.failed_ids.size()}});
  return result;
}

}  // namespace medharness
