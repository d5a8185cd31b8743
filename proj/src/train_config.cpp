#include <charconv>
#include <cmath>

#include "medharness/error.hpp"
#include "medharness/runner.hpp"

namespace medharness {

std::string_view to_string(TrainStage stage) noexcept {
  return stage == TrainStage::continual ? "continual" : "finetune";
}

std::optional<TrainStage> train_stage_from_string(std::string_view name) noexcept {
  if (name == "continual") return TrainStage::continual;
  if (name == "finetune") return TrainStage::finetune;
  return std::nullopt;
}

void TrainConfigSpec::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be > 0");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (max_seq_length < 1) bad("max_seq_length must be >= 1");
  if (epochs < 1) bad("epochs must be >= 1");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) bad("warmup_ratio must be in [0, 1)");
  if (precision.empty()) bad("precision is required");
  if (optimizer.empty()) bad("optimizer is required");
  if (sharding.empty()) bad("sharding is required");
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, end);
  // to_chars writes "2e-05"; drop exponent padding.
  if (auto e = s.find('e'); e != std::string::npos) {
    std::size_t i = e + 1;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
      if (s[i] == '+') s.erase(i, 1);
      else ++i;
    }
    while (i + 1 < s.size() && s[i] == '0') s.erase(i, 1);
  }
  return s;
}

std::string render_train_config(const TrainConfigSpec& spec) {
  spec.validate();
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out.append(key).append(" = ").append(value).append("\n");
  };
  line("stage", std::string(to_string(spec.stage)));
  line("learning_rate", format_number(spec.learning_rate));
  line("batch_size", std::to_string(spec.batch_size));
  line("max_seq_length", std::to_string(spec.max_seq_length));
  line("epochs", std::to_string(spec.epochs));
  line("warmup_ratio", format_number(spec.warmup_ratio));
  line("precision", spec.precision);
  line("gradient_checkpointing", spec.gradient_checkpointing ? "true" : "false");
  line("optimizer", spec.optimizer);
  line("sharding", spec.sharding);
  return out;
}

void emit_train_config(const TrainConfigSpec& spec, const std::filesystem::path& path) {
  write_text_file(path, render_train_config(spec));
}

}  // namespace medharness
