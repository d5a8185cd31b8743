#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medharness/jsonio.hpp"
#include "medharness/prompt.hpp"
#include "medharness/types.hpp"

namespace medharness {

/// Greedy decoding with a 256-token cap unless overridden.
struct DecodeParams {
  double temperature = 0.0;
  int max_new_tokens = 256;
  std::vector<std::string> stop;

  void validate() const;
};

enum class ApiStyle { chat, completion };

std::string_view to_string(ApiStyle style) noexcept;
std::optional<ApiStyle> api_style_from_string(std::string_view name) noexcept;

inline constexpr const char* kApiKeyEnv = "MEDHARNESS_API_KEY";

struct EndpointConfig {
  /// e.g. "http://127.0.0.1:8000/v1"; requests go to {base_url}/chat/completions
  /// or {base_url}/completions.
  std::string base_url;
  ApiStyle api_style = ApiStyle::chat;
  std::string model_name;
  /// Bearer token. Only ever populated from the environment.
  std::optional<std::string> auth_token;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  int parallelism = 4;
  /// First retry delay; doubles per attempt up to backoff_max.
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{8000};

  void validate() const;
  /// Reads MEDHARNESS_API_KEY.
  static std::optional<std::string> token_from_env();
};

struct CompletionResult {
  std::string text;
  int retries = 0;
};

/// Thread-safe: each call opens its own connection.
class CompletionClient {
 public:
  explicit CompletionClient(EndpointConfig config);

  /// Sends one request and returns the first choice's text. Retries 429 and
  /// 5xx responses and transport failures with exponential backoff; other
  /// 4xx fail immediately (401/403 as AuthError).
  CompletionResult complete(const PromptText& prompt, const DecodeParams& params) const;

  const EndpointConfig& config() const noexcept { return config_; }

 private:
  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

/// Request body exactly as sent on the wire.
ordered_json build_request_body(const EndpointConfig& endpoint, const PromptText& prompt,
                                const DecodeParams& params);

/// Everything that determines the generation: model, template, prompt text,
/// decode parameters. Its canonical serialization is what prompt_hash digests.
ordered_json request_digest(std::string_view model_name, const PromptText& prompt,
                            const DecodeParams& params);

std::string prompt_hash(std::string_view model_name, const PromptText& prompt,
                        const DecodeParams& params);

/// One JSON file per prompt hash at {dir}/{hash[0:2]}/{hash}.json. Writes go
/// through a temp file and rename, so concurrent writers of the same key are
/// safe.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::filesystem::path path_for(const std::string& hash) const;

  /// Returns the cached text, or nullopt on a miss. Throws CacheCollision if
  /// the stored request digest differs from `digest`, CacheIoError on
  /// unreadable entries.
  std::optional<std::string> load(const std::string& hash, const ordered_json& digest) const;
  void store(const std::string& hash, const ordered_json& digest, const std::string& text) const;

 private:
  std::filesystem::path dir_;
};

struct PromptJob {
  std::string id;
  PromptText prompt;
};

/// Answers every prompt once with at most `parallelism` requests in flight.
/// Results come back in input order. The cache is consulted first when
/// `cache_dir` is non-empty. Requests that still fail after retries yield
/// predictions with an error note and empty output rather than an exception.
std::vector<Prediction> batch_eval(const CompletionClient& client, std::span<const PromptJob> jobs,
                                   const DecodeParams& params,
                                   const std::filesystem::path& cache_dir);

}  // namespace medharness
