#include "medharness/inference.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "medharness/error.hpp"
#include "medharness/hashing.hpp"
#include "medharness/log.hpp"

namespace medharness {

void DecodeParams::validate() const {
  if (!(temperature >= 0.0)) fail(ErrorCode::InvalidConfig, "temperature must be >= 0");
  if (max_new_tokens < 1) fail(ErrorCode::InvalidConfig, "max_new_tokens must be >= 1");
}

std::string_view to_string(ApiStyle style) noexcept {
  return style == ApiStyle::chat ? "chat" : "completion";
}

std::optional<ApiStyle> api_style_from_string(std::string_view name) noexcept {
  if (name == "chat") return ApiStyle::chat;
  if (name == "completion") return ApiStyle::completion;
  return std::nullopt;
}

void EndpointConfig::validate() const {
  if (base_url.empty()) fail(ErrorCode::InvalidConfig, "endpoint base_url is empty");
  if (!base_url.starts_with("http://") && !base_url.starts_with("https://")) {
    fail(ErrorCode::InvalidConfig, "endpoint base_url must start with http:// or https://");
  }
  if (parallelism < 1) fail(ErrorCode::InvalidConfig, "parallelism must be >= 1");
  if (timeout.count() <= 0) fail(ErrorCode::InvalidConfig, "timeout must be > 0");
  if (max_retries < 0) fail(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (backoff_initial.count() < 0 || backoff_max.count() < 0) {
    fail(ErrorCode::InvalidConfig, "backoff delays must be >= 0");
  }
}

std::optional<std::string> EndpointConfig::token_from_env() {
  const char* value = std::getenv(kApiKeyEnv);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

CompletionClient::CompletionClient(EndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.base_url.find("://") + 3;
  const auto path_start = config_.base_url.find('/', scheme_end);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.base_url;
  } else {
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    path_prefix_ = config_.base_url.substr(path_start);
  }
  while (path_prefix_.ends_with('/')) path_prefix_.pop_back();
}

ordered_json build_request_body(const EndpointConfig& endpoint, const PromptText& prompt,
                                const DecodeParams& params) {
  ordered_json body{{"model", endpoint.model_name}};
  if (endpoint.api_style == ApiStyle::chat) {
    body["messages"] = ordered_json::array({{{"role", "user"}, {"content", prompt.text}}});
  } else {
    body["prompt"] = prompt.text;
  }
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_new_tokens;
  if (!params.stop.empty()) body["stop"] = params.stop;
  return body;
}

namespace {

std::string extract_text(const std::string& body, ApiStyle style) {
  ordered_json response;
  try {
    response = ordered_json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    fail(ErrorCode::MalformedResponse, "response body is not JSON");
  }
  const auto choices = response.find("choices");
  if (choices == response.end() || !choices->is_array() || choices->empty()) {
    fail(ErrorCode::MalformedResponse, "response has no choices");
  }
  const auto& first = choices->front();
  const ordered_json* text = nullptr;
  if (style == ApiStyle::chat) {
    if (first.contains("message") && first.at("message").contains("content")) {
      text = &first.at("message").at("content");
    }
  } else if (first.contains("text")) {
    text = &first.at("text");
  }
  if (text == nullptr || !text->is_string()) {
    fail(ErrorCode::MalformedResponse, "response choice has no text field");
  }
  return text->get<std::string>();
}

}  // namespace

CompletionResult CompletionClient::complete(const PromptText& prompt,
                                            const DecodeParams& params) const {
  if (prompt.text.empty()) fail(ErrorCode::EmptyInput, "empty prompt");
  params.validate();
  const std::string body = dump_compact(build_request_body(config_, prompt, params));
  const std::string path = path_prefix_ + (config_.api_style == ApiStyle::chat
                                               ? "/chat/completions"
                                               : "/completions");
  httplib::Headers headers;
  if (config_.auth_token) headers.emplace("Authorization", "Bearer " + *config_.auth_token);

  const auto seconds = config_.timeout.count() / 1000;
  const auto micros = (config_.timeout.count() % 1000) * 1000;
  auto delay = config_.backoff_initial;

  for (int attempt = 0;; ++attempt) {
    httplib::Client http(scheme_host_port_);
    http.set_connection_timeout(seconds, micros);
    http.set_read_timeout(seconds, micros);
    http.set_write_timeout(seconds, micros);

    ErrorCode code;
    std::string message;
    auto result = http.Post(path, headers, body, "application/json");
    if (!result) {
      const auto err = result.error();
      code = (err == httplib::Error::Read || err == httplib::Error::Write ||
              err == httplib::Error::ConnectionTimeout)
                 ? ErrorCode::Timeout
                 : ErrorCode::Connection;
      message = "request to " + scheme_host_port_ + path + " failed: " + httplib::to_string(err);
    } else {
      const int status = result->status;
      if (status >= 200 && status < 300) {
        return {extract_text(result->body, config_.api_style), attempt};
      }
      message = "HTTP " + std::to_string(status) + " from " + scheme_host_port_ + path;
      if (status == 401 || status == 403) fail(ErrorCode::AuthError, message);
      if (status != 429 && status < 500) fail(ErrorCode::HttpStatus, message);
      code = ErrorCode::HttpStatus;
    }
    if (attempt >= config_.max_retries) {
      fail(code, message + " (after " + std::to_string(attempt) + " retries)");
    }
    log::warn("retry", {{"attempt", attempt + 1},
                        {"max_retries", config_.max_retries},
                        {"reason", message},
                        {"delay_ms", delay.count()}});
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, config_.backoff_max);
  }
}

ordered_json request_digest(std::string_view model_name, const PromptText& prompt,
                            const DecodeParams& params) {
  return ordered_json{
      {"model", model_name},
      {"template_id", prompt.template_id},
      {"prompt", prompt.text},
      {"params",
       {{"temperature", params.temperature},
        {"max_new_tokens", params.max_new_tokens},
        {"stop", params.stop}}},
  };
}

std::string prompt_hash(std::string_view model_name, const PromptText& prompt,
                        const DecodeParams& params) {
  return sha256_hex(dump_compact(request_digest(model_name, prompt, params)));
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::path_for(const std::string& hash) const {
  return dir_ / hash.substr(0, 2) / (hash + ".json");
}

std::optional<std::string> ResponseCache::load(const std::string& hash,
                                               const ordered_json& digest) const {
  const auto path = path_for(hash);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  ordered_json entry;
  try {
    entry = ordered_json::parse(read_text_file(path));
  } catch (const std::exception& e) {
    fail(ErrorCode::CacheIoError, "unreadable cache entry '" + path.string() + "': " + e.what());
  }
  if (!entry.contains("request") || !entry.contains("response") ||
      !entry.at("response").is_string()) {
    fail(ErrorCode::CacheIoError, "cache entry '" + path.string() + "' is incomplete");
  }
  if (entry.at("request") != digest) {
    fail(ErrorCode::CacheCollision, "cache entry '" + path.string() +
                                        "' holds a different request under the same hash");
  }
  return entry.at("response").get<std::string>();
}

void ResponseCache::store(const std::string& hash, const ordered_json& digest,
                          const std::string& text) const {
  ordered_json entry{{"prompt_hash", hash}, {"request", digest}, {"response", text}};
  try {
    write_text_file(path_for(hash), dump_pretty(entry) + "\n");
  } catch (const Error& e) {
    fail(ErrorCode::CacheIoError, e.what());
  }
}

std::vector<Prediction> batch_eval(const CompletionClient& client, std::span<const PromptJob> jobs,
                                   const DecodeParams& params,
                                   const std::filesystem::path& cache_dir) {
  params.validate();
  const std::string& model = client.config().model_name;

  std::vector<Prediction> results(jobs.size());
  std::vector<ordered_json> digests(jobs.size());
  {
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, std::size_t> first_with_hash;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (!ids.insert(jobs[i].id).second) {
        fail(ErrorCode::DuplicateId, "duplicate prompt id '" + jobs[i].id + "'");
      }
      digests[i] = request_digest(model, jobs[i].prompt, params);
      results[i].id = jobs[i].id;
      results[i].template_id = jobs[i].prompt.template_id;
      results[i].prompt_hash = sha256_hex(dump_compact(digests[i]));
      auto [it, fresh] = first_with_hash.emplace(results[i].prompt_hash, i);
      if (!fresh && digests[it->second] != digests[i]) {
        fail(ErrorCode::CacheCollision, "prompt hash collision between '" +
                                            jobs[it->second].id + "' and '" + jobs[i].id + "'");
      }
    }
  }

  std::optional<ResponseCache> cache;
  if (!cache_dir.empty()) cache.emplace(cache_dir);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto work = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      Prediction& out = results[i];
      try {
        const auto started = std::chrono::steady_clock::now();
        if (cache) {
          if (auto hit = cache->load(out.prompt_hash, digests[i])) {
            out.raw_output = std::move(*hit);
            out.cached = true;
            continue;
          }
        }
        try {
          auto completion = client.complete(jobs[i].prompt, params);
          out.raw_output = std::move(completion.text);
          out.retries = completion.retries;
        } catch (const Error& e) {
          if (is_validation_error(e.code())) throw;
          out.error = e.what();
          log::warn("item_failed", {{"id", out.id}, {"error", e.what()}});
        }
        out.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
        if (cache && !out.error) cache->store(out.prompt_hash, digests[i], out.raw_output);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
      }
    }
  };

  const auto workers = std::min<std::size_t>(
      static_cast<std::size_t>(client.config().parallelism), jobs.size());
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();  // joins

  if (fatal) std::rethrow_exception(fatal);
  return results;
}

}  // namespace medharness
