#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "medharness/jsonio.hpp"

namespace medharness {

struct MockRequest {
  std::string path;
  ordered_json body;
  /// The chat message content or completion prompt.
  std::string prompt;
  /// Value of the Authorization header, empty when absent.
  std::string authorization;
  /// 0-based arrival order.
  std::size_t index = 0;
};

struct MockReply {
  int status = 200;
  /// Returned as the first choice's text when status is 2xx.
  std::string text;
  /// Sent verbatim instead of a generated body when set.
  std::optional<std::string> raw_body;
  std::chrono::milliseconds delay{0};
};

using MockHandler = std::function<MockReply(const MockRequest&)>;

/// In-process completion server on 127.0.0.1 speaking the chat-completions
/// and completions JSON protocol under /v1. Counts requests and tracks how
/// many were being handled at once.
class MockCompletionServer {
 public:
  /// Port 0 picks a free port.
  explicit MockCompletionServer(MockHandler handler, int port = 0);
  ~MockCompletionServer();

  MockCompletionServer(const MockCompletionServer&) = delete;
  MockCompletionServer& operator=(const MockCompletionServer&) = delete;

  /// "http://127.0.0.1:{port}/v1"
  std::string base_url() const;
  int port() const;

  std::size_t request_count() const;
  int max_in_flight() const;
  void reset_counters();

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Handler that answers every request with `text`.
MockHandler constant_reply(std::string text);

}  // namespace medharness
