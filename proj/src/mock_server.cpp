#include "medharness/mock_server.hpp"

#include <httplib.h>

#include <atomic>
#include <thread>

#include "medharness/error.hpp"

namespace medharness {

struct MockCompletionServer::Impl {
  MockHandler handler;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<std::size_t> requests{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};

  void handle(const httplib::Request& req, httplib::Response& res, bool chat) {
    const int now = ++in_flight;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    struct Release {
      std::atomic<int>& counter;
      ~Release() { --counter; }
    } release{in_flight};
    MockRequest request;
    request.path = req.path;
    request.authorization = req.get_header_value("Authorization");
    request.index = requests.fetch_add(1);
    try {
      request.body = ordered_json::parse(req.body);
      if (chat) {
        request.prompt = request.body.at("messages").back().at("content").get<std::string>();
      } else {
        request.prompt = request.body.at("prompt").get<std::string>();
      }
    } catch (const std::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return;
    }

    MockReply reply = handler(request);
    if (reply.delay.count() > 0) std::this_thread::sleep_for(reply.delay);
    res.status = reply.status;
    if (reply.raw_body) {
      res.set_content(*reply.raw_body, "application/json");
    } else if (reply.status >= 200 && reply.status < 300) {
      ordered_json choice = chat
          ? ordered_json{{"index", 0},
                         {"message", {{"role", "assistant"}, {"content", reply.text}}},
                         {"finish_reason", "stop"}}
          : ordered_json{{"index", 0}, {"text", reply.text}, {"finish_reason", "stop"}};
      ordered_json body{{"object", chat ? "chat.completion" : "text_completion"},
                        {"model", request.body.value("model", std::string{})},
                        {"choices", ordered_json::array({choice})}};
      res.set_content(dump_compact(body), "application/json");
    } else {
      res.set_content(R"({"error":"scripted failure"})", "application/json");
    }
  }
};

MockCompletionServer::MockCompletionServer(MockHandler handler, int port) : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    impl_->handle(req, res, true);
  });
  impl_->server.Post("/v1/completions", [this](const httplib::Request& req,
                                               httplib::Response& res) {
    impl_->handle(req, res, false);
  });
  if (port > 0) {
    impl_->port = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  } else {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  }
  if (impl_->port <= 0) fail(ErrorCode::IoError, "mock server could not bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockCompletionServer::~MockCompletionServer() { stop(); }

std::string MockCompletionServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1";
}

int MockCompletionServer::port() const { return impl_->port; }

std::size_t MockCompletionServer::request_count() const { return impl_->requests.load(); }

int MockCompletionServer::max_in_flight() const { return impl_->max_in_flight.load(); }

void MockCompletionServer::reset_counters() {
  impl_->requests.store(0);
  impl_->max_in_flight.store(0);
}

void MockCompletionServer::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

MockHandler constant_reply(std::string text) {
  return [text = std::move(text)](const MockRequest&) { return MockReply{200, text, {}, {}}; };
}

}  // namespace medharness
