// Scripted completion endpoint for local runs and demos.
#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "medharness/jsonio.hpp"
#include "medharness/mock_server.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mock chat/completions server"};
  int port = 0;
  std::string reply = "A";
  std::string answers_path;
  app.add_option("--port", port, "0 picks a free port");
  app.add_option("--reply", reply, "Text returned when no answer rule matches");
  app.add_option("--answers", answers_path,
                 "JSON object: prompt substring -> reply text, first match wins")
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, std::string>> rules;
  if (!answers_path.empty()) {
    try {
      const auto value = medharness::ordered_json::parse(medharness::read_text_file(answers_path));
      for (const auto& [key, text] : value.items()) rules.emplace_back(key, text.get<std::string>());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  try {
    medharness::MockCompletionServer server(
        [&](const medharness::MockRequest& r) {
          for (const auto& [needle, text] : rules) {
            if (r.prompt.find(needle) != std::string::npos) return medharness::MockReply{200, text};
          }
          return medharness::MockReply{200, reply};
        },
        port);
    std::cout << server.base_url() << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    std::cerr << "served " << server.request_count() << " requests\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
