#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "medharness/corpus.hpp"
#include "medharness/mock_server.hpp"
#include "medharness/runner.hpp"

#ifndef MEDHARNESS_FIXTURE_DIR
#define MEDHARNESS_FIXTURE_DIR "tests/fixtures"
#endif

namespace scenario {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(MEDHARNESS_FIXTURE_DIR) / name; }

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "medharness-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Item i answers with letter 'A' + i % 5 and carries "第{i}题" in its stem.
inline std::vector<medharness::ExamItem> synthetic_items(std::size_t n) {
  std::vector<medharness::ExamItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    medharness::ExamItem item;
    item.id = "syn-" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    item.question = "第" + std::to_string(i) + "题：下列哪项最符合该患者的诊断";
    for (char l = 'A'; l <= 'E'; ++l) {
      item.options.push_back({l, "候选诊断" + std::to_string(i) + std::string(1, l)});
    }
    item.answer = medharness::LabelSet{static_cast<char>('A' + i % 5)};
    item.meta.source = "synthetic";
    item.meta.split = "test";
    item.meta.disease_category = i % 2 ? "内科" : "外科";
    items.push_back(std::move(item));
  }
  return items;
}

/// Item number parsed back out of a rendered prompt, or -1.
inline int item_index(const std::string& prompt) {
  const auto at = prompt.find("第");
  if (at == std::string::npos) return -1;
  return std::atoi(prompt.c_str() + at + std::string("第").size());
}

/// Bare-letter replies, correct for items with index < n_correct and one
/// letter off otherwise.
inline medharness::MockHandler scripted_letters(int n_correct) {
  return [n_correct](const medharness::MockRequest& r) {
    const int i = item_index(r.prompt);
    if (i < 0) return medharness::MockReply{400, "", std::nullopt};
    const char gold = static_cast<char>('A' + i % 5);
    const char reply = i < n_correct ? gold : static_cast<char>('A' + (i + 1) % 5);
    return medharness::MockReply{200, std::string(1, reply)};
  };
}

inline medharness::RunConfig run_config(const fs::path& dataset, const fs::path& out,
                                        const std::string& base_url) {
  medharness::RunConfig c;
  c.dataset_path = dataset;
  c.schema = "canonical";
  c.dataset_name = "cmexam";
  c.output_dir = out;
  c.endpoint.base_url = base_url;
  c.endpoint.model_name = "mock-13b";
  c.endpoint.backoff_initial = std::chrono::milliseconds(5);
  c.endpoint.backoff_max = std::chrono::milliseconds(20);
  return c;
}

inline std::string slurp(const fs::path& p) { return medharness::read_text_file(p); }

}  // namespace scenario
