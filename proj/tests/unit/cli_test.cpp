#include <gtest/gtest.h>

#include <sstream>

#include "../support/scenario.hpp"
#include "medharness/cli.hpp"
#include "medharness/corpus.hpp"
#include "medharness/log.hpp"
#include "medharness/mock_server.hpp"

using namespace medharness;
using scenario::fixture;
using scenario::TempDir;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  log::set_sink([](const std::string&) {});
  const int code = cli::dispatch(args, out, err);
  log::set_sink(nullptr);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, HelpOnEverySubcommand) {
  EXPECT_EQ(run({"--help"}).code, 0);
  for (const char* sub : {"ingest", "convert", "mix", "stats", "eval", "report", "emit-train-config"}) {
    const auto r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_FALSE(r.out.empty()) << sub;
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  const auto r = run({"ingest", "--schema", "bogus", "--in", fixture("cmexam_sample.csv"), "--out", "x"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--schema"), std::string::npos);
  EXPECT_EQ(run({"eval", "--extraction", "loose"}).code, 1);
  EXPECT_EQ(run({"report", "--in", fixture("table3_reports.json"), "--format", "html"}).code, 1);
}

TEST(Cli, IngestWritesCanonicalJsonl) {
  TempDir dir;
  const auto r = run({"ingest", "--schema", "cmexam", "--in", fixture("cmexam_sample.csv"), "--out",
                      (dir / "out" / "test.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_items_jsonl(dir / "out" / "test.jsonl").size(), 8u);
}

TEST(Cli, IngestValidationErrorExitsOne) {
  TempDir dir;
  write_text_file(dir / "bad.csv", "foo,bar\n1,2\n");
  const auto r = run({"ingest", "--in", (dir / "bad.csv").string(), "--out", (dir / "o.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(std::filesystem::exists(dir / "o.jsonl"));
}

TEST(Cli, ConvertDefaultsToAlpaca) {
  TempDir dir;
  write_items_jsonl(dir / "train.jsonl", parse_cmexam(fixture("cmexam_sample.csv"), "train").items);
  const auto r = run({"convert", "--mode", "with_reasoning", "--in", (dir / "train.jsonl").string(),
                      "--out", (dir / "alpaca.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(alpaca_from_json(read_text_file(dir / "alpaca.json")).size(), 8u);
  EXPECT_NE(r.out.find("8"), std::string::npos);
}

TEST(Cli, ConvertCorpusAndStats) {
  TempDir dir;
  EXPECT_EQ(run({"convert", "--to", "corpus", "--layout", "qa-labeled", "--in", fixture("qa_sample.jsonl"),
                 "--out", (dir / "docs.jsonl").string()}).code, 0);
  const auto r = run({"stats", "--in", (dir / "docs.jsonl").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(ordered_json::parse(r.out)["n_docs"], 3);
}

TEST(Cli, MixWithAudit) {
  TempDir dir;
  write_text_file(dir / "a.json", alpaca_to_json(to_alpaca(scenario::synthetic_items(3), AlpacaMode::answer_only)));
  const auto r = run({"mix", "--in", "cmexam=" + (dir / "a.json").string(), "--in",
                      "medqa=" + (dir / "a.json").string(), "--seed", "5", "--out",
                      (dir / "mix.json").string(), "--audit", (dir / "audit.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(alpaca_from_json(read_text_file(dir / "mix.json")).size(), 6u);
  EXPECT_EQ(parse_jsonl(read_text_file(dir / "audit.jsonl")).size(), 6u);
  EXPECT_EQ(run({"mix", "--in", "noequals", "--out", (dir / "m2.json").string()}).code, 1);
}

TEST(Cli, EvalExitCodes) {
  TempDir dir;
  write_items_jsonl(dir / "items.jsonl", scenario::synthetic_items(6));
  write_text_file(dir / "run.toml",
                  "[dataset]\npath = \"items.jsonl\"\nschema = \"canonical\"\n"
                  "[endpoint]\nbase_url = \"http://127.0.0.1:9/v1\"\nmodel = \"m\"\nmax_retries = 0\n"
                  "timeout_ms = 300\n[run]\noutput_dir = \"cold\"\n");
  // unreachable endpoint, cold cache
  auto r = run({"eval", "--config", (dir / "run.toml").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(std::filesystem::exists(dir / "cold" / "manifest.json"));

  MockCompletionServer server([](const MockRequest& req) {
    if (scenario::item_index(req.prompt) == 2) return MockReply{503, ""};
    return MockReply{200, "A"};
  });
  r = run({"eval", "--config", (dir / "run.toml").string(), "--base-url", server.base_url(), "--out-dir",
           (dir / "partial").string()});
  EXPECT_EQ(r.code, 3);

  MockCompletionServer ok(constant_reply("A"));
  r = run({"eval", "--config", (dir / "run.toml").string(), "--base-url", ok.base_url(), "--out-dir",
           (dir / "ok").string(), "--parallelism", "2", "--extraction", "hard", "--hard-strict",
           "--seed", "11"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto summary = ordered_json::parse(r.out);
  EXPECT_EQ(summary["n"], 6);
  const auto manifest = ordered_json::parse(read_text_file(dir / "ok" / "manifest.json"));
  EXPECT_EQ(manifest["config"]["extraction"]["mode"], "hard");
  EXPECT_EQ(manifest["config"]["extraction"]["hard_strict"], true);
  EXPECT_EQ(manifest["config"]["endpoint"]["parallelism"], 2);
  EXPECT_EQ(manifest["config"]["run"]["seed"], 11);

  // shots outside {0,5} is a validation error
  r = run({"eval", "--config", (dir / "run.toml").string(), "--shots", "3"});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, ReportFormats) {
  TempDir dir;
  auto r = run({"report", "--in", fixture("table3_reports.json"), "--series", "--format", "markdown"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| Llama-2-13B | 3000 | 43.8 | 43.3 | 57.0 | 41.8 |"), std::string::npos);
  r = run({"report", "--in", fixture("table3_reports.json"), "--series", "--format", "csv", "--out",
           (dir / "t.csv").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "t.csv"));
  r = run({"report", "--in", fixture("table3_reports.json"), "--format", "json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(ordered_json::parse(r.out).size(), 30u);
}

TEST(Cli, EmitTrainConfig) {
  TempDir dir;
  auto r = run({"emit-train-config", "--out", (dir / "train.cfg").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(read_text_file(dir / "train.cfg").find("learning_rate = 2e-5"), std::string::npos);
  r = run({"emit-train-config", "--out", (dir / "bad.cfg").string(), "--epochs", "0"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(std::filesystem::exists(dir / "bad.cfg"));
}

TEST(Cli, JsonLogs) {
  TempDir dir;
  std::vector<std::string> lines;
  log::set_sink([&](const std::string& l) { lines.push_back(l); });
  std::ostringstream out, err;
  const int code = cli::dispatch({"--json-logs", "ingest", "--in", fixture("cmexam_sample.csv"), "--out",
                                  (dir / "x.jsonl").string()},
                                 out, err);
  log::set_sink(nullptr);
  log::set_json(false);
  EXPECT_EQ(code, 0);
  ASSERT_FALSE(lines.empty());
  const auto j = ordered_json::parse(lines.back());
  EXPECT_EQ(j["event"], "ingested");
  EXPECT_EQ(j["items"], 8);
}
