#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "../support/scenario.hpp"
#include "medharness/error.hpp"
#include "medharness/metrics.hpp"

using namespace medharness;

namespace {

Prediction pred(const std::string& id, LabelSet labels, Tier tier = Tier::cue) {
  Prediction p;
  p.id = id;
  p.extraction.labels = labels;
  p.extraction.tier = tier;
  return p;
}

ExamItem gold(const std::string& id, LabelSet answer, std::optional<std::string> cat = std::nullopt) {
  ExamItem item;
  item.id = id;
  item.question = "q";
  for (char l = 'A'; l <= 'E'; ++l) item.options.push_back({l, std::string(1, l)});
  item.answer = answer;
  item.meta.disease_category = cat;
  return item;
}

std::set<char> to_set(LabelSet s) {
  auto v = s.labels();
  return {v.begin(), v.end()};
}

}  // namespace

TEST(ScoreExam, HandComputed) {
  std::vector<ExamItem> g{gold("1", {'A'}, "x"), gold("2", {'B', 'C'}, "x"), gold("3", {'D'})};
  std::vector<Prediction> p{pred("1", {'A'}), pred("2", {'B'}), pred("3", {'E'}, Tier::levenshtein)};
  const auto r = score_exam(p, g, {"cmexam", "m", 750});
  EXPECT_EQ(r.n, 3u);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0 / 3);
  // set-F1: 1, 2/3, 0
  EXPECT_DOUBLE_EQ(r.f1_example, (1.0 + 2.0 / 3 + 0.0) / 3);
  // per letter: A f1=1 (s1), B f1=1 (s1), C f1=0 (s1), D f1=0 (s1)
  EXPECT_DOUBLE_EQ(r.f1_weighted, 0.5);
  EXPECT_EQ(r.per_category.at("x").n, 2u);
  EXPECT_DOUBLE_EQ(r.per_category.at("x").accuracy, 0.5);
  EXPECT_EQ(r.per_category.at(std::string(kUncategorized)).n, 1u);
  EXPECT_EQ(r.tier_histogram.at("cue"), 2u);
  EXPECT_EQ(r.tier_histogram.at("levenshtein"), 1u);
  EXPECT_EQ(r.checkpoint, 750);
}

TEST(ScoreExam, OrderIndependent) {
  std::vector<ExamItem> g{gold("a", {'A'}), gold("b", {'B'}), gold("c", {'C', 'D'})};
  std::vector<Prediction> p{pred("c", {'C'}), pred("a", {'A'}), pred("b", {'A'})};
  auto r1 = score_exam(p, g);
  std::reverse(g.begin(), g.end());
  auto r2 = score_exam(p, g);
  EXPECT_EQ(r1, r2);
}

TEST(ScoreExam, BoundsAndPerfect) {
  std::vector<ExamItem> g{gold("1", {'A'}), gold("2", {'B', 'E'})};
  std::vector<Prediction> p{pred("1", {'A'}), pred("2", {'B', 'E'})};
  const auto r = score_exam(p, g);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.f1_weighted, 1.0);
  EXPECT_EQ(r.f1_example, 1.0);
}

TEST(ScoreExam, EmptyPredictionScoresZero) {
  std::vector<ExamItem> g{gold("1", {'A'})};
  std::vector<Prediction> p{pred("1", {}, Tier::none)};
  const auto r = score_exam(p, g);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.f1_weighted, 0.0);
  EXPECT_EQ(r.f1_example, 0.0);
}

TEST(ScoreExam, PairingErrors) {
  std::vector<ExamItem> g{gold("1", {'A'}), gold("2", {'B'})};
  std::vector<Prediction> missing{pred("1", {'A'})};
  std::vector<Prediction> extra{pred("1", {'A'}), pred("2", {'B'}), pred("3", {'B'})};
  std::vector<Prediction> dup{pred("1", {'A'}), pred("1", {'B'})};
  auto code = [&](std::span<const Prediction> p) {
    try {
      score_exam(p, g);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::RunFailed;
  };
  EXPECT_EQ(code(missing), ErrorCode::IdMismatch);
  EXPECT_EQ(code(extra), ErrorCode::IdMismatch);
  EXPECT_EQ(code(dup), ErrorCode::DuplicateId);
}

TEST(ScoreExam, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 50)(rng);
    std::vector<ExamItem> g;
    std::vector<Prediction> p;
    std::vector<oracle::Case> cases;
    for (int i = 0; i < n; ++i) {
      auto random_set = [&](bool allow_empty) {
        LabelSet s;
        const int k = std::uniform_int_distribution<int>(allow_empty ? 0 : 1, 3)(rng);
        while (static_cast<int>(s.size()) < k) s.insert(static_cast<char>('A' + rng() % 5));
        return s;
      };
      const std::string id = std::to_string(i);
      const LabelSet gs = random_set(false);
      const LabelSet ps = random_set(true);
      g.push_back(gold(id, gs));
      p.push_back(pred(id, ps));
      cases.push_back({to_set(gs), to_set(ps)});
    }
    const auto r = score_exam(p, g);
    const auto o = oracle::tally(cases);
    ASSERT_NEAR(r.accuracy, o.accuracy, 1e-9);
    ASSERT_NEAR(r.f1_example, o.f1_example, 1e-9);
    ASSERT_NEAR(r.f1_weighted, o.f1_weighted, 1e-9);
  }
}

TEST(ScoreFewShot, PerSubject) {
  auto g1 = gold("1", {'A'});
  g1.meta.subject = "anatomy";
  auto g2 = gold("2", {'B'});
  g2.meta.subject = "anatomy";
  auto g3 = gold("3", {'C'});
  g3.meta.subject = "virology";
  std::vector<ExamItem> g{g1, g2, g3};
  std::vector<Prediction> p{pred("1", {'A'}), pred("2", {'C'}), pred("3", {'C'})};
  const auto r = score_fewshot(p, g);
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.per_subject.at("anatomy").accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.per_subject.at("virology").accuracy, 1.0);
  g[0].answer = LabelSet{'A', 'B'};
  EXPECT_THROW(score_fewshot(p, g), Error);
}

TEST(ReportJson, RoundTrip) {
  std::vector<ExamItem> g{gold("1", {'A'}, "x"), gold("2", {'B', 'C'})};
  std::vector<Prediction> p{pred("1", {'A'}), pred("2", {'B'})};
  const auto r = score_exam(p, g, {"cmexam", "llama", 3000});
  EXPECT_EQ(metric_report_from_json(to_json(r)), r);
  EXPECT_EQ(dump_pretty(to_json(metric_report_from_json(to_json(r)))), dump_pretty(to_json(r)));
}

TEST(ReportJson, RejectsOutOfRange) {
  EXPECT_THROW(metric_report_from_json(ordered_json{{"accuracy", 1.5}}), Error);
  EXPECT_THROW(metric_report_from_json(ordered_json{{"model", "x"}}), Error);
}

TEST(Formatting, OneDecimal) {
  EXPECT_EQ(format_pct(0.393), "39.3");
  EXPECT_EQ(format_pct(0.43), "43.0");
  EXPECT_EQ(format_pct(1.0), "100.0");
  EXPECT_EQ(format_delta_pts(0.438 - 0.393), "+4.5");
  EXPECT_EQ(format_delta_pts(0.570 - 0.586), "-1.6");
  EXPECT_EQ(format_delta_pts(0.544 - 0.544), "0.0");
  EXPECT_EQ(format_delta_pts(-0.0001), "0.0");
}

namespace {

CheckpointPoint point(std::int64_t c, double acc, double f1, double mmlu, double cmmlu) {
  CheckpointPoint p;
  p.checkpoint = c;
  p.cmexam.accuracy = acc;
  p.cmexam.f1_weighted = f1;
  p.mmlu_acc = mmlu;
  p.cmmlu_acc = cmmlu;
  return p;
}

}  // namespace

TEST(Forgetting, DeltasAndFlags) {
  auto s = forgetting_series({point(3000, 0.438, 0.433, 0.570, 0.418),
                              point(0, 0.393, 0.388, 0.586, 0.427),
                              point(750, 0.40, 0.39, 0.584, 0.426)});
  ASSERT_EQ(s.points.size(), 3u);
  EXPECT_EQ(s.points[0].checkpoint, 0);
  EXPECT_EQ(s.points[2].checkpoint, 3000);
  EXPECT_FALSE(s.deltas[0].forgetting);
  EXPECT_FALSE(s.deltas[1].forgetting);  // drops of 0.2 / 0.1 pts stay under 0.5
  EXPECT_TRUE(s.deltas[2].forgetting);
  EXPECT_NEAR(s.deltas[2].cmexam_acc * 100, 4.5, 1e-9);
}

TEST(Forgetting, NoFlagWhenDomainDoesNotImprove) {
  auto s = forgetting_series({point(0, 0.5, 0.5, 0.6, 0.6), point(10, 0.49, 0.5, 0.5, 0.5)});
  EXPECT_FALSE(s.deltas[1].forgetting);
}

TEST(Forgetting, Errors) {
  auto code = [](std::vector<CheckpointPoint> pts) {
    try {
      forgetting_series(std::move(pts));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::RunFailed;
  };
  EXPECT_EQ(code({point(750, 0.4, 0.4, 0.5, 0.5)}), ErrorCode::MissingBaseline);
  EXPECT_EQ(code({point(0, 0.4, 0.4, 0.5, 0.5), point(0, 0.4, 0.4, 0.5, 0.5)}),
            ErrorCode::DuplicateCheckpoint);
}

TEST(Forgetting, SeriesJsonRoundTrip) {
  auto s = forgetting_series({point(0, 0.393, 0.388, 0.586, 0.427), point(3000, 0.438, 0.433, 0.570, 0.418)});
  s.model = "Llama-2-13B";
  const auto back = checkpoint_series_from_json(to_json(s));
  EXPECT_EQ(back.model, s.model);
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_EQ(back.points[1].cmexam.accuracy, 0.438);
  EXPECT_EQ(back.deltas[1].forgetting, s.deltas[1].forgetting);
}
