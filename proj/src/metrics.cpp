#include "medharness/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "medharness/error.hpp"

namespace medharness {

namespace {

struct Pair {
  const ExamItem* gold;
  const Prediction* prediction;
};

/// Pairs predictions with gold items by id, sorted by id so every
/// accumulation below runs in the same order whatever the input order.
std::vector<Pair> pair_up(std::span<const Prediction> predictions,
                          std::span<const ExamItem> gold) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) {
      fail(ErrorCode::DuplicateId, "duplicate prediction id '" + p.id + "'");
    }
  }
  std::set<std::string> gold_ids;
  std::vector<Pair> pairs;
  pairs.reserve(gold.size());
  for (const auto& item : gold) {
    if (!gold_ids.insert(item.id).second) {
      fail(ErrorCode::DuplicateId, "duplicate gold id '" + item.id + "'");
    }
    auto it = by_id.find(item.id);
    if (it == by_id.end()) fail(ErrorCode::IdMismatch, "no prediction for '" + item.id + "'");
    pairs.push_back({&item, it->second});
  }
  if (predictions.size() != gold.size()) {
    for (const auto& p : predictions) {
      if (!gold_ids.contains(p.id)) {
        fail(ErrorCode::IdMismatch, "prediction '" + p.id + "' has no gold item");
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.gold->id < b.gold->id; });
  return pairs;
}

double set_f1(LabelSet predicted, LabelSet gold) {
  if (predicted.empty() && gold.empty()) return 1.0;
  const auto denominator = predicted.size() + gold.size();
  return 2.0 * static_cast<double>((predicted & gold).size()) / static_cast<double>(denominator);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct Tally {
  std::size_t n = 0;
  std::size_t correct = 0;
  GroupScore score() const { return {n, ratio(correct, n)}; }
};

}  // namespace

MetricReport score_exam(std::span<const Prediction> predictions, std::span<const ExamItem> gold,
                        const ReportTag& tag) {
  const auto pairs = pair_up(predictions, gold);

  MetricReport report;
  report.dataset = tag.dataset;
  report.model = tag.model;
  report.checkpoint = tag.checkpoint;
  report.n = pairs.size();

  std::array<std::size_t, 26> tp{}, fp{}, fn{};
  std::size_t correct = 0;
  double example_f1_sum = 0.0;
  std::map<std::string, Tally> categories;

  for (const auto& [item, prediction] : pairs) {
    const LabelSet predicted = prediction->extraction.labels;
    const LabelSet truth = item->answer;
    const bool exact = predicted == truth;
    correct += exact ? 1 : 0;
    example_f1_sum += set_f1(predicted, truth);
    for (int c = 0; c < 26; ++c) {
      const char label = static_cast<char>('A' + c);
      const bool p = predicted.contains(label);
      const bool g = truth.contains(label);
      tp[c] += p && g;
      fp[c] += p && !g;
      fn[c] += !p && g;
    }
    auto& cat = categories[item->meta.disease_category.value_or(std::string(kUncategorized))];
    ++cat.n;
    cat.correct += exact ? 1 : 0;
    ++report.tier_histogram[std::string(to_string(prediction->extraction.tier))];
  }

  report.accuracy = ratio(correct, report.n);
  report.f1_example = report.n == 0 ? 0.0 : example_f1_sum / static_cast<double>(report.n);

  double weighted = 0.0;
  std::size_t total_support = 0;
  for (int c = 0; c < 26; ++c) {
    const std::size_t support = tp[c] + fn[c];
    if (support == 0) continue;
    const double f1 = 2.0 * static_cast<double>(tp[c]) /
                      static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    weighted += static_cast<double>(support) * f1;
    total_support += support;
  }
  report.f1_weighted = total_support == 0 ? 0.0 : weighted / static_cast<double>(total_support);

  for (const auto& [name, tally] : categories) report.per_category[name] = tally.score();
  return report;
}

FewShotScore score_fewshot(std::span<const Prediction> predictions,
                           std::span<const ExamItem> gold) {
  for (const auto& item : gold) {
    if (item.answer.size() != 1) {
      fail(ErrorCode::MultiLabelGold, "few-shot gold '" + item.id + "' has " +
                                          std::to_string(item.answer.size()) + " answers");
    }
  }
  const auto pairs = pair_up(predictions, gold);
  FewShotScore score;
  score.n = pairs.size();
  std::size_t correct = 0;
  std::map<std::string, Tally> subjects;
  for (const auto& [item, prediction] : pairs) {
    const bool exact = prediction->extraction.labels == item->answer;
    correct += exact ? 1 : 0;
    auto& t = subjects[item->meta.subject.value_or(std::string(kUncategorized))];
    ++t.n;
    t.correct += exact ? 1 : 0;
  }
  score.accuracy = ratio(correct, score.n);
  for (const auto& [name, tally] : subjects) score.per_subject[name] = tally.score();
  return score;
}

namespace {

ordered_json to_json(const std::map<std::string, GroupScore>& groups) {
  ordered_json out = ordered_json::object();
  for (const auto& [name, g] : groups) out[name] = {{"n", g.n}, {"accuracy", g.accuracy}};
  return out;
}

std::map<std::string, GroupScore> groups_from_json(const ordered_json& value) {
  std::map<std::string, GroupScore> out;
  for (const auto& [name, g] : value.items()) {
    out[name] = {g.at("n").get<std::size_t>(), g.at("accuracy").get<double>()};
  }
  return out;
}

}  // namespace

ordered_json to_json(const MetricReport& report) {
  ordered_json tiers = ordered_json::object();
  for (const auto& [tier, count] : report.tier_histogram) tiers[tier] = count;
  ordered_json out{
      {"dataset", report.dataset},
      {"model", report.model},
      {"checkpoint", report.checkpoint ? ordered_json(*report.checkpoint) : ordered_json(nullptr)},
      {"n", report.n},
      {"accuracy", report.accuracy},
      {"f1_weighted", report.f1_weighted},
      {"f1_example", report.f1_example},
      {"per_category", to_json(report.per_category)},
      {"tier_histogram", std::move(tiers)},
  };
  if (!report.per_subject.empty()) out["per_subject"] = to_json(report.per_subject);
  return out;
}

MetricReport metric_report_from_json(const ordered_json& value) {
  MetricReport r;
  try {
    r.dataset = value.value("dataset", std::string{});
    r.model = value.value("model", std::string{});
    if (value.contains("checkpoint") && !value.at("checkpoint").is_null()) {
      r.checkpoint = value.at("checkpoint").get<std::int64_t>();
    }
    r.n = value.value("n", std::size_t{0});
    r.accuracy = value.at("accuracy").get<double>();
    r.f1_weighted = value.value("f1_weighted", 0.0);
    r.f1_example = value.value("f1_example", 0.0);
    if (value.contains("per_category")) r.per_category = groups_from_json(value.at("per_category"));
    if (value.contains("tier_histogram")) {
      for (const auto& [tier, count] : value.at("tier_histogram").items()) {
        r.tier_histogram[tier] = count.get<std::size_t>();
      }
    }
    if (value.contains("per_subject")) r.per_subject = groups_from_json(value.at("per_subject"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("metric report: ") + e.what());
  }
  for (double f : {r.accuracy, r.f1_weighted, r.f1_example}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      fail(ErrorCode::SchemaMismatch, "metric report fractions must lie in [0,1]");
    }
  }
  return r;
}

PointDelta point_delta(const CheckpointPoint& baseline, const CheckpointPoint& point,
                       double threshold_pts) {
  PointDelta d;
  d.cmexam_acc = point.cmexam.accuracy - baseline.cmexam.accuracy;
  d.cmexam_f1 = point.cmexam.f1_weighted - baseline.cmexam.f1_weighted;
  d.mmlu_acc = point.mmlu_acc - baseline.mmlu_acc;
  d.cmmlu_acc = point.cmmlu_acc - baseline.cmmlu_acc;
  const double threshold = threshold_pts / 100.0;
  d.forgetting = d.cmexam_acc > 0.0 && (d.mmlu_acc < -threshold || d.cmmlu_acc < -threshold);
  return d;
}

CheckpointSeries forgetting_series(std::vector<CheckpointPoint> points, double threshold_pts) {
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.checkpoint < b.checkpoint; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].checkpoint == points[i - 1].checkpoint) {
      fail(ErrorCode::DuplicateCheckpoint,
           "checkpoint " + std::to_string(points[i].checkpoint) + " appears twice");
    }
  }
  if (points.empty() || points.front().checkpoint != 0) {
    fail(ErrorCode::MissingBaseline, "series needs a checkpoint 0 baseline");
  }
  CheckpointSeries series;
  series.model = points.front().cmexam.model;
  series.threshold_pts = threshold_pts;
  for (const auto& p : points) series.deltas.push_back(point_delta(points.front(), p, threshold_pts));
  series.points = std::move(points);
  return series;
}

ordered_json to_json(const CheckpointSeries& series) {
  ordered_json points = ordered_json::array();
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    const auto& d = series.deltas[i];
    points.push_back({
        {"checkpoint", p.checkpoint},
        {"cmexam", to_json(p.cmexam)},
        {"mmlu_acc", p.mmlu_acc},
        {"cmmlu_acc", p.cmmlu_acc},
        {"delta",
         {{"cmexam_acc", d.cmexam_acc},
          {"cmexam_f1", d.cmexam_f1},
          {"mmlu_acc", d.mmlu_acc},
          {"cmmlu_acc", d.cmmlu_acc},
          {"forgetting", d.forgetting}}},
    });
  }
  return {{"model", series.model},
          {"threshold_pts", series.threshold_pts},
          {"points", std::move(points)}};
}

CheckpointSeries checkpoint_series_from_json(const ordered_json& value, double threshold_pts) {
  std::vector<CheckpointPoint> points;
  std::string model;
  try {
    model = value.at("model").get<std::string>();
    for (const auto& p : value.at("points")) {
      CheckpointPoint point;
      point.checkpoint = p.at("checkpoint").get<std::int64_t>();
      point.cmexam = metric_report_from_json(p.at("cmexam"));
      if (point.cmexam.model.empty()) point.cmexam.model = model;
      if (!point.cmexam.checkpoint) point.cmexam.checkpoint = point.checkpoint;
      point.mmlu_acc = p.at("mmlu_acc").get<double>();
      point.cmmlu_acc = p.at("cmmlu_acc").get<double>();
      points.push_back(std::move(point));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("checkpoint series: ") + e.what());
  }
  auto series = forgetting_series(std::move(points), threshold_pts);
  series.model = model;
  return series;
}

std::string format_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::string format_delta_pts(double fraction_delta) {
  const double pts = fraction_delta * 100.0;
  if (std::fabs(pts) < 0.05) return "0.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f", pts);
  return buf;
}

}  // namespace medharness
