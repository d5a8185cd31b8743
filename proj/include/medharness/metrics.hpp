#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medharness/jsonio.hpp"
#include "medharness/types.hpp"

namespace medharness {

struct GroupScore {
  std::size_t n = 0;
  double accuracy = 0.0;

  bool operator==(const GroupScore&) const = default;
};

/// Bucket for items without a disease category or subject.
inline constexpr std::string_view kUncategorized = "(uncategorized)";

struct MetricReport {
  std::string dataset;
  std::string model;
  std::optional<std::int64_t> checkpoint;
  std::size_t n = 0;
  double accuracy = 0.0;
  /// Per-letter F1, weighted by gold support. Shown as "F1" in tables.
  double f1_weighted = 0.0;
  /// Mean set-F1 between predicted and gold label sets.
  double f1_example = 0.0;
  std::map<std::string, GroupScore> per_category;
  std::map<std::string, std::size_t> tier_histogram;
  /// Filled for few-shot runs only.
  std::map<std::string, GroupScore> per_subject;

  bool operator==(const MetricReport&) const = default;
};

struct ReportTag {
  std::string dataset;
  std::string model;
  std::optional<std::int64_t> checkpoint;
};

/// Exact-set accuracy plus both F1 variants. Predictions and gold items must
/// pair up one-to-one by id (IdMismatch / DuplicateId otherwise); list order
/// does not matter.
MetricReport score_exam(std::span<const Prediction> predictions, std::span<const ExamItem> gold,
                        const ReportTag& tag = {});

struct FewShotScore {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::map<std::string, GroupScore> per_subject;
};

/// Single-answer benchmarks (MMLU/CMMLU). Throws MultiLabelGold if any gold
/// item has more than one answer.
FewShotScore score_fewshot(std::span<const Prediction> predictions,
                           std::span<const ExamItem> gold);

ordered_json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const ordered_json& value);

// ---------------------------------------------------------------------------
// Checkpoint series
// ---------------------------------------------------------------------------

struct CheckpointPoint {
  std::int64_t checkpoint = 0;
  MetricReport cmexam;
  double mmlu_acc = 0.0;
  double cmmlu_acc = 0.0;
};

/// Differences of one point against a baseline, as fractions.
struct PointDelta {
  double cmexam_acc = 0.0;
  double cmexam_f1 = 0.0;
  double mmlu_acc = 0.0;
  double cmmlu_acc = 0.0;
  /// Domain accuracy rose while MMLU or CMMLU fell by more than the
  /// threshold.
  bool forgetting = false;
};

inline constexpr double kDefaultForgettingThresholdPts = 0.5;

PointDelta point_delta(const CheckpointPoint& baseline, const CheckpointPoint& point,
                       double threshold_pts = kDefaultForgettingThresholdPts);

struct CheckpointSeries {
  std::string model;
  std::vector<CheckpointPoint> points;  // strictly increasing checkpoints
  std::vector<PointDelta> deltas;       // deltas[i] is points[i] vs points[0]
  double threshold_pts = kDefaultForgettingThresholdPts;
};

/// Sorts by checkpoint and computes deltas against checkpoint 0. Throws
/// MissingBaseline or DuplicateCheckpoint.
CheckpointSeries forgetting_series(std::vector<CheckpointPoint> points,
                                   double threshold_pts = kDefaultForgettingThresholdPts);

ordered_json to_json(const CheckpointSeries& series);
/// Accepts `{"model", "points":[{"checkpoint","cmexam":{...},"mmlu_acc","cmmlu_acc"}]}`;
/// `cmexam` is a MetricReport or just {"accuracy","f1_weighted"}.
CheckpointSeries checkpoint_series_from_json(const ordered_json& value,
                                             double threshold_pts = kDefaultForgettingThresholdPts);

/// Fraction rendered as a percentage with one decimal ("0.393" -> "39.3").
std::string format_pct(double fraction);
/// Signed percentage-point delta with one decimal ("+4.5", "-1.6").
std::string format_delta_pts(double fraction_delta);

}  // namespace medharness
