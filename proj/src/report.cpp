#include <algorithm>
#include <map>
#include <tuple>

#include "medharness/error.hpp"
#include "medharness/runner.hpp"

namespace medharness {

std::string_view to_string(ReportFormat format) noexcept {
  switch (format) {
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::markdown: return "markdown";
  }
  return "json";
}

std::optional<ReportFormat> report_format_from_string(std::string_view name) noexcept {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  return std::nullopt;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

std::string full(double v) { return format_number(v); }

std::string checkpoint_cell(const std::optional<std::int64_t>& c) {
  return c ? std::to_string(*c) : "-";
}

}  // namespace

std::string render_run_reports(std::span<const MetricReport> reports, ReportFormat format) {
  if (reports.empty()) fail(ErrorCode::EmptyInput, "no reports to render");
  std::string out;
  switch (format) {
    case ReportFormat::json: {
      if (reports.size() == 1) return dump_pretty(to_json(reports.front())) + "\n";
      ordered_json arr = ordered_json::array();
      for (const auto& r : reports) arr.push_back(to_json(r));
      return dump_pretty(arr) + "\n";
    }
    case ReportFormat::csv:
      out = "model,checkpoint,dataset,n,accuracy,f1_weighted,f1_example\n";
      for (const auto& r : reports) {
        out += csv_field(r.model) + "," + (r.checkpoint ? std::to_string(*r.checkpoint) : "") + "," +
               csv_field(r.dataset) + "," + std::to_string(r.n) + "," + full(r.accuracy) + "," +
               full(r.f1_weighted) + "," + full(r.f1_example) + "\n";
      }
      return out;
    case ReportFormat::markdown:
      out = "| Model | Checkpoint | Dataset | N | Acc | F1 |\n";
      out += "|---|---:|---|---:|---:|---:|\n";
      for (const auto& r : reports) {
        out += "| " + md_cell(r.model) + " | " + checkpoint_cell(r.checkpoint) + " | " +
               md_cell(r.dataset) + " | " + std::to_string(r.n) + " | " + format_pct(r.accuracy) +
               " | " + format_pct(r.f1_weighted) + " |\n";
      }
      return out;
  }
  return out;
}

std::string render_series(std::span<const CheckpointSeries> series, ReportFormat format) {
  if (series.empty()) fail(ErrorCode::EmptyInput, "no checkpoint series to render");
  std::string out;
  if (format == ReportFormat::json) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : series) arr.push_back(to_json(s));
    return dump_pretty(arr) + "\n";
  }
  if (format == ReportFormat::csv) {
    out =
        "model,checkpoint,cmexam_acc,cmexam_f1,mmlu_acc,cmmlu_acc,"
        "delta_cmexam_acc,delta_cmexam_f1,delta_mmlu_acc,delta_cmmlu_acc,forgetting\n";
    for (const auto& s : series) {
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        const auto& d = s.deltas[i];
        out += csv_field(s.model) + "," + std::to_string(p.checkpoint) + "," +
               full(p.cmexam.accuracy) + "," + full(p.cmexam.f1_weighted) + "," + full(p.mmlu_acc) +
               "," + full(p.cmmlu_acc) + "," + full(d.cmexam_acc) + "," + full(d.cmexam_f1) + "," +
               full(d.mmlu_acc) + "," + full(d.cmmlu_acc) + "," + (d.forgetting ? "true" : "false") +
               "\n";
      }
    }
    return out;
  }

  out = "| Model | Checkpoint | CMExam Acc | CMExam F1 | MMLU Acc | CMMLU Acc |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      out += "| " + md_cell(s.model) + " | " + std::to_string(p.checkpoint) + " | " +
             format_pct(p.cmexam.accuracy) + " | " + format_pct(p.cmexam.f1_weighted) + " | " +
             format_pct(p.mmlu_acc) + " | " + format_pct(p.cmmlu_acc) + " |\n";
    }
  }
  std::string notes;
  for (const auto& s : series) {
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      const auto& d = s.deltas[i];
      notes += "- " + md_cell(s.model) + " @ " + std::to_string(s.points[i].checkpoint) +
               ": CMExam Acc " + format_delta_pts(d.cmexam_acc) + ", CMExam F1 " +
               format_delta_pts(d.cmexam_f1) + ", MMLU " + format_delta_pts(d.mmlu_acc) +
               ", CMMLU " + format_delta_pts(d.cmmlu_acc) +
               (d.forgetting ? " **forgetting**" : "") + "\n";
    }
  }
  if (!notes.empty()) {
    out += "\nDeltas vs checkpoint 0 (pts; forgetting = CMExam Acc up while MMLU or CMMLU down by more than " +
           format_number(series.front().threshold_pts) + "):\n\n" + notes;
  }
  return out;
}

void emit_report(std::span<const MetricReport> reports, ReportFormat format,
                 const std::filesystem::path& out) {
  write_text_file(out, render_run_reports(reports, format));
}

void emit_report(std::span<const CheckpointSeries> series, ReportFormat format,
                 const std::filesystem::path& out) {
  write_text_file(out, render_series(series, format));
}

std::vector<CheckpointSeries> series_from_reports(std::span<const MetricReport> reports,
                                                  double threshold_pts) {
  if (reports.empty()) fail(ErrorCode::EmptyInput, "no reports to group");
  struct Slot {
    const MetricReport* cmexam = nullptr;
    const MetricReport* mmlu = nullptr;
    const MetricReport* cmmlu = nullptr;
  };
  std::map<std::string, std::map<std::int64_t, Slot>> grouped;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    if (!grouped.contains(r.model)) order.push_back(r.model);
    auto& slot = grouped[r.model][r.checkpoint.value_or(0)];
    const MetricReport** target = nullptr;
    if (r.dataset == "cmexam") target = &slot.cmexam;
    else if (r.dataset == "mmlu") target = &slot.mmlu;
    else if (r.dataset == "cmmlu") target = &slot.cmmlu;
    else fail(ErrorCode::InvalidConfig, "series reports need dataset cmexam, mmlu or cmmlu, got '" + r.dataset + "'");
    if (*target != nullptr) {
      fail(ErrorCode::DuplicateCheckpoint, r.model + " checkpoint " +
                                               std::to_string(r.checkpoint.value_or(0)) +
                                               " has two " + r.dataset + " reports");
    }
    *target = &r;
  }
  std::vector<CheckpointSeries> out;
  for (const auto& model : order) {
    std::vector<CheckpointPoint> points;
    for (const auto& [ckpt, slot] : grouped[model]) {
      auto need = [&](const MetricReport* r, const char* name) {
        if (r == nullptr) {
          fail(ErrorCode::InvalidConfig, model + " checkpoint " + std::to_string(ckpt) +
                                             " is missing a " + name + " report");
        }
        return r;
      };
      points.push_back({ckpt, *need(slot.cmexam, "cmexam"), need(slot.mmlu, "mmlu")->accuracy,
                        need(slot.cmmlu, "cmmlu")->accuracy});
    }
    auto series = forgetting_series(std::move(points), threshold_pts);
    series.model = model;
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace medharness
