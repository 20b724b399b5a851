// SPDX-License-Identifier: Apache-2.0
//
// Per-sequence Accuracy and relative-distance (RD) metrics, their
// complete / incomplete / total breakdowns per action and scheme, cumulative
// hit-rate curves and report rendering.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "completion/aggregation.hpp"
#include "completion/sequence_data.hpp"

namespace completion {

/// Fraction of frames t in [1, T] that fall on the same side of both the
/// predicted and the true moment. Moments lie in [1, T+1].
double sequence_accuracy(int tau_p, int tau_g, int length);

/// |tau_p - tau_g| / T.
double sequence_rd(int tau_p, int tau_g, int length);

struct SequenceRecord {
  std::string id;
  std::string action;
  Scheme scheme = Scheme::CR;
  int length = 0;
  int tau_p = 0;
  int tau_g = 0;
  double accuracy = 0.0;
  double rd = 0.0;

  bool is_complete() const { return tau_g <= length; }
};

/// Builds a record and fills in both metrics.
SequenceRecord make_record(std::string id, std::string action, Scheme scheme,
                           int length, int tau_p, int tau_g);

/// Means are absent when the group is empty (rendered as "-").
struct GroupStats {
  std::size_t count = 0;
  std::optional<double> accuracy;
  std::optional<double> rd;
};

struct CurvePoint {
  int threshold = 0;
  double fraction = 0.0;
};

struct SchemeResult {
  GroupStats complete;
  GroupStats incomplete;
  GroupStats total;
  /// Fraction of sequences with |tau_p - tau_g| <= x, for x = 0..max T.
  std::vector<CurvePoint> curve;
};

struct ActionResult {
  std::string action;
  std::map<Scheme, SchemeResult> schemes;
};

struct EvaluationReport {
  /// Column order (subset of kAllSchemes, in that order).
  std::vector<Scheme> schemes;
  std::vector<SequenceRecord> records;
  /// One entry per action, in order of first appearance.
  std::vector<ActionResult> actions;
  /// Pooled over every action.
  ActionResult overall;
};

/// Groups records by action and scheme. Every (action, scheme) pair must
/// cover the same sequence ids. Throws DataError on duplicates or gaps.
EvaluationReport aggregate(std::span<const SequenceRecord> records);

/// As above, and also checks that each annotation has exactly one record per
/// scheme whose T and tau_g agree with it.
EvaluationReport aggregate(std::span<const SequenceRecord> records,
                           std::span<const CompletionAnnotation> annotations);

std::vector<CurvePoint> cumulative_curve(
    std::span<const SequenceRecord> records);

enum class ReportFormat {
  /// One row per action (total group) plus pooled complete / incomplete /
  /// total footer rows.
  SummaryTable,
  /// complete / incomplete / total rows for every action, then the footer.
  BreakdownTable,
  /// Machine-readable records, for merging.
  Json,
};

std::string render_report(const EvaluationReport& report, ReportFormat format);
/// "threshold,fraction" CSV.
std::string render_curve_csv(std::span<const CurvePoint> curve);

EvaluationReport parse_report_json(std::string_view text);
/// Pools several reports. Throws DataError if their scheme sets differ.
EvaluationReport merge_reports(std::span<const EvaluationReport> reports);

/// One JSON object per line: {id, scheme, tau_p, is_complete, tau_g}.
void write_predictions(const std::filesystem::path& path,
                       std::span<const SequenceRecord> records);

}  // namespace completion
