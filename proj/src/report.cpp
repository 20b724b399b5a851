// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "completion/errors.hpp"
#include "completion/evaluation.hpp"

namespace completion {

namespace {

constexpr int kCellWidth = 7;
constexpr std::string_view kReportFormatTag = "completion-report";
constexpr int kReportVersion = 1;

std::string accuracy_cell(const GroupStats& g) {
  return g.accuracy ? fmt::format("{:.1f}", *g.accuracy * 100.0) : "-";
}

std::string rd_cell(const GroupStats& g) {
  return g.rd ? fmt::format("{:.2f}", *g.rd) : "-";
}

const GroupStats& group_of(const SchemeResult& r, std::string_view group) {
  if (group == "complete") return r.complete;
  if (group == "incomplete") return r.incomplete;
  return r.total;
}

class TableWriter {
 public:
  TableWriter(const EvaluationReport& report) : report_(report) {
    name_width_ = 10;
    for (const auto& a : report.actions) {
      name_width_ = std::max(name_width_, a.action.size());
    }
  }

  void header() {
    const std::size_t lead = name_width_ + 2 + 10 + 1 + 6 + 2;
    const std::size_t block = report_.schemes.size() * kCellWidth;
    out_ += fmt::format("{:{}}{:<{}} | {}\n", "", lead, "Accuracy (%)", block,
                        "RD");
    out_ += fmt::format("{:<{}}  {:<10} {:>6} |", "action", name_width_,
                        "group", "No.");
    for (int pass = 0; pass < 2; ++pass) {
      for (Scheme s : report_.schemes) {
        out_ += fmt::format("{:>{}}", scheme_label(s), kCellWidth);
      }
      if (pass == 0) out_ += " |";
    }
    out_ += '\n';
    rule();
  }

  void row(const ActionResult& result, std::string_view label,
           std::string_view group) {
    const SchemeResult& first = result.schemes.at(report_.schemes.front());
    out_ += fmt::format("{:<{}}  {:<10} {:>6} |", label, name_width_, group,
                        group_of(first, group).count);
    for (Scheme s : report_.schemes) {
      out_ += fmt::format("{:>{}}",
                          accuracy_cell(group_of(result.schemes.at(s), group)),
                          kCellWidth);
    }
    out_ += " |";
    for (Scheme s : report_.schemes) {
      out_ += fmt::format("{:>{}}",
                          rd_cell(group_of(result.schemes.at(s), group)),
                          kCellWidth);
    }
    out_ += '\n';
  }

  void rule() {
    const std::size_t width = name_width_ + 2 + 10 + 1 + 6 + 2 +
                              2 * report_.schemes.size() * kCellWidth + 2;
    out_ += std::string(width, '-') + '\n';
  }

  std::string take() { return std::move(out_); }

 private:
  const EvaluationReport& report_;
  std::size_t name_width_;
  std::string out_;
};

std::string render_table(const EvaluationReport& report, bool breakdown) {
  if (report.schemes.empty()) return "(no results)\n";
  TableWriter w(report);
  w.header();
  for (const auto& action : report.actions) {
    if (breakdown) {
      w.row(action, action.action, "complete");
      w.row(action, "", "incomplete");
      w.row(action, "", "total");
    } else {
      w.row(action, action.action, "total");
    }
  }
  w.rule();
  w.row(report.overall, "all", "complete");
  w.row(report.overall, "all", "incomplete");
  w.row(report.overall, "all", "total");
  return w.take();
}

std::string render_json(const EvaluationReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = kReportFormatTag;
  doc["version"] = kReportVersion;
  doc["schemes"] = nlohmann::ordered_json::array();
  for (Scheme s : report.schemes) doc["schemes"].push_back(scheme_name(s));
  doc["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    nlohmann::ordered_json row;
    row["id"] = r.id;
    row["action"] = r.action;
    row["scheme"] = scheme_name(r.scheme);
    row["T"] = r.length;
    row["tau_p"] = r.tau_p;
    row["tau_g"] = r.tau_g;
    doc["records"].push_back(std::move(row));
  }
  return doc.dump() + '\n';
}

}  // namespace

std::string render_report(const EvaluationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::SummaryTable: return render_table(report, false);
    case ReportFormat::BreakdownTable: return render_table(report, true);
    case ReportFormat::Json: return render_json(report);
  }
  return {};
}

std::string render_curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "threshold,fraction\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{:.6f}\n", p.threshold, p.fraction);
  }
  return out;
}

EvaluationReport parse_report_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != kReportFormatTag ||
        doc.at("version").get<int>() != kReportVersion) {
      throw DataError("not a version-1 completion report");
    }
    std::vector<Scheme> declared;
    for (const auto& s : doc.at("schemes")) {
      auto scheme = parse_scheme(s.get<std::string>());
      if (!scheme) throw DataError("unknown scheme '" + s.get<std::string>() + "'");
      declared.push_back(*scheme);
    }
    std::vector<SequenceRecord> records;
    for (const auto& row : doc.at("records")) {
      auto scheme = parse_scheme(row.at("scheme").get<std::string>());
      if (!scheme) throw DataError("record with unknown scheme");
      try {
        records.push_back(make_record(
            row.at("id").get<std::string>(), row.at("action").get<std::string>(),
            *scheme, row.at("T").get<int>(), row.at("tau_p").get<int>(),
            row.at("tau_g").get<int>()));
      } catch (const std::out_of_range& e) {
        throw DataError(std::string("record out of range: ") + e.what());
      }
    }
    EvaluationReport report = aggregate(records);
    std::sort(declared.begin(), declared.end());
    auto present = report.schemes;
    std::sort(present.begin(), present.end());
    if (declared != present) {
      throw DataError("declared schemes do not match the records");
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

EvaluationReport merge_reports(std::span<const EvaluationReport> reports) {
  if (reports.empty()) throw DataError("nothing to merge");
  std::vector<SequenceRecord> records;
  for (const auto& r : reports) {
    if (r.schemes != reports.front().schemes) {
      throw DataError("cannot merge reports with different scheme sets");
    }
    records.insert(records.end(), r.records.begin(), r.records.end());
  }
  return aggregate(records);
}

}  // namespace completion
