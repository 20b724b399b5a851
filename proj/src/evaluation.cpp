// SPDX-License-Identifier: Apache-2.0
#include "completion/evaluation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

#include "completion/errors.hpp"

namespace completion {

namespace {

void check_moments(int tau_p, int tau_g, int length) {
  if (length < 1 || tau_p < 1 || tau_p > length + 1 || tau_g < 1 ||
      tau_g > length + 1) {
    throw std::out_of_range("completion moments must lie in [1, T+1]");
  }
}

GroupStats group_stats(std::span<const SequenceRecord* const> members) {
  GroupStats stats;
  stats.count = members.size();
  if (members.empty()) return stats;
  double acc = 0.0;
  double rd = 0.0;
  for (const auto* r : members) {
    acc += r->accuracy;
    rd += r->rd;
  }
  stats.accuracy = acc / static_cast<double>(members.size());
  stats.rd = rd / static_cast<double>(members.size());
  return stats;
}

SchemeResult scheme_result(const std::vector<const SequenceRecord*>& members) {
  std::vector<const SequenceRecord*> complete;
  std::vector<const SequenceRecord*> incomplete;
  std::vector<SequenceRecord> copies;
  for (const auto* r : members) {
    (r->is_complete() ? complete : incomplete).push_back(r);
    copies.push_back(*r);
  }
  return {group_stats(complete), group_stats(incomplete), group_stats(members),
          cumulative_curve(copies)};
}

}  // namespace

double sequence_accuracy(int tau_p, int tau_g, int length) {
  check_moments(tau_p, tau_g, length);
  // Frames in [min, max) are on opposite sides; both moments are <= T+1 so
  // that range always lies inside [1, T].
  return static_cast<double>(length - std::abs(tau_p - tau_g)) / length;
}

double sequence_rd(int tau_p, int tau_g, int length) {
  check_moments(tau_p, tau_g, length);
  return static_cast<double>(std::abs(tau_p - tau_g)) / length;
}

SequenceRecord make_record(std::string id, std::string action, Scheme scheme,
                           int length, int tau_p, int tau_g) {
  return {std::move(id),
          std::move(action),
          scheme,
          length,
          tau_p,
          tau_g,
          sequence_accuracy(tau_p, tau_g, length),
          sequence_rd(tau_p, tau_g, length)};
}

std::vector<CurvePoint> cumulative_curve(
    std::span<const SequenceRecord> records) {
  if (records.empty()) return {};
  int max_length = 0;
  std::vector<int> hist;
  for (const auto& r : records) max_length = std::max(max_length, r.length);
  hist.assign(static_cast<std::size_t>(max_length) + 2, 0);
  for (const auto& r : records) {
    ++hist[static_cast<std::size_t>(std::abs(r.tau_p - r.tau_g))];
  }
  std::vector<CurvePoint> curve;
  int hits = 0;
  const auto n = static_cast<double>(records.size());
  for (int x = 0; x <= max_length; ++x) {
    hits += hist[static_cast<std::size_t>(x)];
    curve.push_back({x, hits / n});
  }
  return curve;
}

EvaluationReport aggregate(std::span<const SequenceRecord> records) {
  EvaluationReport report;
  report.records.assign(records.begin(), records.end());

  std::set<Scheme> present;
  std::vector<std::string> actions;
  std::set<std::tuple<std::string, Scheme, std::string>> seen;
  for (const auto& r : records) {
    present.insert(r.scheme);
    if (std::find(actions.begin(), actions.end(), r.action) == actions.end()) {
      actions.push_back(r.action);
    }
    if (!seen.emplace(r.action, r.scheme, r.id).second) {
      throw DataError("duplicate record for sequence '" + r.id + "' (action '" +
                      r.action + "', scheme " +
                      std::string(scheme_name(r.scheme)) + ")");
    }
  }
  for (Scheme s : kAllSchemes) {
    if (present.contains(s)) report.schemes.push_back(s);
  }

  // Every scheme of an action must cover the same ids.
  for (const auto& action : actions) {
    std::optional<std::set<std::string>> reference;
    for (Scheme s : report.schemes) {
      std::set<std::string> ids;
      for (const auto& r : records) {
        if (r.action == action && r.scheme == s) ids.insert(r.id);
      }
      if (reference && *reference != ids) {
        throw DataError("action '" + action + "': scheme " +
                        std::string(scheme_name(s)) +
                        " covers a different set of sequences");
      }
      reference = std::move(ids);
    }
  }

  report.overall.action = "all";
  for (Scheme s : report.schemes) {
    std::vector<const SequenceRecord*> pooled;
    for (const auto& r : report.records) {
      if (r.scheme == s) pooled.push_back(&r);
    }
    report.overall.schemes[s] = scheme_result(pooled);
  }
  for (const auto& action : actions) {
    ActionResult result{action, {}};
    for (Scheme s : report.schemes) {
      std::vector<const SequenceRecord*> members;
      for (const auto& r : report.records) {
        if (r.scheme == s && r.action == action) members.push_back(&r);
      }
      result.schemes[s] = scheme_result(members);
    }
    report.actions.push_back(std::move(result));
  }
  return report;
}

EvaluationReport aggregate(std::span<const SequenceRecord> records,
                           std::span<const CompletionAnnotation> annotations) {
  EvaluationReport report = aggregate(records);
  std::set<std::string> annotated;
  for (const auto& a : annotations) annotated.insert(a.sequence_id());
  for (const auto& r : records) {
    if (!annotated.contains(r.id)) {
      throw DataError("record for unannotated sequence '" + r.id + "'");
    }
  }
  for (Scheme s : report.schemes) {
    for (const auto& a : annotations) {
      std::size_t hits = 0;
      for (const auto& r : records) {
        if (r.scheme != s || r.id != a.sequence_id()) continue;
        ++hits;
        if (r.length != a.length() || r.tau_g != a.tau()) {
          throw DataError("record for sequence '" + r.id +
                          "' disagrees with its annotation");
        }
      }
      if (hits != 1) {
        throw DataError("sequence '" + a.sequence_id() + "' has " +
                        std::to_string(hits) + " records for scheme " +
                        std::string(scheme_name(s)));
      }
    }
  }
  return report;
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const SequenceRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) {
    nlohmann::ordered_json row;
    row["id"] = r.id;
    row["scheme"] = scheme_name(r.scheme);
    row["tau_p"] = r.tau_p;
    row["is_complete"] = r.tau_p <= r.length;
    row["tau_g"] = r.tau_g;
    out << row.dump() << '\n';
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace completion
