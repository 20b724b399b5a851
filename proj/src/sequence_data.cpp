// SPDX-License-Identifier: Apache-2.0
#include "completion/sequence_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "completion/errors.hpp"

namespace completion {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFeatureMagic = "CMV1";

std::string tick(const std::string& id) { return "'" + id + "'"; }

}  // namespace

// ---------------------------------------------------------------------------
// FeatureSequence

FeatureSequence FeatureSequence::create(std::string id, std::size_t dim,
                                        std::vector<float> values,
                                        std::optional<std::string> subject) {
  if (dim == 0) {
    throw DataError("sequence " + tick(id) + ": feature dimension is zero");
  }
  if (values.size() % dim != 0) {
    throw DataError("sequence " + tick(id) +
                    ": value count is not a multiple of the dimension");
  }
  if (values.size() / dim < 2) {
    throw DataError("sequence " + tick(id) + ": needs at least 2 frames");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("sequence " + tick(id) + ": non-finite value at frame " +
                      std::to_string(i / dim + 1));
    }
  }
  FeatureSequence seq;
  seq.id_ = std::move(id);
  seq.subject_ = std::move(subject);
  seq.dim_ = dim;
  seq.values_ = std::move(values);
  return seq;
}

FeatureSequence FeatureSequence::with_subject(
    std::optional<std::string> subject) const {
  FeatureSequence copy = *this;
  copy.subject_ = std::move(subject);
  return copy;
}

// ---------------------------------------------------------------------------
// CompletionAnnotation

CompletionAnnotation::CompletionAnnotation(std::string id, int length, int tau,
                                           std::optional<std::string> subject)
    : id_(std::move(id)),
      length_(length),
      tau_(tau),
      subject_(std::move(subject)) {
  if (length_ < 2) {
    throw DataError("sequence " + tick(id_) + ": T must be at least 2");
  }
  if (tau_ < 1 || tau_ > length_ + 1) {
    throw DataError("sequence " + tick(id_) + ": tau out of range (tau=" +
                    std::to_string(tau_) + ", T=" + std::to_string(length_) +
                    ")");
  }
}

CompletionAnnotation CompletionAnnotation::complete(
    std::string id, int length, int tau, std::optional<std::string> subject) {
  if (tau > length) {
    throw DataError("sequence " + tick(id) + ": tau out of range (tau=" +
                    std::to_string(tau) + ", T=" + std::to_string(length) +
                    ")");
  }
  return {std::move(id), length, tau, std::move(subject)};
}

CompletionAnnotation CompletionAnnotation::incomplete(
    std::string id, int length, std::optional<std::string> subject) {
  return {std::move(id), length, length + 1, std::move(subject)};
}

std::vector<FrameLabel> frame_labels(const CompletionAnnotation& annotation,
                                     int length) {
  std::vector<FrameLabel> labels;
  labels.reserve(static_cast<std::size_t>(length));
  const int tau = annotation.tau();
  const bool complete = annotation.is_complete();
  for (int t = 1; t <= length; ++t) {
    FrameLabel label{t, t >= tau ? Phase::Post : Phase::Pre, std::nullopt};
    if (complete) {
      label.r = static_cast<double>(t - tau) / static_cast<double>(tau);
    }
    labels.push_back(label);
  }
  return labels;
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].id() == id) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Splits

std::vector<DatasetSplit> make_split(
    std::span<const CompletionAnnotation> annotations,
    const SplitPolicy& policy) {
  std::set<std::string> known;
  for (const auto& a : annotations) known.insert(a.sequence_id());

  if (const auto* fixed = std::get_if<FixedSplit>(&policy)) {
    DatasetSplit split{"fixed", {}, {}};
    std::set<std::string> seen;
    for (const auto& entry : fixed->entries) {
      if (!known.contains(entry.id)) {
        throw DataError("split references unknown sequence " +
                        tick(entry.id));
      }
      if (!seen.insert(entry.id).second) {
        throw DataError("split lists sequence " + tick(entry.id) +
                        " more than once");
      }
      (entry.role == SplitRole::Train ? split.train_ids : split.test_ids)
          .push_back(entry.id);
    }
    return {split};
  }

  std::vector<std::string> subjects;
  for (const auto& a : annotations) {
    if (!a.subject()) {
      throw DataError("sequence " + tick(a.sequence_id()) +
                      " has no subject; leave-one-subject-out needs one");
    }
    if (std::find(subjects.begin(), subjects.end(), *a.subject()) ==
        subjects.end()) {
      subjects.push_back(*a.subject());
    }
  }
  std::vector<DatasetSplit> splits;
  for (const auto& subject : subjects) {
    DatasetSplit split{subject, {}, {}};
    for (const auto& a : annotations) {
      (*a.subject() == subject ? split.test_ids : split.train_ids)
          .push_back(a.sequence_id());
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

Dataset select(const Dataset& dataset, std::span<const std::string> ids) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    index.emplace(dataset.sequences[i].id(), i);
  }
  Dataset out;
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw DataError("sequence " + tick(id) + " is not in the dataset");
    }
    out.sequences.push_back(dataset.sequences[it->second]);
    out.annotations.push_back(dataset.annotations[it->second]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

void write_feature_file(const fs::path& path, const FeatureSequence& sequence) {
  io::BinaryWriter w(path);
  w.magic(kFeatureMagic);
  w.u32(static_cast<std::uint32_t>(sequence.length()));
  w.u32(static_cast<std::uint32_t>(sequence.dim()));
  for (float v : sequence.values()) w.f32(v);
  w.finish();
}

FeatureSequence read_feature_file(const fs::path& path, std::string id) {
  io::BinaryReader r(path);
  if (!r.magic(kFeatureMagic)) {
    throw DataError("sequence " + tick(id) + ": bad magic in '" +
                    path.string() + "'");
  }
  const std::uint32_t length = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint64_t count = std::uint64_t{length} * dim;
  const auto file_size = fs::file_size(path);
  if (file_size != 12 + 4 * count) {
    throw DataError("sequence " + tick(id) + ": '" + path.string() +
                    "' size does not match its header");
  }
  std::vector<float> values(static_cast<std::size_t>(count));
  for (auto& v : values) v = r.f32();
  return FeatureSequence::create(std::move(id), dim, std::move(values));
}

namespace {

std::vector<nlohmann::json> read_json_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<nlohmann::json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  return rows;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace

std::vector<CompletionAnnotation> read_annotations(const fs::path& path) {
  std::vector<CompletionAnnotation> out;
  std::set<std::string> seen;
  for (const auto& row : read_json_lines(path)) {
    try {
      auto id = row.at("id").get<std::string>();
      const int length = row.at("T").get<int>();
      std::optional<std::string> subject;
      if (auto it = row.find("subject"); it != row.end() && !it->is_null()) {
        subject = it->get<std::string>();
      }
      if (!seen.insert(id).second) {
        throw DataError("duplicate annotation for sequence " + tick(id));
      }
      const auto& tau = row.at("tau");
      if (tau.is_null()) {
        out.push_back(CompletionAnnotation::incomplete(std::move(id), length,
                                                       std::move(subject)));
      } else {
        out.push_back(CompletionAnnotation::complete(
            std::move(id), length, tau.get<int>(), std::move(subject)));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": malformed annotation: " + e.what());
    }
  }
  return out;
}

void write_annotations(const fs::path& path,
                       std::span<const CompletionAnnotation> annotations) {
  std::vector<std::string> lines;
  for (const auto& a : annotations) {
    ordered_json row;
    row["id"] = a.sequence_id();
    row["T"] = a.length();
    row["tau"] = a.is_complete() ? ordered_json(a.tau()) : ordered_json();
    if (a.subject()) row["subject"] = *a.subject();
    lines.push_back(row.dump());
  }
  write_lines(path, lines);
}

std::vector<SplitEntry> read_split_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw DataError("split file '" + path.string() + "' does not exist");
  }
  std::vector<SplitEntry> entries;
  for (const auto& row : read_json_lines(path)) {
    try {
      const auto role = row.at("role").get<std::string>();
      if (role != "train" && role != "test") {
        throw DataError(path.string() + ": unknown role '" + role + "'");
      }
      entries.push_back({row.at("id").get<std::string>(),
                         role == "train" ? SplitRole::Train : SplitRole::Test});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": malformed split entry: " + e.what());
    }
  }
  return entries;
}

void write_split_file(const fs::path& path,
                      std::span<const SplitEntry> entries) {
  std::vector<std::string> lines;
  for (const auto& e : entries) {
    ordered_json row;
    row["id"] = e.id;
    row["role"] = e.role == SplitRole::Train ? "train" : "test";
    lines.push_back(row.dump());
  }
  write_lines(path, lines);
}

Dataset load_dataset(const fs::path& features_dir,
                     const fs::path& annotations_path) {
  if (!fs::is_directory(features_dir)) {
    throw DataError("feature directory '" + features_dir.string() +
                    "' does not exist");
  }
  auto annotations = read_annotations(annotations_path);

  std::set<std::string> annotated;
  for (const auto& a : annotations) annotated.insert(a.sequence_id());
  std::vector<std::string> orphans;
  for (const auto& entry : fs::directory_iterator(features_dir)) {
    if (entry.path().extension() != ".cmv") continue;
    auto id = entry.path().stem().string();
    if (!annotated.contains(id)) orphans.push_back(id);
  }
  if (!orphans.empty()) {
    std::sort(orphans.begin(), orphans.end());
    throw DataError("missing annotation for sequence " + tick(orphans[0]));
  }

  Dataset ds;
  std::optional<std::size_t> dim;
  for (const auto& a : annotations) {
    const fs::path file = features_dir / (a.sequence_id() + ".cmv");
    if (!fs::exists(file)) {
      throw DataError("missing feature file for sequence " +
                      tick(a.sequence_id()) + " ('" + file.string() + "')");
    }
    auto seq = read_feature_file(file, a.sequence_id());
    if (seq.length() != a.length()) {
      throw DataError("sequence " + tick(a.sequence_id()) + ": file has T=" +
                      std::to_string(seq.length()) + " but annotation says T=" +
                      std::to_string(a.length()));
    }
    if (dim && *dim != seq.dim()) {
      throw DataError("sequence " + tick(a.sequence_id()) +
                      ": dimension mismatch (" + std::to_string(seq.dim()) +
                      " vs " + std::to_string(*dim) + ")");
    }
    dim = seq.dim();
    ds.sequences.push_back(seq.with_subject(a.subject()));
    ds.annotations.push_back(a);
  }
  return ds;
}

void save_dataset(const fs::path& features_dir, const fs::path& annotations_path,
                  const Dataset& dataset) {
  fs::create_directories(features_dir);
  for (const auto& seq : dataset.sequences) {
    write_feature_file(features_dir / (seq.id() + ".cmv"), seq);
  }
  write_annotations(annotations_path, dataset.annotations);
}

}  // namespace completion
