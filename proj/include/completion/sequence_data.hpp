// SPDX-License-Identifier: Apache-2.0
//
// Domain types for per-frame feature sequences and their completion
// annotations, plus the on-disk formats and dataset splits.
//
// Frame indices `t`, lengths `T` and completion moments `tau` are 1-based
// throughout the library; `tau == T + 1` is the canonical incomplete marker.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace completion {

enum class Phase : std::uint8_t { Pre = 0, Post = 1 };

/// Immutable sequence of T frames, each a d-dimensional float vector,
/// stored frame-major.
class FeatureSequence {
 public:
  /// Validates T >= 2, d >= 1, values.size() == T * d and finiteness.
  /// Throws DataError naming `id` on violation.
  static FeatureSequence create(std::string id, std::size_t dim,
                                std::vector<float> values,
                                std::optional<std::string> subject = {});

  const std::string& id() const { return id_; }
  const std::optional<std::string>& subject() const { return subject_; }
  int length() const { return static_cast<int>(values_.size() / dim_); }
  std::size_t dim() const { return dim_; }

  /// Features of frame t (1-based).
  std::span<const float> frame(int t) const {
    return {values_.data() + static_cast<std::size_t>(t - 1) * dim_, dim_};
  }
  std::span<const float> values() const { return values_; }

  /// Copy with a different subject tag.
  FeatureSequence with_subject(std::optional<std::string> subject) const;

  friend bool operator==(const FeatureSequence&,
                         const FeatureSequence&) = default;

 private:
  FeatureSequence() = default;

  std::string id_;
  std::optional<std::string> subject_;
  std::size_t dim_ = 1;
  std::vector<float> values_;
};

class CompletionAnnotation {
 public:
  static CompletionAnnotation complete(std::string id, int length, int tau,
                                       std::optional<std::string> subject = {});
  static CompletionAnnotation incomplete(
      std::string id, int length, std::optional<std::string> subject = {});

  const std::string& sequence_id() const { return id_; }
  int length() const { return length_; }
  /// Completion moment in [1, T], or T + 1 when incomplete.
  int tau() const { return tau_; }
  bool is_complete() const { return tau_ <= length_; }
  const std::optional<std::string>& subject() const { return subject_; }

  friend bool operator==(const CompletionAnnotation&,
                         const CompletionAnnotation&) = default;

 private:
  CompletionAnnotation(std::string id, int length, int tau,
                       std::optional<std::string> subject);

  std::string id_;
  int length_ = 0;
  int tau_ = 0;
  std::optional<std::string> subject_;
};

struct FrameLabel {
  int t = 0;
  Phase y = Phase::Pre;
  /// (t - tau) / tau; absent for incomplete sequences.
  std::optional<double> r;
};

/// Per-frame supervision for a sequence of length T.
std::vector<FrameLabel> frame_labels(const CompletionAnnotation& annotation,
                                     int length);

/// Sequences and annotations aligned by index.
struct Dataset {
  std::vector<FeatureSequence> sequences;
  std::vector<CompletionAnnotation> annotations;

  std::size_t size() const { return sequences.size(); }
  /// Index of the sequence with this id, if any.
  std::optional<std::size_t> find(const std::string& id) const;
};

// ---------------------------------------------------------------------------
// Splits

enum class SplitRole { Train, Test };

struct SplitEntry {
  std::string id;
  SplitRole role = SplitRole::Train;
};

struct DatasetSplit {
  /// "fixed" or the held-out subject.
  std::string name;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct FixedSplit {
  std::vector<SplitEntry> entries;
};
struct LeaveOneSubjectOut {};
using SplitPolicy = std::variant<FixedSplit, LeaveOneSubjectOut>;

/// One split for a fixed policy; one split per distinct subject (in order of
/// first appearance) for leave-one-subject-out.
std::vector<DatasetSplit> make_split(
    std::span<const CompletionAnnotation> annotations,
    const SplitPolicy& policy);

/// Subset of `dataset` restricted to `ids`, in the given order.
Dataset select(const Dataset& dataset, std::span<const std::string> ids);

// ---------------------------------------------------------------------------
// On-disk formats

/// `<id>.cmv`: "CMV1", u32 T, u32 d, then T*d little-endian float32.
void write_feature_file(const std::filesystem::path& path,
                        const FeatureSequence& sequence);
FeatureSequence read_feature_file(const std::filesystem::path& path,
                                  std::string id);

/// One JSON object per line: {"id", "T", "tau" (int or null), "subject"?}.
std::vector<CompletionAnnotation> read_annotations(
    const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path,
                       std::span<const CompletionAnnotation> annotations);

/// One JSON object per line: {"id", "role": "train"|"test"}.
std::vector<SplitEntry> read_split_file(const std::filesystem::path& path);
void write_split_file(const std::filesystem::path& path,
                      std::span<const SplitEntry> entries);

/// Loads every annotated sequence from `features_dir/<id>.cmv`. Subjects are
/// taken from the annotations.
Dataset load_dataset(const std::filesystem::path& features_dir,
                     const std::filesystem::path& annotations_path);
void save_dataset(const std::filesystem::path& features_dir,
                  const std::filesystem::path& annotations_path,
                  const Dataset& dataset);

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthConfig {
  int n_sequences = 100;
  int dim = 8;
  int min_length = 20;
  int max_length = 60;
  double p_incomplete = 0.3;
  double noise = 0.05;
  /// Subjects assigned round-robin as "s0", "s1", ...; 0 leaves them unset.
  int n_subjects = 0;
  /// tau is drawn uniformly from [min_tau_fraction*T, max_tau_fraction*T].
  double min_tau_fraction = 0.3;
  double max_tau_fraction = 0.8;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Generates sequences whose feature 0 carries a monotone progress signal
/// t / tau that reaches 1 exactly at the completion moment. Incomplete
/// sequences ramp towards a virtual moment beyond T and stay below 1. All
/// coordinates get i.i.d. Gaussian noise. Deterministic in `seed`.
Dataset synthesize_dataset(const SynthConfig& config, std::uint64_t seed);

}  // namespace completion
