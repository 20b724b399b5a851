// SPDX-License-Identifier: Apache-2.0
//
// Frame-level votes over candidate completion positions j = 1..T+1, where
// bin T+1 stands for "incomplete".
#pragma once

#include <span>
#include <vector>

#include "completion/sequence_data.hpp"

namespace completion {

class VoteVector {
 public:
  /// All-zero vector for a sequence of length T (T + 1 bins).
  explicit VoteVector(int length);
  /// Takes the bins directly; needs at least two.
  explicit VoteVector(std::vector<double> values);

  /// Sequence length T; the vector has T + 1 bins.
  int length() const { return static_cast<int>(values_.size()) - 1; }
  std::size_t size() const { return values_.size(); }

  /// Bin j, 1-based.
  double at(int j) const { return values_.at(static_cast<std::size_t>(j - 1)); }
  double& at(int j) { return values_.at(static_cast<std::size_t>(j - 1)); }

  std::span<const double> values() const { return values_; }
  double sum() const;

  VoteVector& operator+=(const VoteVector& other);

  friend bool operator==(const VoteVector&, const VoteVector&) = default;

 private:
  std::vector<double> values_;
};

struct VoteParams {
  /// Gaussian width, in frames.
  double sigma = 30.0;
  /// Peak amplitude of a regression vote.
  double beta = 0.5;
  /// Regression votes are cast within a window of alpha * T frames.
  double alpha = 0.1;

  /// Throws ConfigError unless sigma > 0, beta > 0 and 0 < alpha <= 1.
  void validate() const;
};

/// Uniform vote over [t+1, T+1] for a pre-completion frame, or over [1, t]
/// for a post-completion frame. Sums to one.
VoteVector classification_vote(int t, Phase phase, int length);

/// Below this margin above -1 the relative time is treated as singular.
inline constexpr double kSingularMargin = 1e-9;

/// Completion moment implied by frame t's relative time, t / (R + 1),
/// clamped to [1, T + 1]. R <= -1 + kSingularMargin maps to T + 1.
double predicted_moment(int t, double relative_time, int length);

/// Gaussian vote beta * exp(-(j - mu)^2 / (2 sigma^2)) centred on
/// mu = predicted_moment(t, R, T), over the bins within alpha*T/2 of mu.
/// The bin nearest mu is always included.
VoteVector regression_vote(int t, double relative_time, int length,
                           const VoteParams& params);

}  // namespace completion
