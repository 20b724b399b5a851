// SPDX-License-Identifier: Apache-2.0
#include "completion/voting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "completion/errors.hpp"

namespace completion {

VoteVector::VoteVector(int length) {
  if (length < 1) throw std::invalid_argument("vote vector length must be >= 1");
  values_.assign(static_cast<std::size_t>(length) + 1, 0.0);
}

VoteVector::VoteVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw std::invalid_argument("vote vector needs at least two bins");
  }
}

double VoteVector::sum() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

VoteVector& VoteVector::operator+=(const VoteVector& other) {
  if (other.size() != size()) {
    throw std::invalid_argument("vote vectors differ in length");
  }
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += other.values_[j];
  return *this;
}

void VoteParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be finite and > 0");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ConfigError("beta must be finite and > 0");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in (0, 1]");
  }
}

namespace {
void check_frame(int t, int length) {
  if (length < 1 || t < 1 || t > length) {
    throw std::out_of_range("frame index outside [1, T]");
  }
}
}  // namespace

VoteVector classification_vote(int t, Phase phase, int length) {
  check_frame(t, length);
  VoteVector v(length);
  if (phase == Phase::Pre) {
    const double w = 1.0 / (length - t + 1);
    for (int j = t + 1; j <= length + 1; ++j) v.at(j) = w;
  } else {
    const double w = 1.0 / t;
    for (int j = 1; j <= t; ++j) v.at(j) = w;
  }
  return v;
}

double predicted_moment(int t, double relative_time, int length) {
  check_frame(t, length);
  const double upper = length + 1.0;
  if (!(relative_time > -1.0 + kSingularMargin)) return upper;
  return std::clamp(t / (relative_time + 1.0), 1.0, upper);
}

VoteVector regression_vote(int t, double relative_time, int length,
                           const VoteParams& params) {
  const double mu = predicted_moment(t, relative_time, length);
  const double half = params.alpha * length / 2.0;
  const int last = length + 1;
  const int nearest = std::clamp(static_cast<int>(std::floor(mu + 0.5)), 1, last);
  const int lo = std::min(nearest, std::max(1, static_cast<int>(std::ceil(mu - half))));
  const int hi = std::max(nearest, std::min(last, static_cast<int>(std::floor(mu + half))));

  VoteVector v(length);
  const double denom = 2.0 * params.sigma * params.sigma;
  for (int j = lo; j <= hi; ++j) {
    const double dj = j - mu;
    v.at(j) = params.beta * std::exp(-dj * dj / denom);
  }
  return v;
}

}  // namespace completion
