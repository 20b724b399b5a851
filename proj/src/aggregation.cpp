// SPDX-License-Identifier: Apache-2.0
#include "completion/aggregation.hpp"

#include <stdexcept>

namespace completion {

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::CC: return "C-C";
    case Scheme::RR: return "R-R";
    case Scheme::RC: return "R-C";
    case Scheme::CR: return "C-R";
    case Scheme::PreV: return "Pre-V";
    case Scheme::LastR: return "LastR";
  }
  return "?";
}

std::string_view scheme_label(Scheme scheme) {
  return scheme == Scheme::LastR ? "V_R^T" : scheme_name(scheme);
}

std::optional<Scheme> parse_scheme(std::string_view text) {
  for (Scheme s : kAllSchemes) {
    if (text == scheme_name(s) || text == scheme_label(s)) return s;
  }
  return std::nullopt;
}

bool is_voting_scheme(Scheme scheme) {
  return scheme != Scheme::PreV && scheme != Scheme::LastR;
}

namespace {

int length_of(std::span<const FrameOutput> outputs) {
  if (outputs.empty()) throw std::invalid_argument("no frame outputs");
  return static_cast<int>(outputs.size());
}

// Whether a frame in `phase` casts a regression vote under `scheme`.
bool uses_regression(Scheme scheme, Phase phase) {
  switch (scheme) {
    case Scheme::CC: return false;
    case Scheme::RR: return true;
    case Scheme::RC: return phase == Phase::Pre;
    case Scheme::CR: return phase == Phase::Post;
    default: break;
  }
  throw std::invalid_argument("not a voting scheme");
}

}  // namespace

VoteVector accumulate(std::span<const FrameOutput> outputs, Scheme scheme,
                      const VoteParams& params) {
  const int length = length_of(outputs);
  if (!is_voting_scheme(scheme)) {
    throw std::invalid_argument("baselines do not accumulate votes");
  }
  VoteVector total(length);
  for (int t = 1; t <= length; ++t) {
    const FrameOutput& out = outputs[static_cast<std::size_t>(t - 1)];
    if (uses_regression(scheme, out.phase)) {
      total += regression_vote(t, out.relative_time, length, params);
    } else {
      total += classification_vote(t, out.phase, length);
    }
  }
  return total;
}

MomentPrediction predict_moment(const VoteVector& votes) {
  int best = 1;
  for (int j = 2; j <= votes.length() + 1; ++j) {
    if (votes.at(j) > votes.at(best)) best = j;
  }
  return {best, best <= votes.length(), votes};
}

MomentPrediction baseline_pre_voting(std::span<const FrameOutput> outputs) {
  const int length = length_of(outputs);
  int tau = length + 1;
  for (int t = 1; t <= length; ++t) {
    if (outputs[static_cast<std::size_t>(t - 1)].phase == Phase::Post) {
      tau = t;
      break;
    }
  }
  VoteVector votes(length);
  votes.at(tau) = 1.0;
  return {tau, tau <= length, std::move(votes)};
}

MomentPrediction baseline_last_frame_regression(
    std::span<const FrameOutput> outputs, const VoteParams& params) {
  const int length = length_of(outputs);
  return predict_moment(
      regression_vote(length, outputs.back().relative_time, length, params));
}

MomentPrediction predict(std::span<const FrameOutput> outputs, Scheme scheme,
                         const VoteParams& params) {
  switch (scheme) {
    case Scheme::PreV: return baseline_pre_voting(outputs);
    case Scheme::LastR: return baseline_last_frame_regression(outputs, params);
    default: return predict_moment(accumulate(outputs, scheme, params));
  }
}

}  // namespace completion
