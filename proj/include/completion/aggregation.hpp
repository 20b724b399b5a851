// SPDX-License-Identifier: Apache-2.0
//
// Sequence-level completion moment from accumulated frame votes.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "completion/recurrent_net.hpp"
#include "completion/voting.hpp"

namespace completion {

/// Four accumulation schemes, named <vote of pre frames>-<vote of post
/// frames>, plus the two non-voting baselines.
enum class Scheme { CC, RR, RC, CR, PreV, LastR };

inline constexpr Scheme kVotingSchemes[] = {Scheme::CC, Scheme::RR, Scheme::RC,
                                            Scheme::CR};
/// Report column order.
inline constexpr Scheme kAllSchemes[] = {Scheme::PreV, Scheme::LastR,
                                         Scheme::CC,   Scheme::RR,
                                         Scheme::RC,   Scheme::CR};

/// Command-line token: "C-C", "R-R", "R-C", "C-R", "Pre-V", "LastR".
std::string_view scheme_name(Scheme scheme);
/// Table column label; LastR is shown as "V_R^T".
std::string_view scheme_label(Scheme scheme);
/// Accepts the token or the column label.
std::optional<Scheme> parse_scheme(std::string_view text);
bool is_voting_scheme(Scheme scheme);

struct MomentPrediction {
  /// Predicted moment in [1, T+1]; T+1 means incomplete.
  int tau = 1;
  bool is_complete = true;
  VoteVector votes{1};
};

/// Elementwise sum of the per-frame votes the scheme selects, routing on
/// each frame's own predicted phase. Throws std::invalid_argument for the
/// baselines.
VoteVector accumulate(std::span<const FrameOutput> outputs, Scheme scheme,
                      const VoteParams& params);

/// Earliest bin holding the maximum vote.
MomentPrediction predict_moment(const VoteVector& votes);

/// First frame classified post-completion, or T+1. The vote vector is a
/// one-hot at the prediction.
MomentPrediction baseline_pre_voting(std::span<const FrameOutput> outputs);

/// Prediction from the last frame's regression vote alone.
MomentPrediction baseline_last_frame_regression(
    std::span<const FrameOutput> outputs, const VoteParams& params);

/// Dispatches to the accumulation schemes or the baselines.
MomentPrediction predict(std::span<const FrameOutput> outputs, Scheme scheme,
                         const VoteParams& params);

}  // namespace completion
