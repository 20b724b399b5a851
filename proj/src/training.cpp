// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "completion/errors.hpp"
#include "completion/recurrent_net.hpp"
#include "completion/seeding.hpp"

namespace completion {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (decay_after_epochs < 0) throw ConfigError("decay epoch must be >= 0");
  if (!(decay_factor > 0.0) || !std::isfinite(decay_factor)) {
    throw ConfigError("decay factor must be finite and > 0");
  }
  if (hidden_dim < 1) throw ConfigError("hidden size must be >= 1");
  if (projection_dim < 0) throw ConfigError("projection size must be >= 0");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip norm must be >= 0");
}

double TrainConfig::rate_for_epoch(int epoch) const {
  return epoch > decay_after_epochs ? learning_rate * decay_factor
                                    : learning_rate;
}

NetShape TrainConfig::shape_for(std::size_t input_dim) const {
  return {input_dim,
          projection_dim > 0 ? static_cast<std::size_t>(projection_dim)
                             : input_dim,
          static_cast<std::size_t>(hidden_dim)};
}

double clip_global_norm(ParamGradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& block : grads.blocks()) {
      for (double& v : block) v *= scale;
    }
  }
  return norm;
}

TrainResult train(ModelParams init, const Dataset& train_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) {
    throw DataError("training set is empty");
  }

  std::vector<std::vector<FrameLabel>> labels;
  labels.reserve(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    labels.push_back(frame_labels(train_set.annotations[i],
                                  train_set.sequences[i].length()));
  }

  TrainResult result{std::move(init), {}};
  std::mt19937_64 rng(derive_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(train_set.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates with our own uniform draw so the order does not depend on
    // the standard library's distribution implementation.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * i);
      std::swap(order[i - 1], order[j]);
    }

    const double rate = config.rate_for_epoch(epoch);
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& seq = train_set.sequences[idx];
      SequenceGradient grad;
      try {
        grad = backward_sequence(result.params, seq, labels[idx]);
      } catch (const NumericalError&) {
        throw NumericalError(fmt::format(
            "training diverged at epoch {} on sequence '{}'", epoch, seq.id()));
      }
      total += grad.loss;
      clip_global_norm(grad.params, config.clip_norm);
      if (rate != 0.0) result.params.add_scaled(grad.params, -rate);
      if (!result.params.all_finite()) {
        throw NumericalError(fmt::format(
            "parameters became non-finite at epoch {} after sequence '{}'",
            epoch, seq.id()));
      }
    }
    const double mean = total / static_cast<double>(train_set.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace completion
