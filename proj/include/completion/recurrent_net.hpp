// SPDX-License-Identifier: Apache-2.0
//
// Recurrent voting node: a ReLU projection, one LSTM layer and two scalar
// heads (sigmoid classification of pre/post completion, linear regression of
// the relative time (t - tau) / tau). Forward pass, joint loss, analytic
// backpropagation through time, SGD training and checkpoints.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "completion/sequence_data.hpp"

namespace completion {

/// Lower/upper clamp applied to C_t before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;

struct NetShape {
  std::size_t input_dim = 0;
  std::size_t projection_dim = 0;
  std::size_t hidden_dim = 0;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// All trainable weights. Gate blocks are stacked [input, forget, cell,
/// output], each `hidden_dim` rows.
struct ModelParams {
  RowMatrix proj_w;  // projection_dim x input_dim
  Eigen::VectorXd proj_b;
  RowMatrix gate_wx;  // 4h x projection_dim
  RowMatrix gate_wh;  // 4h x h
  Eigen::VectorXd gate_b;
  Eigen::VectorXd cls_w;  // classification head
  double cls_b = 0.0;
  Eigen::VectorXd reg_w;  // regression head
  double reg_b = 0.0;

  static ModelParams zeros(const NetShape& shape);
  /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases zero
  /// except the forget gate, which starts at 1.
  static ModelParams random(const NetShape& shape, std::uint64_t seed);

  NetShape shape() const;
  std::size_t parameter_count() const;

  /// Mutable views over every parameter block, in checkpoint order.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  static const std::vector<std::string>& block_names();

  bool all_finite() const;
  double squared_norm() const;
  /// this += scale * other (shapes must match).
  void add_scaled(const ModelParams& other, double scale);

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

using ParamGradients = ModelParams;

struct NodeState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

struct FrameOutput {
  /// Post-completion probability C_t (unclamped sigmoid output).
  double probability = 0.5;
  /// Predicted relative time R_t.
  double relative_time = 0.0;
  /// C_t >= 0.5 => Post.
  Phase phase = Phase::Post;
};

/// Runs the node left to right from a zero state. Throws DataError when the
/// sequence dimension differs from the model input dimension.
std::vector<FrameOutput> forward_sequence(const ModelParams& params,
                                          const FeatureSequence& sequence);

struct FrameLosses {
  std::vector<double> classification;
  std::vector<double> regression;
};

/// Per-frame sigmoid cross-entropy (on the clamped probability) and squared
/// regression error (zero where the label has no target).
FrameLosses frame_losses(std::span<const FrameOutput> outputs,
                         std::span<const FrameLabel> labels);

/// Mean over frames of classification + regression loss.
double sequence_loss(const FrameLosses& losses);
double sequence_loss(std::span<const FrameOutput> outputs,
                     std::span<const FrameLabel> labels);

struct SequenceGradient {
  double loss = 0.0;
  ParamGradients params;
  /// d loss / d features, input_dim x T.
  Eigen::MatrixXd inputs;
};

/// Exact gradient of `sequence_loss` by backpropagation through time.
/// Throws NumericalError if the loss or any gradient entry is non-finite.
SequenceGradient backward_sequence(const ModelParams& params,
                                   const FeatureSequence& sequence,
                                   std::span<const FrameLabel> labels);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 1e-2;
  /// After this many epochs the rate is multiplied by `decay_factor`.
  int decay_after_epochs = 5;
  double decay_factor = 0.1;
  int hidden_dim = 128;
  /// 0 means "same as the input dimension".
  int projection_dim = 0;
  std::uint64_t seed = 0;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 5.0;

  void validate() const;
  /// Learning rate used during epoch `epoch` (1-based).
  double rate_for_epoch(int epoch) const;
  NetShape shape_for(std::size_t input_dim) const;
};

struct TrainResult {
  ModelParams params;
  /// Mean per-sequence loss of each epoch, measured before each update.
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Plain SGD, one sequence per step, visiting sequences in a per-epoch
/// shuffled order derived from `config.seed`. Throws NumericalError naming
/// the epoch and sequence on divergence.
TrainResult train(ModelParams init, const Dataset& train_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(ParamGradients& grads, double max_norm);

// ---------------------------------------------------------------------------
// Checkpoints: "CMP1", u32 version, u32 d, u32 h_in, u32 h, then every block
// as little-endian float64 (matrices row-major).

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// "epoch,mean_loss" CSV.
void write_loss_trace(const std::filesystem::path& path,
                      std::span<const double> epoch_loss);

}  // namespace completion
