// SPDX-License-Identifier: Apache-2.0
#include "completion/recurrent_net.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "completion/errors.hpp"
#include "completion/seeding.hpp"

namespace completion {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

template <typename Derived>
std::span<double> span_of(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename Derived>
std::span<const double> span_of(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

// Activations of one time step, kept for the backward pass.
struct StepCache {
  Eigen::VectorXd proj_pre;
  Eigen::VectorXd proj;
  Eigen::VectorXd gates;  // activated [i, f, g, o]
  Eigen::VectorXd c;
  Eigen::VectorXd tanh_c;
  Eigen::VectorXd h;
  double probability = 0.0;
  double regression = 0.0;
};

void check_dims(const ModelParams& params, const FeatureSequence& sequence) {
  if (static_cast<std::size_t>(params.proj_w.cols()) != sequence.dim()) {
    throw DataError("sequence '" + sequence.id() + "': feature dimension " +
                    std::to_string(sequence.dim()) +
                    " does not match model input dimension " +
                    std::to_string(params.proj_w.cols()));
  }
}

Eigen::VectorXd frame_vector(const FeatureSequence& sequence, int t) {
  const auto f = sequence.frame(t);
  Eigen::VectorXd x(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) {
    x[static_cast<Eigen::Index>(k)] = f[k];
  }
  return x;
}

std::vector<StepCache> run_forward(const ModelParams& p,
                                   const FeatureSequence& sequence) {
  check_dims(p, sequence);
  const Eigen::Index h = p.gate_wh.cols();
  NodeState state{Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h)};

  std::vector<StepCache> steps(static_cast<std::size_t>(sequence.length()));
  for (int t = 1; t <= sequence.length(); ++t) {
    StepCache& s = steps[static_cast<std::size_t>(t - 1)];
    s.proj_pre = p.proj_w * frame_vector(sequence, t) + p.proj_b;
    s.proj = s.proj_pre.cwiseMax(0.0);

    Eigen::VectorXd a = p.gate_wx * s.proj + p.gate_wh * state.h + p.gate_b;
    s.gates.resize(4 * h);
    s.gates.segment(0, h) = sigmoid(a.segment(0, h));
    s.gates.segment(h, h) = sigmoid(a.segment(h, h));
    s.gates.segment(2 * h, h) = a.segment(2 * h, h).array().tanh().matrix();
    s.gates.segment(3 * h, h) = sigmoid(a.segment(3 * h, h));

    s.c = s.gates.segment(h, h).cwiseProduct(state.c) +
          s.gates.segment(0, h).cwiseProduct(s.gates.segment(2 * h, h));
    s.tanh_c = s.c.array().tanh().matrix();
    s.h = s.gates.segment(3 * h, h).cwiseProduct(s.tanh_c);

    s.probability = sigmoid(p.cls_w.dot(s.h) + p.cls_b);
    s.regression = p.reg_w.dot(s.h) + p.reg_b;
    state = {s.h, s.c};
  }
  return steps;
}

void check_labels(std::size_t outputs, std::size_t labels) {
  if (outputs != labels) {
    throw std::invalid_argument("output and label counts differ");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelParams

ModelParams ModelParams::zeros(const NetShape& shape) {
  const auto d = static_cast<Eigen::Index>(shape.input_dim);
  const auto m = static_cast<Eigen::Index>(shape.projection_dim);
  const auto h = static_cast<Eigen::Index>(shape.hidden_dim);
  ModelParams p;
  p.proj_w = RowMatrix::Zero(m, d);
  p.proj_b = Eigen::VectorXd::Zero(m);
  p.gate_wx = RowMatrix::Zero(4 * h, m);
  p.gate_wh = RowMatrix::Zero(4 * h, h);
  p.gate_b = Eigen::VectorXd::Zero(4 * h);
  p.cls_w = Eigen::VectorXd::Zero(h);
  p.reg_w = Eigen::VectorXd::Zero(h);
  return p;
}

ModelParams ModelParams::random(const NetShape& shape, std::uint64_t seed) {
  if (shape.input_dim == 0 || shape.projection_dim == 0 ||
      shape.hidden_dim == 0) {
    throw ConfigError("network dimensions must be positive");
  }
  ModelParams p = zeros(shape);
  std::mt19937_64 rng(derive_seed(seed, "init"));
  auto fill = [&rng](auto& m, std::size_t fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : span_of(m)) v = uniform(rng, -s, s);
  };
  fill(p.proj_w, shape.input_dim);
  fill(p.gate_wx, shape.projection_dim + shape.hidden_dim);
  fill(p.gate_wh, shape.projection_dim + shape.hidden_dim);
  fill(p.cls_w, shape.hidden_dim);
  fill(p.reg_w, shape.hidden_dim);
  const auto h = static_cast<Eigen::Index>(shape.hidden_dim);
  p.gate_b.segment(h, h).setOnes();
  return p;
}

NetShape ModelParams::shape() const {
  return {static_cast<std::size_t>(proj_w.cols()),
          static_cast<std::size_t>(proj_w.rows()),
          static_cast<std::size_t>(gate_wh.cols())};
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.size();
  return n;
}

std::vector<std::span<double>> ModelParams::blocks() {
  return {span_of(proj_w), span_of(proj_b), span_of(gate_wx),
          span_of(gate_wh), span_of(gate_b), span_of(cls_w),
          {&cls_b, 1},     span_of(reg_w),  {&reg_b, 1}};
}

std::vector<std::span<const double>> ModelParams::blocks() const {
  return {span_of(proj_w), span_of(proj_b), span_of(gate_wx),
          span_of(gate_wh), span_of(gate_b), span_of(cls_w),
          {&cls_b, 1},     span_of(reg_w),  {&reg_b, 1}};
}

const std::vector<std::string>& ModelParams::block_names() {
  static const std::vector<std::string> names{
      "proj_w", "proj_b", "gate_wx", "gate_wh", "gate_b",
      "cls_w",  "cls_b",  "reg_w",   "reg_b"};
  return names;
}

bool ModelParams::all_finite() const {
  for (const auto& b : blocks()) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double ModelParams::squared_norm() const {
  double sum = 0.0;
  for (const auto& b : blocks()) {
    for (double v : b) sum += v * v;
  }
  return sum;
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  if (shape() != other.shape()) {
    throw std::invalid_argument("parameter shapes differ");
  }
  auto dst = blocks();
  const auto src = other.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) {
    for (std::size_t i = 0; i < dst[b].size(); ++i) {
      dst[b][i] += scale * src[b][i];
    }
  }
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.blocks();
  const auto y = b.blocks();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::equal(x[i].begin(), x[i].end(), y[i].begin())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward / loss

std::vector<FrameOutput> forward_sequence(const ModelParams& params,
                                          const FeatureSequence& sequence) {
  const auto steps = run_forward(params, sequence);
  std::vector<FrameOutput> out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    out.push_back({s.probability, s.regression,
                   s.probability >= 0.5 ? Phase::Post : Phase::Pre});
  }
  return out;
}

FrameLosses frame_losses(std::span<const FrameOutput> outputs,
                         std::span<const FrameLabel> labels) {
  check_labels(outputs.size(), labels.size());
  FrameLosses losses;
  losses.classification.reserve(outputs.size());
  losses.regression.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double c = clamp_probability(outputs[i].probability);
    const double y = labels[i].y == Phase::Post ? 1.0 : 0.0;
    losses.classification.push_back(
        -(y * std::log(c) + (1.0 - y) * std::log(1.0 - c)));
    double lr = 0.0;
    if (labels[i].r) {
      const double diff = outputs[i].relative_time - *labels[i].r;
      lr = diff * diff;
    }
    losses.regression.push_back(lr);
  }
  return losses;
}

double sequence_loss(const FrameLosses& losses) {
  if (losses.classification.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < losses.classification.size(); ++i) {
    sum += losses.classification[i] + losses.regression[i];
  }
  return sum / static_cast<double>(losses.classification.size());
}

double sequence_loss(std::span<const FrameOutput> outputs,
                     std::span<const FrameLabel> labels) {
  return sequence_loss(frame_losses(outputs, labels));
}

// ---------------------------------------------------------------------------
// Backward

SequenceGradient backward_sequence(const ModelParams& p,
                                   const FeatureSequence& sequence,
                                   std::span<const FrameLabel> labels) {
  const auto steps = run_forward(p, sequence);
  check_labels(steps.size(), labels.size());

  const int length = sequence.length();
  const double inv_t = 1.0 / length;
  const Eigen::Index h = p.gate_wh.cols();

  SequenceGradient g;
  g.params = ModelParams::zeros(p.shape());
  g.inputs = Eigen::MatrixXd::Zero(p.proj_w.cols(), length);

  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd da(4 * h);
  double loss = 0.0;

  for (int t = length; t >= 1; --t) {
    const auto idx = static_cast<std::size_t>(t - 1);
    const StepCache& s = steps[idx];
    const FrameLabel& label = labels[idx];

    // Heads. The clamp has zero slope where it saturates.
    const double y = label.y == Phase::Post ? 1.0 : 0.0;
    const double c = clamp_probability(s.probability);
    loss += -(y * std::log(c) + (1.0 - y) * std::log(1.0 - c));
    const bool saturated = c != s.probability;
    const double dlogit = saturated ? 0.0 : inv_t * (s.probability - y);
    double dreg = 0.0;
    if (label.r) {
      const double diff = s.regression - *label.r;
      loss += diff * diff;
      dreg = 2.0 * inv_t * diff;
    }
    g.params.cls_w += dlogit * s.h;
    g.params.cls_b += dlogit;
    g.params.reg_w += dreg * s.h;
    g.params.reg_b += dreg;

    // LSTM cell.
    const Eigen::VectorXd dh = dlogit * p.cls_w + dreg * p.reg_w + dh_next;
    const auto i_g = s.gates.segment(0, h);
    const auto f_g = s.gates.segment(h, h);
    const auto g_g = s.gates.segment(2 * h, h);
    const auto o_g = s.gates.segment(3 * h, h);

    const Eigen::VectorXd dc =
        (dh.array() * o_g.array() * (1.0 - s.tanh_c.array().square()))
            .matrix() +
        dc_next;
    const Eigen::VectorXd c_prev =
        t > 1 ? steps[idx - 1].c : Eigen::VectorXd::Zero(h);
    const Eigen::VectorXd h_prev =
        t > 1 ? steps[idx - 1].h : Eigen::VectorXd::Zero(h);

    da.segment(0, h) =
        (dc.array() * g_g.array() * i_g.array() * (1.0 - i_g.array()))
            .matrix();
    da.segment(h, h) =
        (dc.array() * c_prev.array() * f_g.array() * (1.0 - f_g.array()))
            .matrix();
    da.segment(2 * h, h) =
        (dc.array() * i_g.array() * (1.0 - g_g.array().square())).matrix();
    da.segment(3 * h, h) =
        (dh.array() * s.tanh_c.array() * o_g.array() * (1.0 - o_g.array()))
            .matrix();

    g.params.gate_wx.noalias() += da * s.proj.transpose();
    g.params.gate_wh.noalias() += da * h_prev.transpose();
    g.params.gate_b += da;
    dh_next.noalias() = p.gate_wh.transpose() * da;
    dc_next = (dc.array() * f_g.array()).matrix();

    // Projection.
    Eigen::VectorXd dproj = p.gate_wx.transpose() * da;
    for (Eigen::Index k = 0; k < dproj.size(); ++k) {
      if (s.proj_pre[k] <= 0.0) dproj[k] = 0.0;
    }
    g.params.proj_w.noalias() += dproj * frame_vector(sequence, t).transpose();
    g.params.proj_b += dproj;
    g.inputs.col(t - 1) = p.proj_w.transpose() * dproj;
  }

  g.loss = loss * inv_t;
  if (!std::isfinite(g.loss) || !g.params.all_finite()) {
    throw NumericalError("sequence '" + sequence.id() +
                         "': non-finite loss or gradient");
  }
  return g;
}

}  // namespace completion
