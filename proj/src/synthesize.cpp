// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "completion/errors.hpp"
#include "completion/seeding.hpp"
#include "completion/sequence_data.hpp"

namespace completion {

void SynthConfig::validate() const {
  if (n_sequences < 1) throw ConfigError("n_sequences must be >= 1");
  if (dim < 2) throw ConfigError("dim must be >= 2");
  if (min_length < 2 || max_length < min_length) {
    throw ConfigError("length range must satisfy 2 <= min_length <= max_length");
  }
  if (!(p_incomplete >= 0.0 && p_incomplete <= 1.0)) {
    throw ConfigError("p_incomplete must lie in [0, 1]");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw ConfigError("noise must be finite and >= 0");
  }
  if (n_subjects < 0) throw ConfigError("n_subjects must be >= 0");
  if (!(min_tau_fraction > 0.0 && min_tau_fraction <= max_tau_fraction &&
        max_tau_fraction <= 1.0)) {
    throw ConfigError("tau fractions must satisfy 0 < min <= max <= 1");
  }
}

Dataset synthesize_dataset(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(derive_seed(seed, "synth"));
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  for (int i = 0; i < config.n_sequences; ++i) {
    const auto id = fmt::format("seq_{:04d}", i);
    std::optional<std::string> subject;
    if (config.n_subjects > 0) {
      subject = fmt::format("s{}", i % config.n_subjects);
    }

    const int length =
        config.min_length +
        static_cast<int>(uniform01(rng) *
                         (config.max_length - config.min_length + 1));
    const bool complete = uniform01(rng) >= config.p_incomplete;

    // Ramp t / scale reaches 1 exactly at frame `scale` when complete.
    double scale = 0.0;
    if (complete) {
      const int lo = std::max(
          1, static_cast<int>(std::ceil(config.min_tau_fraction * length)));
      const int hi = std::max(
          lo, static_cast<int>(std::floor(config.max_tau_fraction * length)));
      scale = lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
    } else {
      scale = length * uniform(rng, 1.25, 2.0);
    }

    std::vector<float> values(static_cast<std::size_t>(length) * config.dim);
    for (int t = 1; t <= length; ++t) {
      float* frame = values.data() + static_cast<std::size_t>(t - 1) * config.dim;
      for (int k = 0; k < config.dim; ++k) {
        frame[k] = static_cast<float>(config.noise * gauss(rng));
      }
      frame[0] += static_cast<float>(t / scale);
    }

    ds.sequences.push_back(
        FeatureSequence::create(id, config.dim, std::move(values), subject));
    ds.annotations.push_back(
        complete ? CompletionAnnotation::complete(id, length,
                                                  static_cast<int>(scale),
                                                  subject)
                 : CompletionAnnotation::incomplete(id, length, subject));
  }
  return ds;
}

}  // namespace completion
