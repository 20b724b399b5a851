// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "completion/errors.hpp"
#include "completion/recurrent_net.hpp"

namespace completion {

namespace {
constexpr std::string_view kCheckpointMagic = "CMP1";
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params) {
  const NetShape shape = params.shape();
  io::BinaryWriter w(path);
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(shape.input_dim));
  w.u32(static_cast<std::uint32_t>(shape.projection_dim));
  w.u32(static_cast<std::uint32_t>(shape.hidden_dim));
  for (const auto& block : params.blocks()) {
    for (double v : block) w.f64(v);
  }
  w.finish();
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  if (!r.magic(kCheckpointMagic)) {
    throw DataError("'" + path.string() + "' is not a model checkpoint");
  }
  if (const auto version = r.u32(); version != kCheckpointVersion) {
    throw DataError("'" + path.string() + "': unsupported checkpoint version " +
                    std::to_string(version));
  }
  NetShape shape;
  shape.input_dim = r.u32();
  shape.projection_dim = r.u32();
  shape.hidden_dim = r.u32();
  if (shape.input_dim == 0 || shape.projection_dim == 0 ||
      shape.hidden_dim == 0) {
    throw DataError("'" + path.string() + "': zero dimension in header");
  }
  ModelParams params = ModelParams::zeros(shape);
  for (auto& block : params.blocks()) {
    for (double& v : block) v = r.f64();
  }
  if (!r.at_end()) {
    throw DataError("'" + path.string() + "' has trailing bytes");
  }
  if (!params.all_finite()) {
    throw DataError("'" + path.string() + "' contains non-finite parameters");
  }
  return params;
}

void write_loss_trace(const std::filesystem::path& path,
                      std::span<const double> epoch_loss) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out << fmt::format("{},{:.17g}\n", e + 1, epoch_loss[e]);
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace completion
