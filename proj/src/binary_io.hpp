// SPDX-License-Identifier: Apache-2.0
// Little-endian primitives shared by the feature and checkpoint formats.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string_view>

namespace completion::io {

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void magic(std::string_view tag);
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);
  /// Flushes and throws on any I/O failure.
  void finish();

 private:
  void put(std::span<const unsigned char> bytes);

  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  /// False when the next bytes do not match `tag`.
  bool magic(std::string_view tag);
  std::uint32_t u32();
  float f32();
  double f64();
  /// True when every byte has been consumed.
  bool at_end();

 private:
  void get(std::span<unsigned char> bytes);

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace completion::io
