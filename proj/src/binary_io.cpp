// SPDX-License-Identifier: Apache-2.0
#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "completion/errors.hpp"

namespace completion::io {
namespace {

template <typename UInt>
std::array<unsigned char, sizeof(UInt)> to_le(UInt v) {
  std::array<unsigned char, sizeof(UInt)> b{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  }
  return b;
}

template <typename UInt>
UInt from_le(const std::array<unsigned char, sizeof(UInt)>& b) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(b[i]) << (8 * i);
  }
  return v;
}

}  // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
}

void BinaryWriter::put(std::span<const unsigned char> bytes) {
  out_.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
}

void BinaryWriter::magic(std::string_view tag) {
  out_.write(tag.data(), static_cast<std::streamsize>(tag.size()));
}

void BinaryWriter::u32(std::uint32_t v) { put(to_le(v)); }
void BinaryWriter::f32(float v) { put(to_le(std::bit_cast<std::uint32_t>(v))); }
void BinaryWriter::f64(double v) { put(to_le(std::bit_cast<std::uint64_t>(v))); }

void BinaryWriter::finish() {
  out_.flush();
  if (!out_) throw DataError("write to '" + path_.string() + "' failed");
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) {
    throw DataError("cannot open '" + path.string() + "'");
  }
}

void BinaryReader::get(std::span<unsigned char> bytes) {
  in_.read(reinterpret_cast<char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (in_.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw DataError("'" + path_.string() + "' is truncated");
  }
}

bool BinaryReader::magic(std::string_view tag) {
  std::string buf(tag.size(), '\0');
  in_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  return in_.gcount() == static_cast<std::streamsize>(buf.size()) && buf == tag;
}

std::uint32_t BinaryReader::u32() {
  std::array<unsigned char, 4> b{};
  get(b);
  return from_le<std::uint32_t>(b);
}

float BinaryReader::f32() { return std::bit_cast<float>(u32()); }

double BinaryReader::f64() {
  std::array<unsigned char, 8> b{};
  get(b);
  return std::bit_cast<double>(from_le<std::uint64_t>(b));
}

bool BinaryReader::at_end() {
  return in_.peek() == std::ifstream::traits_type::eof();
}

}  // namespace completion::io
