// SPDX-License-Identifier: Apache-2.0

#include "toxbench/util/binary_io.h"

#include <bit>
#include <fstream>
#include <sstream>

namespace toxbench {

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  bytes(s);
}

void BinaryWriter::f64s(const std::vector<double> &v) {
  u64(v.size());
  for (double x: v) f64(x);
}

void BinaryWriter::u64s(const std::vector<std::uint64_t> &v) {
  u64(v.size());
  for (auto x: v) u64(x);
}

void BinaryReader::need(std::size_t n, const char *what) {
  if (remaining() < n)
    throw TruncatedInput("truncated input: need " + std::to_string(n) + " bytes for " + what + " at offset " +
                         std::to_string(pos_) + ", have " + std::to_string(remaining()));
}

std::uint8_t BinaryReader::u8() {
  need(1, "u8");
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t BinaryReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string_view BinaryReader::bytes(std::size_t n) {
  need(n, "byte block");
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string BinaryReader::str() {
  auto n = u64();
  return std::string(bytes(n));
}

std::vector<double> BinaryReader::f64s() {
  auto n = u64();
  if (n > remaining() / 8) need(n * 8 > n ? n * 8 : remaining() + 1, "f64 array");
  std::vector<double> v(n);
  for (auto &x: v) x = f64();
  return v;
}

std::vector<std::uint64_t> BinaryReader::u64s() {
  auto n = u64();
  if (n > remaining() / 8) need(n * 8 > n ? n * 8 : remaining() + 1, "u64 array");
  std::vector<std::uint64_t> v(n);
  for (auto &x: v) x = u64();
  return v;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace toxbench
