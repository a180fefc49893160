// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toxbench {

// Little-endian encoder used for weights.bin and pipeline.bin.
class BinaryWriter {
public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::string_view s) { buf_.append(s); }
  // u64 length prefix followed by the bytes.
  void str(std::string_view s);
  void f64s(const std::vector<double> &v);
  void u64s(const std::vector<std::uint64_t> &v);

  const std::string &data() const { return buf_; }

private:
  std::string buf_;
};

class TruncatedInput: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class BinaryReader {
public:
  explicit BinaryReader(std::string_view data): data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view bytes(std::size_t n);
  std::string str();
  std::vector<double> f64s();
  std::vector<std::uint64_t> u64s();

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

private:
  void need(std::size_t n, const char *what);

  std::string_view data_;
  std::size_t pos_ = 0;
};

// Whole-file helpers; both throw std::runtime_error on I/O failure.
std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view content);

}  // namespace toxbench
