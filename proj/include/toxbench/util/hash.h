// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace toxbench {

// 64-bit FNV-1a over a canonical little-endian byte encoding. Every value
// fed through add_* is encoded with a fixed width so that the digest is
// identical on every platform.
class Fnv1a {
public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  Fnv1a &add_byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
    return *this;
  }

  Fnv1a &add_bytes(std::span<const std::uint8_t> bytes) {
    for (auto b: bytes) add_byte(b);
    return *this;
  }

  Fnv1a &add_raw(std::string_view s) {
    for (char c: s) add_byte(static_cast<std::uint8_t>(c));
    return *this;
  }

  // Length-prefixed, so that ("ab","c") and ("a","bc") differ.
  Fnv1a &add_string(std::string_view s) {
    add_u64(s.size());
    return add_raw(s);
  }

  Fnv1a &add_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  Fnv1a &add_i64(std::int64_t v) { return add_u64(static_cast<std::uint64_t>(v)); }

  Fnv1a &add_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) add_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  Fnv1a &add_bool(bool v) { return add_byte(v ? 1 : 0); }

  Fnv1a &add_f64(double v);

  std::uint64_t digest() const { return state_; }

private:
  std::uint64_t state_ = kOffsetBasis;
};

std::uint64_t fnv1a(std::string_view bytes);

// 16 lowercase hex digits.
std::string to_hex(std::uint64_t v);

// Digest of a file's bytes, as hex. Throws std::runtime_error if unreadable.
std::string file_content_hash(const std::string &path);

}  // namespace toxbench
