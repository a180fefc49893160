// SPDX-License-Identifier: Apache-2.0

#include "toxbench/util/hash.h"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace toxbench {

Fnv1a &Fnv1a::add_f64(double v) {
  // +0.0 and -0.0 hash identically.
  if (v == 0.0) v = 0.0;
  return add_u64(std::bit_cast<std::uint64_t>(v));
}

std::uint64_t fnv1a(std::string_view bytes) {
  return Fnv1a().add_raw(bytes).digest();
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_content_hash(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(fnv1a(bytes));
}

}  // namespace toxbench
