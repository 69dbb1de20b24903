#pragma once

#include <string>
#include <string_view>

#include "pry/common.hpp"

namespace pry {

// FNV-1a, 64-bit. Used for config hashes and substream derivation.
constexpr u64 fnv1a64(std::string_view s) {
  u64 h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<u8>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

static_assert(fnv1a64("") == 0xcbf29ce484222325ULL);
static_assert(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

// Hex rendering of a hash (lowercase, zero-padded, 16 chars).
std::string hash_hex(u64 h);

// First 8 hex chars; used in run directory names.
std::string hash_hex8(u64 h);

}  // namespace pry
