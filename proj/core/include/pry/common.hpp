#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pry {

// Thrown on invalid configs, malformed files, and broken invariants that a
// caller could plausibly trigger. Internal logic errors use assert instead.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

}  // namespace pry
