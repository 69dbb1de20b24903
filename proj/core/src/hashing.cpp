#include "pry/hashing.hpp"

#include <string>

namespace pry {

std::string hash_hex(u64 h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string hash_hex8(u64 h) { return hash_hex(h).substr(0, 8); }

}  // namespace pry
