#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "pry/common.hpp"
#include "pry/hashing.hpp"

namespace pry {

// Deterministic RNG used everywhere. Distributions are implemented by hand
// (uniform from raw bits, Gaussian via Box-Muller) because the std::
// distributions are implementation-defined and would break cross-platform
// reproducibility of datasets and training runs.
class Rng {
 public:
  explicit Rng(u64 seed) : engine_(seed) {}

  u64 bits() { return engine_(); }

  // Uniform in [0, 1): 53 random mantissa bits.
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free modulo is fine here: n is tiny
  // compared to 2^64, the bias is < 2^-50.
  u64 uniform_index(u64 n) {
    require(n > 0, "uniform_index: empty range");
    return bits() % n;
  }

  // Standard normal via Box-Muller; caches the second deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Serializable state (engine stream position is part of it).
  std::string state() const {
    std::ostringstream os;
    os << engine_ << " " << (has_spare_ ? 1 : 0) << " ";
    os.precision(17);
    os << spare_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    int spare_flag = 0;
    is >> engine_ >> spare_flag >> spare_;
    require(!is.fail(), "Rng::set_state: malformed state string");
    has_spare_ = spare_flag != 0;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64: the standard 64-bit mixer, used to derive independent
// substream seeds from (seed, purpose, indices) without stream overlap.
constexpr u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a substream seed from a root seed, a purpose tag, and up to three
// indices. Same inputs -> same stream, independent of call order.
inline u64 substream_seed(u64 root, std::string_view purpose, u64 a = 0,
                          u64 b = 0, u64 c = 0) {
  u64 h = fnv1a64(purpose);
  h = splitmix64(h ^ splitmix64(root));
  h = splitmix64(h ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
  h = splitmix64(h ^ splitmix64(b + 0x7f4a7c159e3779b9ULL));
  h = splitmix64(h ^ splitmix64(c + 0x2545f4914f6cdd1dULL));
  return h;
}

inline Rng substream(u64 root, std::string_view purpose, u64 a = 0, u64 b = 0,
                     u64 c = 0) {
  return Rng(substream_seed(root, purpose, a, b, c));
}

}  // namespace pry
