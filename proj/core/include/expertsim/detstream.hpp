#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace expertsim {

// Counter-based deterministic random stream. Every draw is a pure function
// of (master seed, key), so servers and the coordinator can replay each
// other's public draws without exchanging a single bit, and Monte Carlo
// loops can be split over disjoint counter ranges with identical results.

// Roles partition the counter space so independent parts of a simulation
// never share draws.
enum class StreamRole : std::uint64_t {
  kInstance = 1,    // synthetic instance generators
  kServerExp = 2,   // per-(t, i, j, b) exponential scalings, server-private
  kPublicCoin = 3,  // round activity / level draws, shared by all parties
  kMwuChoice = 4,   // coordinator's expert draw
  kVerify = 5,      // statistical verification suites
};

// Coordinates of a single draw. `rej` is an internal rejection axis so
// resampling never collides with a caller's next draw.
struct StreamKey {
  StreamRole role = StreamRole::kVerify;
  std::uint64_t t = 0;
  std::uint64_t i = 0;
  std::uint64_t j = 0;
  std::uint64_t b = 0;
  std::uint64_t draw = 0;
  std::uint64_t rej = 0;
};

// SplitMix64 finalizer; bijective on 64 bits with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t stream_word(std::uint64_t seed, const StreamKey& k) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h + kGolden + static_cast<std::uint64_t>(k.role));
  h = mix64(h + kGolden + k.t);
  h = mix64(h + kGolden + k.i);
  h = mix64(h + kGolden + k.j);
  h = mix64(h + kGolden + k.b);
  h = mix64(h + kGolden + k.draw);
  h = mix64(h + kGolden + k.rej);
  return h;
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, const StreamKey& k) {
  return static_cast<double>(stream_word(seed, k) >> 11) * 0x1.0p-53;
}

// Inverse CDF of the rate-1 exponential. Requires u in (0, 1).
inline double exponential_from_uniform(double u) {
  if (!(u > 0.0) || !(u < 1.0)) {
    throw std::domain_error("exponential_from_uniform: u must lie in (0, 1)");
  }
  return -std::log(u);
}

// Rate-1 exponential draw; strictly positive and finite. A uniform draw of
// exactly 0 is resampled on the rejection axis.
inline double sample_exponential(std::uint64_t seed, StreamKey k) {
  for (;; ++k.rej) {
    const double u = uniform01(seed, k);
    if (u > 0.0) return exponential_from_uniform(u);
  }
}

// Stateful view over one key; bumps the draw counter per call.
class SequentialStream {
 public:
  SequentialStream(std::uint64_t seed, StreamKey base) : seed_(seed), key_(base) {}

  std::uint64_t word() { return stream_word(seed_, next()); }
  double uniform() { return uniform01(seed_, next()); }
  double exponential() { return sample_exponential(seed_, next()); }

 private:
  StreamKey next() {
    StreamKey k = key_;
    ++key_.draw;
    return k;
  }

  std::uint64_t seed_;
  StreamKey key_;
};

}  // namespace expertsim
