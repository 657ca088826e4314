#pragma once

// Counter-based random streams. A Stream is a 64-bit key derived from the
// root seed by hashing a path of indices (outer step, trajectory, ...); the
// k-th draw of a stream is a hash of (key, k). Results therefore never depend
// on the order in which streams are consumed.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace lqgame {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

struct Stream {
  std::uint64_t key = 0;

  static Stream root(std::uint64_t seed) { return {detail::mix64(seed ^ 0x6a09e667f3bcc909ULL)}; }

  Stream child(std::uint64_t index) const {
    return {detail::mix64(key ^ detail::mix64(index + 0x3c6ef372fe94f82bULL))};
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return detail::mix64(key + detail::mix64(counter));
  }
};

/// Sequential reader over one stream.
class StreamRng {
 public:
  explicit StreamRng(Stream s) : stream_(s) {}

  /// Uniform on (0, 1).
  double uniform() {
    const std::uint64_t b = stream_.bits(counter_++);
    return (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  Stream stream_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lqgame
