#pragma once

#include "pddpm/types.hpp"

#include <cmath>
#include <cstdint>

namespace pddpm {

/// Seedable generator with a hand-rolled Box-Muller normal so that seeded
/// runs are bit-reproducible across standard libraries. Per-sample streams
/// are derived with splitmix64 so parallel sampling never changes results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // splitmix warm-up decorrelates small seeds
    for (int i = 0; i < 4; ++i) next();
  }

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed, 0x9E3779B97F4A7C15ull ^ mix(index + 1, 0xBF58476D1CE4E5B9ull)));
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  /// Standard normal draw (Box-Muller, cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps the log finite
    const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Plane normal_plane(Eigen::Index h, Eigen::Index w) {
    Plane p(h, w);
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c) p(r, c) = normal();
    return p;
  }

  Planes normal_planes(Eigen::Index h, Eigen::Index w, std::size_t channels) {
    Planes out;
    out.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) out.push_back(normal_plane(h, w));
    return out;
  }

 private:
  static std::uint64_t mix(std::uint64_t v, std::uint64_t salt) {
    std::uint64_t z = v + salt;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pddpm
