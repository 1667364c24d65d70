#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter), so parallel tasks indexed by stream reproduce
// bit-for-bit regardless of scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qcb {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                            std::uint64_t counter) {
  return mix64(seed ^ mix64(stream * 0xd1342543de82ef95ULL + mix64(counter)));
}

/// A cheap handle over one (seed, stream) pair; copying it forks the sequence.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return counter_hash(seed_, stream_, counter_++); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Derived stream, independent of this one.
  RandomStream split(std::uint64_t index) const {
    return RandomStream(seed_, mix64(stream_ ^ (index + 0x632be59bd9b4e019ULL)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace qcb
