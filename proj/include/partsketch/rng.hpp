/* Copyright 2026 The Partsketch Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PARTSKETCH_RNG_HPP_
#define PARTSKETCH_RNG_HPP_

#include <cstdint>
#include <limits>

namespace partsketch {

/// SplitMix64 with portable bounded draws.
///
/// The standard library's distributions are implementation-defined, so
/// every seeded artifact (random sketches, permutations, rollouts) draws
/// through this class instead. The stream for a given seed is identical on
/// every platform:
///   state += 0x9e3779b97f4a7c15
///   z = state; z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
///   z = (z ^ (z >> 27)) * 0x94d049bb133111eb; return z ^ (z >> 31)
/// Bounded integers use rejection sampling on the top of the 64-bit range;
/// reals use the upper 53 bits.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  /// Uniform integer in [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());  // full range
    const std::uint64_t limit = max() - (max() % span + 1) % span;
    std::uint64_t draw = next();
    while (draw > limit) draw = next();
    return lo + static_cast<std::int64_t>(draw % span);
  }

  /// Uniform real in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Derives an independent child stream.
  Rng fork(std::uint64_t salt) {
    return Rng(next() ^ (salt * 0xd1b54a32d192ed03ULL));
  }

 private:
  std::uint64_t state_;
};

}  // namespace partsketch

#endif  // PARTSKETCH_RNG_HPP_
