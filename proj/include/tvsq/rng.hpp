// Copyright 2026 The tvsq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/** @file
 * Portable seeded random source.
 *
 * Streams are defined bit-for-bit so that fixtures can be reproduced by any
 * implementation:
 *
 *  - SplitMix64: state += 0x9e3779b97f4a7c15, output = mix64(state) with
 *    mix64(z) = z ^= z >> 30; z *= 0xbf58476d1ce4e5b9; z ^= z >> 27;
 *    z *= 0x94d049bb133111eb; z ^= z >> 31.
 *  - uniform(): (next() >> 11) * 2^-53, in [0, 1).
 *  - below(n): draw x = next() until x >= (2^64 - n) mod n; return x mod n.
 *  - normal(): Marsaglia polar method. Each attempt consumes two uniforms
 *    a, b; x = 2a - 1, y = 2b - 1, s = x^2 + y^2; retry unless 0 < s < 1;
 *    return x sqrt(-2 ln s / s). The second variate of the pair is discarded.
 *  - substream_seed(seed, i) = mix64(seed ^ mix64(i + 0x9e3779b97f4a7c15)).
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace tvsq {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t substream_seed(std::uint64_t seed,
                                              std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x = next();
    while (x < threshold) x = next();
    return x % n;
  }

  double normal() {
    for (;;) {
      const double x = 2.0 * uniform() - 1.0;
      const double y = 2.0 * uniform() - 1.0;
      const double s = x * x + y * y;
      if (s > 0.0 && s < 1.0) return x * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace tvsq
