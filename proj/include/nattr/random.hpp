// Copyright 2026 The nattr Authors.
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

#ifndef NATTR_RANDOM_HPP
#define NATTR_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace nattr {

/// Seeded random stream with a platform-independent output sequence.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so the conversions are done here:
///   uniform  = top 53 bits of one draw scaled by 2^-53, in [0, 1)
///   normal   = Box-Muller on two uniforms (cosine branch only)
///   index(n) = multiply-shift of one draw, in [0, n)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t index(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * bound) >> 64);
  }

  /// Fisher-Yates shuffle driven by index().
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nattr

#endif  // NATTR_RANDOM_HPP
