// Copyright 2026 The Forge Authors
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

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace forge {

/// splitmix64 finalizer; used to derive independent seeds from a parent seed.
constexpr uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

/// Seeded random source with portable distributions. The standard library's
/// distribution objects are implementation-defined, so every draw here is
/// computed directly from the 64-bit engine output.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi] (inclusive).
  int64_t uniform(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<int64_t>(next());
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x = next();
    while (x >= limit) x = next();
    return lo + static_cast<int64_t>(x % span);
  }

  /// Uniform index in [0, n).
  size_t index(size_t n) { return static_cast<size_t>(uniform(0, static_cast<int64_t>(n) - 1)); }

  /// Uniform real in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  /// Random permutation of [0, weights.size()) drawn by successive weighted
  /// sampling without replacement. Zero-weight entries are placed last.
  std::vector<int> weighted_order(std::span<const double> weights) {
    std::vector<int> rest(weights.size());
    for (size_t i = 0; i < rest.size(); ++i) rest[i] = static_cast<int>(i);
    std::vector<int> out;
    out.reserve(rest.size());
    while (!rest.empty()) {
      double total = 0;
      for (int i : rest) total += weights[i];
      size_t pick = 0;
      if (total > 0) {
        double r = unit() * total;
        for (; pick + 1 < rest.size(); ++pick) {
          r -= weights[rest[pick]];
          if (r < 0) break;
        }
      }
      out.push_back(rest[pick]);
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace forge
