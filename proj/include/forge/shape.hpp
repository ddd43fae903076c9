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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge {

using Shape = std::vector<int64_t>;

inline constexpr int kMaxOrder = 8;
inline constexpr int64_t kMinDim = 1;
inline constexpr int64_t kMaxDim = int64_t{1} << 15;

inline constexpr int64_t kSaturated = std::numeric_limits<int64_t>::max();

/// a * b for nonnegative operands, clamped at kSaturated.
constexpr int64_t sat_mul(int64_t a, int64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

constexpr int64_t sat_add(int64_t a, int64_t b) {
  if (a > kSaturated - b) return kSaturated;
  return a + b;
}

/// Element count; order-0 tensors hold one element.
inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n = sat_mul(n, d);
  return n;
}

std::string to_string(const Shape& s);

/// Resolved per-node operator attributes. Only the fields an operator uses
/// are set; the rest stay empty.
struct Attrs {
  std::optional<int> dim;
  std::optional<bool> keepdim;
  std::optional<int> stride;
  std::optional<int> padding;
  std::optional<int> dilation;
  std::optional<int> groups;
  std::optional<int> kernel;      // pooling window
  std::optional<int> num_groups;  // group norm
  std::optional<double> min_value;
  std::optional<double> max_value;

  bool operator==(const Attrs&) const = default;
};

void to_json(nlohmann::json& j, const Attrs& a);
void from_json(const nlohmann::json& j, Attrs& a);

}  // namespace forge
