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
#include <string>
#include <string_view>

namespace forge {

// 64-bit FNV-1a. Stable across platforms and runs, which std::hash is not.
class Fnv1a {
 public:
  Fnv1a& bytes(std::string_view data) {
    for (unsigned char c : data) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  Fnv1a& u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (v >> (8 * i)) & 0xff;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  Fnv1a& i64(int64_t v) { return u64(static_cast<uint64_t>(v)); }

  Fnv1a& str(std::string_view s) {
    u64(s.size());
    return bytes(s);
  }

  uint64_t digest() const { return state_; }

 private:
  uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline uint64_t fnv1a(std::string_view data) { return Fnv1a().bytes(data).digest(); }

std::string hex64(uint64_t v);

}  // namespace forge
