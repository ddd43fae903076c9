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

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "forge/emitter.hpp"
#include "json.hpp"

namespace forge {

inline constexpr int kMaxFragmentLength = 5;
inline constexpr size_t kMaxFragments = 1024;

/// Contiguous run of statements [start, start + len).
struct Fragment {
  int start = 0;
  int len = 1;

  bool operator==(const Fragment&) const = default;
};

using FragmentPlan = std::vector<Fragment>;

/// All fragments of length 1..min(max_len, n) ordered by (len, start),
/// truncated to `cap`. Throws InvalidArgument when n < 1.
FragmentPlan extract(int n, int max_len = kMaxFragmentLength, size_t cap = kMaxFragments);

/// Closed-form plan size: min(sum over l of (n - l + 1), cap).
size_t plan_size(int n, int max_len = kMaxFragmentLength, size_t cap = kMaxFragments);

/// Tensors crossing a fragment boundary, each in ascending edge order.
/// `outputs` are tensors produced inside and read afterwards or returned.
struct Boundary {
  std::vector<EdgeId> inputs;
  std::vector<EdgeId> outputs;
};

/// Throws FragmentOutOfRange.
Boundary boundary(const Manifest& m, const Fragment& f);

/// Default entry name for a fragment's replacement.
std::string entry_name(const Fragment& f);

/// Replacement that re-states the fragment verbatim inside `entry`.
std::string identity_replacement(const EmittedProgram& p, const Fragment& f, const std::string& entry);

/// Hybrid source: the fragment's statements become one call to `entry`,
/// which must be defined by `replacement` with one parameter per boundary
/// input. Throws FragmentOutOfRange or BindingMismatch.
std::string reconstruct(const EmittedProgram& p, const Fragment& f, const std::string& replacement,
                        const std::string& entry);

struct Candidate {
  Fragment fragment;
  std::string replacement_source;
  bool verified = false;
  std::optional<double> measured_time;  // seconds, present only when verified
};

/// Fastest verified candidate; ties go to smaller start, then smaller len.
/// Throws NoneVerified.
const Candidate& select_best(const std::vector<Candidate>& candidates);

/// Returns a replacement for the fragment, or nullopt when generation fails.
using Generator = std::function<std::optional<std::string>(const EmittedProgram&, const Fragment&, const std::string& entry)>;
using Verifier = std::function<bool(const EmittedProgram&, const Fragment&, const std::string& replacement)>;
using Bench = std::function<double(const std::string& hybrid_source)>;

Generator passthrough_generator();
Verifier always_verifier();

/// Cost model: number of statements in the operator function of the source.
double statement_count_cost(const std::string& source);

/// Looks up a cost model by name ("statements" or "unit"). Throws InvalidArgument.
Bench cost_model(const std::string& name);

struct SearchResult {
  bool none_verified = false;
  std::optional<Candidate> best;
  std::string hybrid;
  std::vector<Candidate> log;  // plan order
};

SearchResult run_search(const EmittedProgram& p, const Generator& gen = passthrough_generator(),
                        const Verifier& verify = always_verifier(), const Bench& bench = cost_model("statements"));

nlohmann::json to_json(const FragmentPlan& plan);
nlohmann::json to_json(const SearchResult& r);

}  // namespace forge
