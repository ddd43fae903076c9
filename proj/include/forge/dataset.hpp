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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "forge/catalog.hpp"
#include "forge/emitter.hpp"
#include "forge/graph.hpp"
#include "forge/solver.hpp"
#include "json.hpp"

namespace forge {

inline constexpr int kSlotRetries = 16;
inline constexpr int kOrderDraws = 4096;  // builder redraws per retry

struct StageSpec {
  int stage = 1;
  int level = 1;
  int count = 0;  // at scale 1
  BuildMode mode = BuildMode::Chain;
};

/// Stage 1..3 of the training curriculum. Throws InvalidArgument.
StageSpec stage_spec(int stage);

/// ceil(scale * count), robust to floating-point noise in scale. Throws
/// InvalidArgument unless 0 < scale <= 1 and the result is at least 1.
int scaled_count(int count, double scale);

/// A run of slots sharing level, mode, and optional operator subset.
struct SliceSpec {
  int level = 1;
  BuildMode mode = BuildMode::Chain;
  int count = 0;
  std::optional<std::set<std::string>> op_subset;
};

struct GenerationOptions {
  SolverConfig solver;
  int jobs = 1;
  std::optional<std::string> out_dir;  // write files when set
  std::set<std::string> exclude;       // program hashes that must not appear
};

struct DatasetEntry {
  std::string program_id;
  int level = 0;
  uint64_t seed = 0;
  std::string structural_hash;  // over wiring, attributes, and shapes
  std::string source_digest;
  std::string manifest_digest;
  std::string source_path;    // relative to the dataset directory
  std::string manifest_path;

  bool operator==(const DatasetEntry&) const = default;
};

struct DatasetManifest {
  std::string name;
  nlohmann::json spec;
  uint64_t seed = 0;
  std::vector<DatasetEntry> entries;

  std::string digest() const;
  std::set<std::string> hashes() const;
  bool operator==(const DatasetManifest&) const = default;
};

struct GeneratedProgram {
  EmittedProgram program;
  std::string hash;
  uint64_t seed = 0;
  int attempts = 0;
};

/// Digest over ops, wiring, attributes, and solved shapes.
std::string program_hash(const ProgramGraph& g, const ShapeSolution& s);

/// One verified program for a slot, trying up to kSlotRetries solver runs.
/// Graphs whose tensor orders cannot be satisfied are redrawn without
/// spending a retry. Returns nullopt when the retries run out.
std::optional<GeneratedProgram> generate_program(const SliceSpec& slice, uint64_t slot_seed, const SolverConfig& cfg,
                                                 const std::set<std::string>& exclude, const std::string& program_id,
                                                 const Catalog& catalog = Catalog::standard(), int first_attempt = 0);

/// Fills every slot in slice order, deduplicating by program hash. Throws
/// GenerationExhausted, or CoverageUnreachable for a slice restricted to one
/// operator.
DatasetManifest build_dataset(const std::string& name, const std::vector<SliceSpec>& slices, uint64_t seed,
                              const GenerationOptions& opts, const nlohmann::json& spec = nlohmann::json::object(),
                              const Catalog& catalog = Catalog::standard());

DatasetManifest build_stage(int stage, double scale, uint64_t seed, const GenerationOptions& opts,
                            const Catalog& catalog = Catalog::standard());

/// Level 1: every compute operator twice. Levels 2, 5, 20: 100 Dag programs each.
DatasetManifest build_benchmark(uint64_t seed, const GenerationOptions& opts,
                                const Catalog& catalog = Catalog::standard());

std::vector<SliceSpec> benchmark_slices(const Catalog& catalog = Catalog::standard());

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest dataset_from_json(const nlohmann::json& j);

/// Reads <dir>/index.json. Throws MalformedManifest.
DatasetManifest load_dataset(const std::string& dir);

struct DatasetProblem {
  std::string program_id;
  std::string detail;
};

/// Re-checks digests, the constraint checker, and the shape oracle for every
/// program in a dataset directory.
std::vector<DatasetProblem> verify_dataset(const std::string& dir, const Catalog& catalog = Catalog::standard());

}  // namespace forge
