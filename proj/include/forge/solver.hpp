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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/catalog.hpp"
#include "forge/graph.hpp"
#include "forge/rng.hpp"
#include "forge/shape.hpp"
#include "json.hpp"

namespace forge {

struct SolverConfig {
  int64_t min_flops = 1'000'000;
  int64_t max_flops = 10'000'000'000;
  int64_t max_size = int64_t{1} << 26;
  int64_t min_size_tensor = 16;
  double time_budget = 10.0;  // seconds
  uint64_t seed = 0;

  /// Bounds suited to tiny hand-written instances: no FLOP floor, no size floor.
  static SolverConfig permissive();
  void validate() const;
};

/// Bounds from the global constraints (FLOP window, total size, per-edge floor).
struct GlobalBounds {
  int64_t min_flops = 0;
  int64_t max_flops = 0;
  int64_t max_size = 0;
  int64_t min_size_tensor = 1;
};

/// A fixed order, optionally with fixed dimensions, for one edge.
struct Pin {
  int order = 0;
  std::optional<Shape> dims;
};

/// One node's constraint block: the rule family plus its rendered clauses.
struct ConstraintBlock {
  NodeId node = 0;
  std::string op;
  ConstraintKind kind = ConstraintKind::None;
  std::vector<EdgeId> inputs;
  EdgeId output = 0;
  std::vector<std::string> clauses;
};

struct ConstraintSet {
  ProgramGraph graph;
  const Catalog* catalog = nullptr;
  std::vector<ConstraintBlock> blocks;
  std::vector<std::string> global_clauses;
  GlobalBounds bounds;
  std::map<EdgeId, Pin> pins;

  void pin_shape(EdgeId e, Shape shape);
  void pin_order(EdgeId e, int order);
  nlohmann::json to_json() const;
};

struct ShapeSolution {
  std::vector<Shape> shapes;  // indexed by edge id
  std::vector<Attrs> attrs;   // indexed by node id
  int64_t total_flops = 0;
  int64_t total_numel = 0;

  bool operator==(const ShapeSolution&) const = default;
};

struct Violation {
  int node = -1;  // -1 for edge-level and global constraints
  int edge = -1;
  std::string constraint;
  std::string detail;
};

enum class SolveStatus { Solved, Infeasible, TimedOut };

struct SolveStats {
  int restarts = 0;
  int structural_leaves = 0;
  int64_t search_nodes = 0;
  int check_rejections = 0;  // leaves the independent checker refused
  double seconds = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::TimedOut;
  std::optional<ShapeSolution> solution;
  std::string detail;
  SolveStats stats;

  bool ok() const { return status == SolveStatus::Solved; }
};

ConstraintSet emit_constraints(const ProgramGraph& graph, const Catalog& catalog,
                               const SolverConfig& cfg = SolverConfig{});

/// Randomized two-phase backtracking search. Deterministic for a given rng
/// state unless the wall-clock budget runs out first.
SolveResult solve(const ConstraintSet& cs, const SolverConfig& cfg, Rng& rng);

/// Necessary condition checked before any search: some assignment of tensor
/// orders satisfies every node's order rules and pins. Cheap.
bool orders_feasible(const ConstraintSet& cs);

/// Exact re-evaluation of every per-node and global constraint. Throws
/// IncompleteSolution when shapes or attributes are missing.
std::vector<Violation> check(const ShapeSolution& solution, const ConstraintSet& cs);

/// FLOP total and element total for a solved graph.
void compute_totals(ShapeSolution& solution, const ProgramGraph& graph, const Catalog& catalog);

/// True when some operator in the graph has a nonzero FLOP model; otherwise
/// the FLOP floor is waived.
bool flop_floor_applies(const ProgramGraph& graph, const Catalog& catalog);

std::string_view to_string(SolveStatus s);

nlohmann::json to_json(const ShapeSolution& s);
ShapeSolution solution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<Violation>& v);

}  // namespace forge
