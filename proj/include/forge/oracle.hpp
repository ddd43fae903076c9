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

#include <optional>
#include <string>
#include <vector>

#include "forge/catalog.hpp"
#include "forge/graph.hpp"
#include "forge/shape.hpp"
#include "forge/solver.hpp"
#include "json.hpp"

namespace forge {

/// Forward shape inference result. On error, `shapes` holds every edge
/// inferred before the failing node; the rest are empty optionals.
struct ShapeReport {
  bool ok = true;
  int error_node = -1;
  std::string reason;
  std::vector<std::optional<Shape>> shapes;  // indexed by edge id
};

/// Propagates shapes in emission order using framework semantics.
/// `create_shapes[i]` is the shape of the i-th create statement; `attrs` is
/// indexed by node id. Never throws.
ShapeReport infer(const ProgramGraph& graph, const std::vector<Shape>& create_shapes,
                  const std::vector<Attrs>& attrs, const Catalog& catalog);

/// Broadcast of two shapes under right alignment, or nullopt.
std::optional<Shape> broadcast_shapes(const Shape& a, const Shape& b);

struct ShapeMismatch {
  EdgeId edge = 0;
  Shape expected;  // from the solution
  std::optional<Shape> inferred;
};

struct MatchReport {
  bool ok = true;
  std::optional<int> error_node;
  std::string reason;
  std::vector<ShapeMismatch> mismatches;
};

/// Re-infers every edge from the solution's create shapes and attributes and
/// compares against the solution. Never throws.
MatchReport verify_program(const ProgramGraph& graph, const ShapeSolution& solution, const Catalog& catalog);

nlohmann::json to_json(const ShapeReport& r);
nlohmann::json to_json(const MatchReport& r);

}  // namespace forge
