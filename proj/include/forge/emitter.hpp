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
#include <vector>

#include "forge/catalog.hpp"
#include "forge/graph.hpp"
#include "forge/solver.hpp"
#include "json.hpp"

namespace forge {

inline constexpr const char* kInputFunction = "get_inputs";
inline constexpr const char* kOperatorFunction = "fused_operator";

/// Sidecar metadata for one emitted program. Carries the full graph and
/// solution so tools can re-verify a program without its source.
struct Manifest {
  std::string program_id;
  int level = 0;
  uint64_t seed = 0;
  std::vector<std::string> ops;  // node ops in statement order
  ProgramGraph graph;
  ShapeSolution solution;
  std::vector<EdgeId> outputs;

  bool operator==(const Manifest&) const = default;
};

struct ProgramInfo {
  std::string program_id = "program";
  uint64_t seed = 0;
};

struct EmittedProgram {
  std::string source;
  Manifest manifest;
  std::vector<std::string> input_lines;  // create statements, unindented
  std::vector<std::string> statements;   // one per node, unindented
};

std::string tensor_name(EdgeId e);

/// Right-hand side of node `i`, e.g. `torch.add(tensor_0, tensor_1)`.
std::string render_call(const ProgramGraph& graph, const ShapeSolution& solution, size_t i, const Catalog& catalog);

/// Throws UnverifiedSolution unless the solution passes the shape oracle.
EmittedProgram emit(const ProgramGraph& graph, const ShapeSolution& solution, const Catalog& catalog,
                    const ProgramInfo& info = {});

/// Lays out a program file. `prelude` (possibly empty) is placed between the
/// imports and the input function.
std::string assemble_source(const std::vector<std::string>& input_lines, const std::vector<EdgeId>& inputs,
                            const std::vector<std::string>& body, const std::vector<EdgeId>& outputs,
                            const std::string& prelude = "");

nlohmann::json to_json(const Manifest& m);
std::string serialize_manifest(const Manifest& m);

/// Throws MalformedManifest on bad JSON, missing fields, or fields that
/// disagree with the embedded graph.
Manifest parse_manifest(const std::string& text, const Catalog& catalog = Catalog::standard());

}  // namespace forge
