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
#include "forge/rng.hpp"
#include "forge/shape.hpp"
#include "json.hpp"

namespace forge {

using EdgeId = int;
using NodeId = int;

/// A tensor. `producer` is a node id, or -1 - i for the i-th create statement.
struct TensorRef {
  EdgeId edge_id = 0;
  int producer = 0;
  bool integer_typed = false;

  bool from_create() const { return producer < 0; }
  int create_index() const { return -1 - producer; }
  bool operator==(const TensorRef&) const = default;
};

struct Node {
  NodeId node_id = 0;
  std::string op;
  std::vector<EdgeId> inputs;
  EdgeId output = 0;
  Attrs attrs;  // pinned attributes; the solver chooses the rest

  bool operator==(const Node&) const = default;
};

struct CreateStatement {
  std::string op;
  EdgeId edge = 0;

  bool operator==(const CreateStatement&) const = default;
};

enum class BuildMode { Dag, Chain };

struct BuildConfig {
  int level = 1;
  BuildMode mode = BuildMode::Dag;
  std::optional<std::set<std::string>> op_subset;
  uint64_t seed = 0;
};

/// Operator graph in emission order. Edge ids are dense and assigned in
/// creation order, so `edges[i].edge_id == i`.
struct ProgramGraph {
  std::vector<CreateStatement> create_statements;
  std::vector<Node> nodes;
  std::vector<TensorRef> edges;
  std::vector<EdgeId> outputs;

  size_t edge_count() const { return edges.size(); }
  bool operator==(const ProgramGraph&) const = default;
};

ProgramGraph build(const BuildConfig& config, const Catalog& catalog, Rng& rng);

/// Convenience overload seeding the random source from `config.seed`.
ProgramGraph build(const BuildConfig& config, const Catalog& catalog);

inline int level_of(const ProgramGraph& g) { return static_cast<int>(g.nodes.size()); }

/// Digest over ops, pinned attrs, and wiring, with edges renamed by first
/// appearance. Equal for graphs that differ only by an order-preserving
/// renumbering of edge ids.
uint64_t structural_hash(const ProgramGraph& g);

/// Rebuilds the derived edge table and outputs from statements and nodes,
/// validating arity, single production, and def-before-use.
void finalize(ProgramGraph& g, const Catalog& catalog);

nlohmann::json to_json(const ProgramGraph& g);
ProgramGraph graph_from_json(const nlohmann::json& j, const Catalog& catalog);

std::string_view to_string(BuildMode m);
BuildMode build_mode_from_string(std::string_view s);

}  // namespace forge
