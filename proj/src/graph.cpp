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

#include "forge/graph.hpp"

#include <algorithm>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/hash.hpp"

namespace forge {

using nlohmann::json;

std::string_view to_string(BuildMode m) { return m == BuildMode::Dag ? "dag" : "chain"; }

BuildMode build_mode_from_string(std::string_view s) {
  if (s == "dag") return BuildMode::Dag;
  if (s == "chain") return BuildMode::Chain;
  throw Error(ErrorCode::InvalidArgument, "mode must be dag or chain, got '" + std::string(s) + "'");
}

namespace {

class Builder {
 public:
  Builder(const BuildConfig& config, const Catalog& catalog, Rng& rng)
      : config_(config), catalog_(catalog), rng_(rng) {}

  ProgramGraph run() {
    if (config_.level < 1) throw Error(ErrorCode::InvalidArgument, "level must be >= 1");
    const std::set<std::string>* subset = config_.op_subset ? &*config_.op_subset : nullptr;
    if (subset) {
      if (subset->empty()) throw Error(ErrorCode::EmptySubset, "operator subset is empty");
      for (const auto& name : *subset) {
        const auto& spec = catalog_.lookup(name);
        if (spec.category == OpCategory::Create)
          throw Error(ErrorCode::AritySubsetConflict, "subset contains zero-input operator " + name);
      }
    }

    std::optional<EdgeId> previous;
    for (int i = 0; i < config_.level; ++i) {
      const OperatorSpec& spec = catalog_.sample_compute(rng_, subset);
      const int m = spec.is_variadic() ? static_cast<int>(rng_.uniform(kMinVariadic, kMaxVariadic)) : spec.arity;

      std::vector<EdgeId> inputs;
      if (config_.mode == BuildMode::Chain && previous) {
        inputs.push_back(*previous);
        while (static_cast<int>(candidates_.size()) - 1 < m - 1) add_create();
        std::vector<EdgeId> others;
        for (EdgeId e : candidates_)
          if (e != *previous) others.push_back(e);
        draw_into(others, m - 1, inputs);
      } else {
        while (static_cast<int>(candidates_.size()) < m) add_create();
        draw_into(candidates_, m, inputs);
      }

      Node node;
      node.node_id = static_cast<NodeId>(g_.nodes.size());
      node.op = spec.name;
      node.inputs = std::move(inputs);
      node.output = new_edge(node.node_id, spec.integer_output);
      g_.nodes.push_back(node);
      candidates_.push_back(node.output);
      previous = node.output;
    }
    finalize(g_, catalog_);
    return std::move(g_);
  }

 private:
  EdgeId new_edge(int producer, bool integer) {
    const EdgeId id = static_cast<EdgeId>(g_.edges.size());
    g_.edges.push_back({id, producer, integer});
    return id;
  }

  void add_create() {
    const OperatorSpec& spec = catalog_.sample_create(rng_);
    const int index = static_cast<int>(g_.create_statements.size());
    const EdgeId e = new_edge(-1 - index, false);
    g_.create_statements.push_back({spec.name, e});
    candidates_.push_back(e);
  }

  // Draws `count` distinct entries of `pool` in random order. Drawn tensors
  // stay in the candidate list for later nodes.
  void draw_into(std::vector<EdgeId> pool, int count, std::vector<EdgeId>& out) {
    for (int k = 0; k < count; ++k) {
      const size_t j = rng_.index(pool.size());
      out.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }

  const BuildConfig& config_;
  const Catalog& catalog_;
  Rng& rng_;
  ProgramGraph g_;
  std::vector<EdgeId> candidates_;
};

}  // namespace

ProgramGraph build(const BuildConfig& config, const Catalog& catalog, Rng& rng) {
  return Builder(config, catalog, rng).run();
}

ProgramGraph build(const BuildConfig& config, const Catalog& catalog) {
  Rng rng(config.seed);
  return build(config, catalog, rng);
}

void finalize(ProgramGraph& g, const Catalog& catalog) {
  const size_t n_edges = g.create_statements.size() + g.nodes.size();
  std::vector<int> producer(n_edges, 0);
  std::vector<bool> produced(n_edges, false);
  std::vector<bool> integer(n_edges, false);
  auto claim = [&](EdgeId e, int who) {
    if (e < 0 || static_cast<size_t>(e) >= n_edges)
      throw Error(ErrorCode::InvalidArgument, "edge id " + std::to_string(e) + " out of range");
    if (produced[e]) throw Error(ErrorCode::InvalidArgument, "edge " + std::to_string(e) + " produced twice");
    produced[e] = true;
    producer[e] = who;
  };
  for (size_t i = 0; i < g.create_statements.size(); ++i) {
    const auto& spec = catalog.lookup(g.create_statements[i].op);
    if (spec.category != OpCategory::Create)
      throw Error(ErrorCode::InvalidArgument, g.create_statements[i].op + " is not a create op");
    claim(g.create_statements[i].edge, -1 - static_cast<int>(i));
  }
  std::vector<bool> consumed(n_edges, false);
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    Node& node = g.nodes[i];
    node.node_id = static_cast<NodeId>(i);
    const auto& spec = catalog.lookup(node.op);
    if (spec.category == OpCategory::Create)
      throw Error(ErrorCode::InvalidArgument, node.op + " cannot appear as a compute node");
    const int m = static_cast<int>(node.inputs.size());
    if (spec.is_variadic() ? m < kMinVariadic : m != spec.arity)
      throw Error(ErrorCode::InvalidArgument, node.op + " has wrong input count " + std::to_string(m));
    std::set<EdgeId> distinct(node.inputs.begin(), node.inputs.end());
    if (static_cast<int>(distinct.size()) != m)
      throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(i) + " repeats an input");
    for (EdgeId e : node.inputs) {
      if (e < 0 || static_cast<size_t>(e) >= n_edges || !produced[e])
        throw Error(ErrorCode::InvalidArgument,
                    "node " + std::to_string(i) + " reads edge " + std::to_string(e) + " before definition");
      consumed[e] = true;
    }
    claim(node.output, static_cast<int>(i));
    integer[node.output] = spec.integer_output;
  }
  g.edges.clear();
  g.outputs.clear();
  for (size_t e = 0; e < n_edges; ++e) {
    if (!produced[e]) throw Error(ErrorCode::InvalidArgument, "edge " + std::to_string(e) + " never produced");
    g.edges.push_back({static_cast<EdgeId>(e), producer[e], integer[e]});
  }
  // Unconsumed edges in production order: creates never read, then node outputs.
  for (const auto& c : g.create_statements)
    if (!consumed[c.edge]) g.outputs.push_back(c.edge);
  for (const auto& n : g.nodes)
    if (!consumed[n.output]) g.outputs.push_back(n.output);
}

uint64_t structural_hash(const ProgramGraph& g) {
  std::unordered_map<EdgeId, int64_t> canon;
  for (const auto& c : g.create_statements) canon.emplace(c.edge, static_cast<int64_t>(canon.size()));
  for (const auto& n : g.nodes) canon.emplace(n.output, static_cast<int64_t>(canon.size()));
  Fnv1a h;
  h.str("graph");
  h.u64(g.create_statements.size());
  for (const auto& c : g.create_statements) h.str(c.op);
  h.u64(g.nodes.size());
  for (const auto& n : g.nodes) {
    h.str(n.op);
    h.u64(n.inputs.size());
    for (EdgeId e : n.inputs) h.i64(canon.at(e));
    h.str(json(n.attrs).dump());
  }
  for (EdgeId e : g.outputs) h.i64(canon.at(e));
  return h.digest();
}

json to_json(const ProgramGraph& g) {
  json creates = json::array();
  for (const auto& c : g.create_statements) creates.push_back({{"op", c.op}, {"edge", c.edge}});
  json nodes = json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"id", n.node_id}, {"op", n.op}, {"inputs", n.inputs}, {"output", n.output}, {"attrs", n.attrs}});
  return {{"create_statements", creates}, {"nodes", nodes}, {"outputs", g.outputs}};
}

ProgramGraph graph_from_json(const json& j, const Catalog& catalog) {
  ProgramGraph g;
  for (const auto& c : j.at("create_statements"))
    g.create_statements.push_back({c.at("op").get<std::string>(), c.at("edge").get<EdgeId>()});
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.op = n.at("op").get<std::string>();
    node.inputs = n.at("inputs").get<std::vector<EdgeId>>();
    node.output = n.at("output").get<EdgeId>();
    if (n.contains("attrs")) node.attrs = n.at("attrs").get<Attrs>();
    g.nodes.push_back(std::move(node));
  }
  finalize(g, catalog);
  if (j.contains("outputs") && j.at("outputs").get<std::vector<EdgeId>>() != g.outputs)
    throw Error(ErrorCode::InvalidArgument, "outputs do not match the unconsumed edges");
  return g;
}

}  // namespace forge
