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
#include <set>

#include "test_util.hpp"

namespace forge {
namespace {

using testing::cat;
using testing::code_of;
using testing::make_graph;

TEST(Graph, LevelEqualsNodeCount) {
  for (int level : {1, 2, 5, 20}) {
    for (BuildMode mode : {BuildMode::Dag, BuildMode::Chain}) {
      const ProgramGraph g = build({level, mode, std::nullopt, 42}, cat());
      EXPECT_EQ(level_of(g), level);
      EXPECT_EQ(g.edge_count(), g.create_statements.size() + g.nodes.size());
    }
  }
}

TEST(Graph, DefinitionPrecedesUseAndSingleProduction) {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const ProgramGraph g = build({20, BuildMode::Dag, std::nullopt, seed}, cat());
    std::set<EdgeId> defined;
    for (const auto& c : g.create_statements) EXPECT_TRUE(defined.insert(c.edge).second);
    for (const auto& n : g.nodes) {
      std::set<EdgeId> distinct(n.inputs.begin(), n.inputs.end());
      EXPECT_EQ(distinct.size(), n.inputs.size());
      for (EdgeId e : n.inputs) EXPECT_TRUE(defined.count(e));
      EXPECT_TRUE(defined.insert(n.output).second);
      const auto& spec = cat().lookup(n.op);
      if (spec.is_variadic()) {
        EXPECT_GE(n.inputs.size(), 2u);
        EXPECT_LE(n.inputs.size(), 4u);
      } else {
        EXPECT_EQ(static_cast<int>(n.inputs.size()), spec.arity);
      }
    }
  }
}

TEST(Graph, ChainFeedsPreviousOutputFirst) {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const ProgramGraph g = build({5, BuildMode::Chain, std::nullopt, seed}, cat());
    for (size_t i = 1; i < g.nodes.size(); ++i) EXPECT_EQ(g.nodes[i].inputs[0], g.nodes[i - 1].output);
    EXPECT_NE(std::find(g.outputs.begin(), g.outputs.end(), g.nodes.back().output), g.outputs.end());
  }
}

TEST(Graph, OutputsAreUnconsumedEdges) {
  const ProgramGraph g = build({20, BuildMode::Dag, std::nullopt, 9}, cat());
  std::set<EdgeId> consumed;
  for (const auto& n : g.nodes) consumed.insert(n.inputs.begin(), n.inputs.end());
  std::vector<EdgeId> expect;
  for (const auto& t : g.edges)
    if (!consumed.count(t.edge_id)) expect.push_back(t.edge_id);
  std::vector<EdgeId> got = g.outputs;
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expect);
}

TEST(Graph, DeterministicPerSeed) {
  const BuildConfig a{20, BuildMode::Dag, std::nullopt, 77};
  EXPECT_EQ(build(a, cat()), build(a, cat()));
  BuildConfig b = a;
  b.seed = 78;
  EXPECT_NE(structural_hash(build(a, cat())), structural_hash(build(b, cat())));
}

TEST(Graph, SubsetRules) {
  BuildConfig c{3, BuildMode::Dag, std::set<std::string>{}, 1};
  EXPECT_EQ(code_of([&] { build(c, cat()); }), ErrorCode::EmptySubset);
  c.op_subset = std::set<std::string>{"Add", "Randn"};
  EXPECT_EQ(code_of([&] { build(c, cat()); }), ErrorCode::AritySubsetConflict);
  c.op_subset = std::set<std::string>{"Add"};
  for (const auto& n : build(c, cat()).nodes) EXPECT_EQ(n.op, "Add");
  c.level = 0;
  EXPECT_EQ(code_of([&] { build(c, cat()); }), ErrorCode::InvalidArgument);
}

TEST(Graph, FinalizeRejectsMalformed) {
  EXPECT_EQ(code_of([] { make_graph({"Randn"}, {{"Add", {0, 0}}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_graph({"Randn", "Randn"}, {{"Add", {0, 3}}, {"ReLU", {2}}}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_graph({"Randn"}, {{"ReLU", {0, 0}}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { make_graph({"Add"}, {}); }), ErrorCode::InvalidArgument);
}

TEST(Graph, JsonRoundTripAndHash) {
  const ProgramGraph g = build({10, BuildMode::Dag, std::nullopt, 5}, cat());
  const ProgramGraph back = graph_from_json(to_json(g), cat());
  EXPECT_EQ(back, g);
  EXPECT_EQ(structural_hash(back), structural_hash(g));
  ProgramGraph h = make_graph({"Randn", "Randn"}, {{"Add", {0, 1}}});
  ProgramGraph k = make_graph({"Randn", "Randn"}, {{"Mul", {0, 1}}});
  EXPECT_NE(structural_hash(h), structural_hash(k));
  EXPECT_EQ(structural_hash(h), structural_hash(make_graph({"Randn", "Randn"}, {{"Add", {0, 1}}})));
}

}  // namespace
}  // namespace forge
