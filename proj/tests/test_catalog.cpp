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

TEST(Catalog, SizesAndKinds) {
  EXPECT_EQ(cat().create_ops().size(), 3u);
  EXPECT_EQ(cat().compute_ops().size(), 61u);
  EXPECT_EQ(cat().all().size(), 64u);
  std::set<std::string> names;
  for (const auto& op : cat().all()) {
    EXPECT_TRUE(names.insert(op.name).second) << op.name;
    EXPECT_EQ(op.qualified_name.rfind("torch.", 0), 0u) << op.name;
  }
  for (const auto& op : cat().compute_ops()) EXPECT_NE(op.constraint_kind, ConstraintKind::None) << op.name;
  for (const auto& op : cat().create_ops()) EXPECT_EQ(op.arity, 0);
}

TEST(Catalog, LookupUnknownIsNotFound) {
  EXPECT_EQ(code_of([] { cat().lookup("Frobnicate"); }), ErrorCode::NotFound);
  EXPECT_FALSE(cat().contains("Frobnicate"));
  EXPECT_EQ(cat().lookup("Add").qualified_name, "torch.add");
}

TEST(Catalog, FlopsHandComputed) {
  const auto& mm = cat().lookup("Matmul");
  std::vector<Shape> in = {{2, 3}, {3, 4}};
  // 2 * M * N * K
  EXPECT_EQ(flops_of(mm, in, {2, 4}, {}), 2 * 2 * 4 * 3);

  const auto& conv = cat().lookup("Conv2d");
  in = {{1, 3, 8, 8}, {4, 3, 3, 3}};
  // 2 * numel(out) * Cin * kh * kw = 2 * 144 * 27
  EXPECT_EQ(flops_of(conv, in, {1, 4, 6, 6}, {}), 7776);

  in = {{4}, {4}};
  EXPECT_EQ(flops_of(cat().lookup("Add"), in, {4}, {}), 4);
  EXPECT_EQ(flops_of(cat().lookup("Randn"), {}, {4}, {}), 0);

  Attrs pool;
  pool.kernel = 3;
  in = {{1, 2, 4, 4}};
  EXPECT_EQ(flops_of(cat().lookup("MaxPool2d"), in, {1, 2, 2, 2}, pool), 8 * 9);
}

TEST(Catalog, FlopsRejectsBadArity) {
  std::vector<Shape> one = {{4}};
  EXPECT_EQ(code_of([&] { flops_of(cat().lookup("Add"), one, {4}, {}); }), ErrorCode::ShapeMismatch);
  std::vector<Shape> bad = {{2, 3}, {4, 5}};
  EXPECT_EQ(code_of([&] { flops_of(cat().lookup("Matmul"), bad, {2, 5}, {}); }), ErrorCode::ShapeMismatch);
}

TEST(Catalog, FlopCountIsMonotone) {
  Rng rng(3);
  for (const auto& op : cat().compute_ops()) {
    for (int t = 0; t < 20; ++t) {
      Shape a = {rng.uniform(1, 9), rng.uniform(1, 9), rng.uniform(1, 9), rng.uniform(1, 9)};
      Shape b = a;
      b[static_cast<size_t>(rng.uniform(0, 3))] += rng.uniform(1, 5);
      std::vector<Shape> ia = {a, a}, ib = {b, b};
      Attrs at;
      at.kernel = 2;
      EXPECT_LE(flop_count(op.flop_model, ia, a, at), flop_count(op.flop_model, ib, b, at)) << op.name;
    }
  }
}

TEST(Catalog, JsonRoundTrip) {
  const Catalog back = Catalog::from_json(cat().to_json());
  EXPECT_EQ(back.all(), cat().all());
}

TEST(Catalog, SampleRespectsSubset) {
  Rng rng(1);
  const std::set<std::string> subset = {"Add", "ReLU"};
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(subset.count(cat().sample_compute(rng, &subset).name));
  std::set<std::string> seen;
  for (int i = 0; i < 5000; ++i) seen.insert(cat().sample_compute(rng).name);
  EXPECT_EQ(seen.size(), 61u);
}

}  // namespace
}  // namespace forge
