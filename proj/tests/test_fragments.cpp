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
#include "forge/fragments.hpp"
#include "forge/source.hpp"
#include "test_util.hpp"

namespace forge {
namespace {

using testing::cat;
using testing::code_of;
using testing::make_graph;

size_t closed_form(int n) {
  size_t total = 0;
  for (int l = 1; l <= std::min(5, n); ++l) total += static_cast<size_t>(n - l + 1);
  return std::min<size_t>(total, 1024);
}

TEST(Fragments, ExtractCounts) {
  EXPECT_EQ(extract(1), (FragmentPlan{{0, 1}}));
  EXPECT_EQ(extract(5).size(), 15u);
  EXPECT_EQ(extract(20).size(), 90u);
  const FragmentPlan big = extract(300);
  ASSERT_EQ(big.size(), 1024u);
  EXPECT_EQ(std::count_if(big.begin(), big.end(), [](const Fragment& f) { return f.len <= 3; }), 897);
  EXPECT_EQ(std::count_if(big.begin(), big.end(), [](const Fragment& f) { return f.len == 4; }), 127);
  EXPECT_EQ(big.back(), (Fragment{126, 4}));
  EXPECT_EQ(code_of([] { extract(0); }), ErrorCode::InvalidArgument);
}

TEST(Fragments, OrderedByLengthThenStart) {
  const FragmentPlan p = extract(7);
  for (size_t i = 1; i < p.size(); ++i)
    EXPECT_LT(std::pair(p[i - 1].len, p[i - 1].start), std::pair(p[i].len, p[i].start));
  for (const auto& f : p) EXPECT_LE(f.start + f.len, 7);
}

TEST(Fragments, ClosedFormAgrees) {
  for (int n = 1; n <= 2000; ++n) {
    ASSERT_EQ(extract(n).size(), closed_form(n)) << n;
    ASSERT_EQ(plan_size(n), closed_form(n)) << n;
  }
}

EmittedProgram conv_relu_pool() {
  const ProgramGraph g =
      make_graph({"Randn", "Randn"}, {{"Conv2d", {0, 1}}, {"ReLU", {2}}, {"MaxPool2d", {3}}});
  ShapeSolution s;
  s.shapes = {{1, 3, 8, 8}, {4, 3, 3, 3}, {1, 4, 6, 6}, {1, 4, 6, 6}, {1, 4, 3, 3}};
  Attrs conv;
  conv.stride = 1;
  conv.padding = 0;
  conv.dilation = 1;
  conv.groups = 1;
  Attrs pool;
  pool.kernel = 2;
  pool.stride = 2;
  pool.padding = 0;
  s.attrs = {conv, {}, pool};
  compute_totals(s, g, cat());
  return emit(g, s, cat());
}

TEST(Fragments, ConvReluFusedIntoOneCall) {
  const EmittedProgram p = conv_relu_pool();
  const Fragment f{0, 2};
  const Boundary b = boundary(p.manifest, f);
  EXPECT_EQ(b.inputs, (std::vector<EdgeId>{0, 1}));
  EXPECT_EQ(b.outputs, (std::vector<EdgeId>{3}));
  const std::string entry = entry_name(f);
  const std::string hybrid = reconstruct(p, f, identity_replacement(p, f, entry), entry);
  const ParsedSource src = parse_source(hybrid);
  const SourceFunction* body = src.find(kOperatorFunction);
  ASSERT_NE(body, nullptr);
  ASSERT_EQ(body->body.size(), 2u);
  EXPECT_EQ(body->body[0].callee, entry);
  EXPECT_NE(hybrid.find("    tensor_3, = " + entry + "(tensor_0, tensor_1)\n    " + p.statements[2] + "\n"),
            std::string::npos);
  EXPECT_EQ(dataflow_digests(src, kOperatorFunction), dataflow_digests(parse_source(p.source), kOperatorFunction));
}

TEST(Fragments, BindingAndRangeErrors) {
  const EmittedProgram p = conv_relu_pool();
  const Fragment f{0, 2};
  const std::string entry = entry_name(f);
  const std::string wrong = "def " + entry + "(tensor_0):\n    tensor_3 = torch.relu(tensor_0)\n    return [tensor_3]\n";
  EXPECT_EQ(code_of([&] { reconstruct(p, f, wrong, entry); }), ErrorCode::BindingMismatch);
  EXPECT_EQ(code_of([&] { reconstruct(p, f, identity_replacement(p, f, entry), "other"); }), ErrorCode::BindingMismatch);
  EXPECT_EQ(code_of([&] { boundary(p.manifest, {2, 2}); }), ErrorCode::FragmentOutOfRange);
  EXPECT_EQ(code_of([&] { boundary(p.manifest, {-1, 1}); }), ErrorCode::FragmentOutOfRange);
  EXPECT_EQ(code_of([&] { boundary(p.manifest, {0, 0}); }), ErrorCode::FragmentOutOfRange);
}

std::vector<EmittedProgram> random_dags(int level, int want) {
  std::vector<EmittedProgram> out;
  for (uint64_t seed = 0; static_cast<int>(out.size()) < want && seed < 500; ++seed) {
    const ProgramGraph g = build({level, BuildMode::Dag, std::nullopt, seed}, cat());
    const ConstraintSet cs = emit_constraints(g, cat());
    if (!orders_feasible(cs)) continue;
    Rng rng(seed);
    const SolveResult r = solve(cs, SolverConfig{}, rng);
    if (r.ok()) out.push_back(emit(g, *r.solution, cat()));
  }
  return out;
}

TEST(Fragments, IdentityReplacementPreservesDataflow) {
  auto programs = random_dags(5, 4);
  auto big = random_dags(20, 2);
  programs.insert(programs.end(), big.begin(), big.end());
  ASSERT_GE(programs.size(), 5u);
  for (const auto& p : programs) {
    const auto reference = dataflow_digests(parse_source(p.source), kOperatorFunction);
    const int n = p.manifest.level;
    FragmentPlan plan = extract(n);
    plan.push_back({0, n});
    for (const Fragment& f : plan) {
      const std::string entry = entry_name(f);
      const Boundary b = boundary(p.manifest, f);
      EXPECT_FALSE(b.outputs.empty());
      const std::string hybrid = reconstruct(p, f, identity_replacement(p, f, entry), entry);
      ASSERT_EQ(dataflow_digests(parse_source(hybrid), kOperatorFunction), reference)
          << p.manifest.program_id << " fragment " << f.start << "+" << f.len;
    }
  }
}

Candidate timed(int start, int len, double t, bool verified = true) {
  Candidate c;
  c.fragment = {start, len};
  c.verified = verified;
  if (verified) c.measured_time = t;
  return c;
}

TEST(Fragments, SelectBest) {
  EXPECT_EQ(select_best({timed(0, 1, 0.9), timed(1, 1, 1.1), timed(2, 1, 0.7)}).fragment, (Fragment{2, 1}));
  EXPECT_EQ(select_best({timed(3, 1, 0.8), timed(1, 1, 0.8)}).fragment.start, 1);
  EXPECT_EQ(select_best({timed(1, 2, 0.8), timed(1, 1, 0.8)}).fragment.len, 1);
  EXPECT_EQ(select_best({timed(0, 1, 0.1, false), timed(1, 1, 0.5)}).fragment.start, 1);
  EXPECT_EQ(code_of([] { select_best({timed(0, 1, 0.1, false)}); }), ErrorCode::NoneVerified);
  EXPECT_EQ(code_of([] { select_best({}); }), ErrorCode::NoneVerified);
}

TEST(Fragments, SearchWithPairFusingGenerator) {
  const auto programs = random_dags(5, 2);
  ASSERT_FALSE(programs.empty());
  for (const auto& p : programs) {
    int calls = 0;
    const Generator pairs = [&](const EmittedProgram& q, const Fragment& f,
                                const std::string& entry) -> std::optional<std::string> {
      ++calls;
      if (f.len != 2) return std::nullopt;
      return identity_replacement(q, f, entry);
    };
    const SearchResult r = run_search(p, pairs);
    EXPECT_EQ(calls, 15);
    EXPECT_EQ(r.log.size(), 15u);
    ASSERT_TRUE(r.best);
    EXPECT_EQ(r.best->fragment, (Fragment{0, 2}));
    EXPECT_EQ(*r.best->measured_time, 4.0);
    EXPECT_EQ(statement_count_cost(r.hybrid), 4.0);
  }
}

TEST(Fragments, SearchDefaultsAndFailure) {
  const auto programs = random_dags(20, 1);
  ASSERT_FALSE(programs.empty());
  const SearchResult r = run_search(programs[0]);
  EXPECT_EQ(r.log.size(), 90u);
  ASSERT_TRUE(r.best);
  EXPECT_EQ(r.best->fragment, (Fragment{0, 5}));
  EXPECT_EQ(*r.best->measured_time, 16.0);

  const Verifier never = [](const EmittedProgram&, const Fragment&, const std::string&) { return false; };
  const SearchResult none = run_search(programs[0], passthrough_generator(), never);
  EXPECT_TRUE(none.none_verified);
  EXPECT_FALSE(none.best);
  EXPECT_TRUE(none.hybrid.empty());
  EXPECT_EQ(code_of([] { cost_model("wallclock"); }), ErrorCode::InvalidArgument);
}

}  // namespace
}  // namespace forge
