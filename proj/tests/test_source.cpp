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
#include "forge/source.hpp"
#include "test_util.hpp"

namespace forge {
namespace {

using testing::code_of;

const char* kHeader = "import torch\nimport torch.nn.functional as F\n\n";

TEST(Source, ParsesStatements) {
  const ParsedSource s = parse_source(std::string(kHeader) +
                                      "def f(a, b):\n"
                                      "    c = torch.add(a, b)\n"
                                      "    d = torch.max(c, dim=0, keepdim=True)[0]\n"
                                      "    e, g, = torch.split(d)\n"
                                      "    h = F.conv2d(c, d, None, (1, 1), (0, 0), (1, 1), 1)\n"
                                      "    return [e, h]\n");
  ASSERT_EQ(s.functions.size(), 1u);
  const auto& f = s.functions[0];
  EXPECT_EQ(f.params, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(f.body.size(), 4u);
  EXPECT_TRUE(f.body[1].select_first);
  EXPECT_EQ(f.body[2].targets, (std::vector<std::string>{"e", "g"}));
  EXPECT_EQ(f.returns, (std::vector<std::string>{"e", "h"}));
}

TEST(Source, RejectsUseBeforeDefinition) {
  EXPECT_EQ(code_of([] { parse_source(std::string(kHeader) + "def f(a):\n    c = torch.add(a, b)\n    return [c]\n"); }),
            ErrorCode::MalformedSource);
  EXPECT_EQ(code_of([] { parse_source(std::string(kHeader) + "def f(a):\n    return [c]\n"); }),
            ErrorCode::MalformedSource);
}

TEST(Source, RejectsOtherShapes) {
  EXPECT_EQ(code_of([] { parse_source("def f(a):\n    c = numpy.add(a, a)\n    return [c]\n"); }),
            ErrorCode::MalformedSource);
  EXPECT_EQ(code_of([] { parse_source(std::string(kHeader) + "def f(a):\n    c = torch.relu(a)\n"); }),
            ErrorCode::MalformedSource);
  EXPECT_EQ(code_of([] { parse_source(std::string(kHeader) + "x = 3\n"); }), ErrorCode::MalformedSource);
  EXPECT_EQ(code_of([] { parse_source(std::string(kHeader) + "def f(a):\n    c = torch.relu(a) + 1\n    return [c]\n"); }),
            ErrorCode::MalformedSource);
  EXPECT_EQ(code_of([] { parse_source(std::string(kHeader) + "def f(a):\n    if a:\n    return [a]\n"); }),
            ErrorCode::MalformedSource);
}

TEST(Source, DataflowSeesThroughInlinedCalls) {
  const std::string plain = std::string(kHeader) +
                            "def f(a, b):\n"
                            "    c = torch.add(a, b)\n"
                            "    d = torch.relu(c)\n"
                            "    e = torch.mul(d, a)\n"
                            "    return [e]\n";
  const std::string fused = std::string(kHeader) +
                            "def g(x, y):\n"
                            "    z = torch.add(x, y)\n"
                            "    w = torch.relu(z)\n"
                            "    return [w]\n"
                            "\n"
                            "def f(a, b):\n"
                            "    d, = g(a, b)\n"
                            "    e = torch.mul(d, a)\n"
                            "    return [e]\n";
  const std::string swapped = std::string(kHeader) +
                              "def f(a, b):\n"
                              "    c = torch.add(b, a)\n"
                              "    d = torch.relu(c)\n"
                              "    e = torch.mul(d, a)\n"
                              "    return [e]\n";
  const auto base = dataflow_digests(parse_source(plain), "f");
  EXPECT_EQ(base.size(), 1u);
  EXPECT_EQ(dataflow_digests(parse_source(fused), "f"), base);
  EXPECT_NE(dataflow_digests(parse_source(swapped), "f"), base);
}

TEST(Source, KeywordNamesAreNotReferences) {
  EXPECT_NO_THROW(parse_source(std::string(kHeader) +
                               "def f(a):\n    c = torch.clamp(a, min=float('-inf'), max=2.0)\n    return [c]\n"));
}

}  // namespace
}  // namespace forge
