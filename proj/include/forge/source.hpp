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

#include <string>
#include <vector>

namespace forge {

/// `a, b = callee(args)[0]`; `select_first` records the trailing `[0]`.
struct SourceStatement {
  std::vector<std::string> targets;
  std::string callee;
  std::string args;
  bool select_first = false;
  int line = 0;
};

struct SourceFunction {
  std::string name;
  std::vector<std::string> params;
  std::vector<SourceStatement> body;
  std::vector<std::string> returns;
};

struct ParsedSource {
  std::vector<SourceFunction> functions;

  const SourceFunction* find(const std::string& name) const;
};

/// Parses the restricted program grammar: imports, then functions whose
/// bodies are call assignments over already bound names, ending in
/// `return [names]`. Throws MalformedSource with the offending line.
ParsedSource parse_source(const std::string& text);

/// Canonical digest of each value returned by `entry`, obtained by symbolic
/// evaluation. Calls to functions defined in the same source are inlined, so
/// two sources computing the same dataflow give equal digests.
std::vector<std::string> dataflow_digests(const ParsedSource& src, const std::string& entry);

}  // namespace forge
