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

#include <algorithm>
#include <set>

#include "forge/error.hpp"
#include "forge/source.hpp"

namespace forge {

using nlohmann::json;

FragmentPlan extract(int n, int max_len, size_t cap) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "operator count must be >= 1");
  if (max_len < 1) throw Error(ErrorCode::InvalidArgument, "max fragment length must be >= 1");
  FragmentPlan plan;
  for (int len = 1; len <= std::min(max_len, n); ++len)
    for (int start = 0; start + len <= n; ++start) {
      if (plan.size() == cap) return plan;
      plan.push_back({start, len});
    }
  return plan;
}

size_t plan_size(int n, int max_len, size_t cap) {
  if (n < 1 || max_len < 1) return 0;
  const size_t L = static_cast<size_t>(std::min(max_len, n));
  const size_t total = L * static_cast<size_t>(n + 1) - L * (L + 1) / 2;
  return std::min(total, cap);
}

namespace {

void check_range(const Manifest& m, const Fragment& f) {
  const int n = level_of(m.graph);
  if (f.len < 1 || f.start < 0 || f.start + f.len > n)
    throw Error(ErrorCode::FragmentOutOfRange, "fragment (" + std::to_string(f.start) + ", " + std::to_string(f.len) +
                                                   ") outside a program of " + std::to_string(n) + " statements");
}

std::string names(const std::vector<EdgeId>& edges, const char* sep = ", ") {
  std::string s;
  for (size_t i = 0; i < edges.size(); ++i) s += (i ? sep : "") + tensor_name(edges[i]);
  return s;
}

// Parameters of `def entry(...)` in the replacement, or nullopt.
std::optional<std::vector<std::string>> entry_params(const std::string& replacement, const std::string& entry) {
  try {
    const ParsedSource src = parse_source("import torch\nimport torch.nn.functional as F\n" + replacement);
    if (const SourceFunction* f = src.find(entry)) return f->params;
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

Boundary boundary(const Manifest& m, const Fragment& f) {
  check_range(m, f);
  const auto& nodes = m.graph.nodes;
  std::set<EdgeId> produced, inputs, outputs;
  for (int i = f.start; i < f.start + f.len; ++i) produced.insert(nodes[i].output);
  for (int i = f.start; i < f.start + f.len; ++i)
    for (EdgeId e : nodes[i].inputs)
      if (!produced.count(e)) inputs.insert(e);
  for (size_t i = static_cast<size_t>(f.start + f.len); i < nodes.size(); ++i)
    for (EdgeId e : nodes[i].inputs)
      if (produced.count(e)) outputs.insert(e);
  for (EdgeId e : m.graph.outputs)
    if (produced.count(e)) outputs.insert(e);
  return {{inputs.begin(), inputs.end()}, {outputs.begin(), outputs.end()}};
}

std::string entry_name(const Fragment& f) {
  return "_fused_fragment_" + std::to_string(f.start) + "_" + std::to_string(f.len);
}

std::string identity_replacement(const EmittedProgram& p, const Fragment& f, const std::string& entry) {
  const Boundary b = boundary(p.manifest, f);
  std::string s = "def " + entry + "(" + names(b.inputs) + "):\n";
  for (int i = f.start; i < f.start + f.len; ++i) s += "    " + p.statements.at(i) + "\n";
  return s + "    return [" + names(b.outputs) + "]\n";
}

std::string reconstruct(const EmittedProgram& p, const Fragment& f, const std::string& replacement,
                        const std::string& entry) {
  const Boundary b = boundary(p.manifest, f);
  const auto params = entry_params(replacement, entry);
  if (!params) throw Error(ErrorCode::BindingMismatch, "replacement does not define " + entry);
  if (params->size() != b.inputs.size())
    throw Error(ErrorCode::BindingMismatch, entry + " takes " + std::to_string(params->size()) +
                                                " parameters but the fragment has " + std::to_string(b.inputs.size()) +
                                                " free inputs");
  std::vector<std::string> body(p.statements.begin(), p.statements.begin() + f.start);
  body.push_back(names(b.outputs) + ", = " + entry + "(" + names(b.inputs) + ")");
  body.insert(body.end(), p.statements.begin() + f.start + f.len, p.statements.end());
  std::vector<EdgeId> inputs;
  for (const auto& c : p.manifest.graph.create_statements) inputs.push_back(c.edge);
  return assemble_source(p.input_lines, inputs, body, p.manifest.outputs, replacement);
}

const Candidate& select_best(const std::vector<Candidate>& candidates) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!c.verified || !c.measured_time) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const auto key = [](const Candidate& x) { return std::tuple(*x.measured_time, x.fragment.start, x.fragment.len); };
    if (key(c) < key(*best)) best = &c;
  }
  if (!best) throw Error(ErrorCode::NoneVerified, "no candidate passed verification");
  return *best;
}

Generator passthrough_generator() {
  return [](const EmittedProgram& p, const Fragment& f, const std::string& entry) -> std::optional<std::string> {
    return identity_replacement(p, f, entry);
  };
}

Verifier always_verifier() {
  return [](const EmittedProgram&, const Fragment&, const std::string&) { return true; };
}

double statement_count_cost(const std::string& source) {
  const ParsedSource src = parse_source(source);
  const SourceFunction* f = src.find(kOperatorFunction);
  if (!f) throw Error(ErrorCode::MalformedSource, std::string("no ") + kOperatorFunction + " function");
  return static_cast<double>(f->body.size());
}

Bench cost_model(const std::string& name) {
  if (name == "statements") return statement_count_cost;
  if (name == "unit") return [](const std::string&) { return 1.0; };
  throw Error(ErrorCode::InvalidArgument, "unknown cost model '" + name + "' (expected statements or unit)");
}

SearchResult run_search(const EmittedProgram& p, const Generator& gen, const Verifier& verify, const Bench& bench) {
  SearchResult r;
  std::vector<std::string> hybrids;
  for (const Fragment& f : extract(level_of(p.manifest.graph))) {
    Candidate c;
    c.fragment = f;
    const std::string entry = entry_name(f);
    std::string hybrid;
    if (auto text = gen(p, f, entry)) {
      c.replacement_source = *text;
      c.verified = verify(p, f, *text);
      if (c.verified) {
        try {
          hybrid = reconstruct(p, f, *text, entry);
          c.measured_time = bench(hybrid);
        } catch (const Error&) {
          c.verified = false;
        }
      }
    }
    hybrids.push_back(c.verified ? hybrid : std::string());
    r.log.push_back(std::move(c));
  }
  try {
    const Candidate& best = select_best(r.log);
    r.best = best;
    r.hybrid = hybrids[static_cast<size_t>(&best - r.log.data())];
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoneVerified) throw;
    r.none_verified = true;
  }
  return r;
}

json to_json(const FragmentPlan& plan) {
  json a = json::array();
  for (const auto& f : plan) a.push_back({{"start", f.start}, {"len", f.len}});
  return {{"count", plan.size()}, {"fragments", a}};
}

json to_json(const SearchResult& r) {
  json log = json::array();
  for (const auto& c : r.log) {
    json e = {{"start", c.fragment.start}, {"len", c.fragment.len}, {"verified", c.verified}};
    e["time"] = c.measured_time ? json(*c.measured_time) : json(nullptr);
    log.push_back(e);
  }
  json j = {{"status", r.none_verified ? "none_verified" : "ok"}, {"candidates", log}};
  if (r.best) {
    j["best"] = {{"start", r.best->fragment.start}, {"len", r.best->fragment.len}, {"time", *r.best->measured_time}};
    j["hybrid"] = r.hybrid;
  }
  return j;
}

}  // namespace forge
