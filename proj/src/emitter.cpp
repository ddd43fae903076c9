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

#include "forge/emitter.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "forge/error.hpp"
#include "forge/oracle.hpp"

namespace forge {

namespace {

using nlohmann::json;

constexpr std::string_view kFunctionalPrefix = "torch.nn.functional.";

std::string callee(const OperatorSpec& spec) {
  const std::string& q = spec.qualified_name;
  if (q.rfind(kFunctionalPrefix, 0) == 0) return "F." + q.substr(kFunctionalPrefix.size());
  return q;
}

// Shortest text that reads back as the same double, always with a decimal point.
std::string py_float(double v) {
  if (std::isnan(v)) return "float('nan')";
  if (std::isinf(v)) return v > 0 ? "float('inf')" : "float('-inf')";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string py_bool(bool b) { return b ? "True" : "False"; }

std::string repeat_tuple(int value, int m) {
  std::string s = "(";
  for (int i = 0; i < m; ++i) s += (i ? ", " : "") + std::to_string(value);
  return s + (m == 1 ? ",)" : ")");
}

std::string join_names(const std::vector<EdgeId>& edges) {
  std::string s;
  for (size_t i = 0; i < edges.size(); ++i) s += (i ? ", " : "") + tensor_name(edges[i]);
  return s;
}

int need(const std::optional<int>& v, const Node& n, const char* what) {
  if (!v) throw Error(ErrorCode::IncompleteSolution, "node " + std::to_string(n.node_id) + " lacks " + what);
  return *v;
}

}  // namespace

std::string tensor_name(EdgeId e) { return "tensor_" + std::to_string(e); }

std::string render_call(const ProgramGraph& graph, const ShapeSolution& solution, size_t i, const Catalog& catalog) {
  const Node& node = graph.nodes.at(i);
  const OperatorSpec& spec = catalog.lookup(node.op);
  const Attrs& at = solution.attrs.at(i);
  const std::string f = callee(spec);
  const std::string args = join_names(node.inputs);
  const std::string x = node.inputs.empty() ? "" : tensor_name(node.inputs[0]);
  const std::string pick = spec.selects_values ? "[0]" : "";

  switch (spec.constraint_kind) {
    case ConstraintKind::Reduce:
      return f + "(" + x + ", dim=" + std::to_string(need(at.dim, node, "dim")) +
             ", keepdim=" + py_bool(at.keepdim.value_or(false)) + ")" + pick;
    case ConstraintKind::DimPreserving:
      return f + "(" + x + ", dim=" + std::to_string(need(at.dim, node, "dim")) + ")" + pick;
    case ConstraintKind::Transpose:
      return f + "(" + x + ", -2, -1)";
    case ConstraintKind::Unary:
      if (spec.name == "Clamp") {
        std::string s = f + "(" + x;
        if (at.min_value) s += ", min=" + py_float(*at.min_value);
        if (at.max_value) s += ", max=" + py_float(*at.max_value);
        return s + ")";
      }
      return f + "(" + x + ")";
    case ConstraintKind::Normalization:
      switch (spec.norm) {
        case NormKind::Batch: return f + "(" + x + ", None, None, training=True)";
        case NormKind::Layer: {
          const Shape& s = solution.shapes.at(node.inputs[0]);
          if (s.empty()) throw Error(ErrorCode::IncompleteSolution, "layer_norm input has no trailing dim");
          return f + "(" + x + ", (" + std::to_string(s.back()) + ",))";
        }
        case NormKind::Group: return f + "(" + x + ", " + std::to_string(need(at.num_groups, node, "num_groups")) + ")";
        default: return f + "(" + x + ")";
      }
    case ConstraintKind::Pool:
      return f + "(" + x + ", kernel_size=" + std::to_string(need(at.kernel, node, "kernel")) +
             ", stride=" + std::to_string(need(at.stride, node, "stride")) +
             ", padding=" + std::to_string(need(at.padding, node, "padding")) + ")";
    case ConstraintKind::Conv:
    case ConstraintKind::ConvTranspose: {
      const int m = spec.spatial_rank;
      const std::string s = repeat_tuple(need(at.stride, node, "stride"), m);
      const std::string p = repeat_tuple(need(at.padding, node, "padding"), m);
      const std::string d = repeat_tuple(need(at.dilation, node, "dilation"), m);
      const std::string g = std::to_string(need(at.groups, node, "groups"));
      if (spec.constraint_kind == ConstraintKind::Conv)
        return f + "(" + args + ", None, " + s + ", " + p + ", " + d + ", " + g + ")";
      return f + "(" + args + ", None, " + s + ", " + p + ", " + repeat_tuple(0, m) + ", " + g + ", " + d + ")";
    }
    case ConstraintKind::Cat:
      return f + "([" + args + "], dim=" + std::to_string(need(at.dim, node, "dim")) + ")";
    case ConstraintKind::Stack:
      return f + "([" + args + "], dim=" + std::to_string(at.dim.value_or(0)) + ")";
    default:
      return f + "(" + args + ")";
  }
}

std::string assemble_source(const std::vector<std::string>& input_lines, const std::vector<EdgeId>& inputs,
                            const std::vector<std::string>& body, const std::vector<EdgeId>& outputs,
                            const std::string& prelude) {
  std::ostringstream os;
  os << "import torch\nimport torch.nn.functional as F\n\n\n";
  if (!prelude.empty()) {
    os << prelude;
    if (prelude.back() != '\n') os << '\n';
    os << "\n\n";
  }
  os << "def " << kInputFunction << "():\n";
  for (const auto& l : input_lines) os << "    " << l << '\n';
  os << "    return [" << join_names(inputs) << "]\n\n\n";
  os << "def " << kOperatorFunction << "(" << join_names(inputs) << "):\n";
  for (const auto& l : body) os << "    " << l << '\n';
  os << "    return [" << join_names(outputs) << "]\n";
  return os.str();
}

EmittedProgram emit(const ProgramGraph& graph, const ShapeSolution& solution, const Catalog& catalog,
                    const ProgramInfo& info) {
  const MatchReport verdict = verify_program(graph, solution, catalog);
  if (!verdict.ok) throw Error(ErrorCode::UnverifiedSolution, verdict.reason);

  EmittedProgram p;
  std::vector<EdgeId> inputs;
  for (const auto& c : graph.create_statements) {
    std::string dims;
    for (int64_t d : solution.shapes.at(c.edge)) dims += (dims.empty() ? "" : ", ") + std::to_string(d);
    p.input_lines.push_back(tensor_name(c.edge) + " = " + catalog.lookup(c.op).qualified_name + "(" + dims + ")");
    inputs.push_back(c.edge);
  }
  for (size_t i = 0; i < graph.nodes.size(); ++i)
    p.statements.push_back(tensor_name(graph.nodes[i].output) + " = " + render_call(graph, solution, i, catalog));
  p.source = assemble_source(p.input_lines, inputs, p.statements, graph.outputs);

  Manifest& m = p.manifest;
  m.program_id = info.program_id;
  m.level = level_of(graph);
  m.seed = info.seed;
  for (const auto& n : graph.nodes) m.ops.push_back(n.op);
  m.graph = graph;
  m.solution = solution;
  m.outputs = graph.outputs;
  return p;
}

json to_json(const Manifest& m) {
  json output_shapes = json::array();
  for (EdgeId e : m.outputs) output_shapes.push_back(m.solution.shapes.at(e));
  std::vector<EdgeId> integer_edges;
  for (const auto& t : m.graph.edges)
    if (t.integer_typed) integer_edges.push_back(t.edge_id);
  return {{"program_id", m.program_id},
          {"level", m.level},
          {"seed", m.seed},
          {"ops", m.ops},
          {"graph", to_json(m.graph)},
          {"shapes", m.solution.shapes},
          {"attrs", m.solution.attrs},
          {"total_flops", m.solution.total_flops},
          {"total_numel", m.solution.total_numel},
          {"outputs", m.outputs},
          {"integer_edges", integer_edges},
          {"output_shapes", output_shapes}};
}

std::string serialize_manifest(const Manifest& m) { return to_json(m).dump(2) + "\n"; }

Manifest parse_manifest(const std::string& text, const Catalog& catalog) {
  auto bad = [](const std::string& why) { return Error(ErrorCode::MalformedManifest, why); };
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw bad(std::string("invalid JSON: ") + ex.what());
  }
  Manifest m;
  try {
    m.program_id = j.at("program_id").get<std::string>();
    m.level = j.at("level").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.ops = j.at("ops").get<std::vector<std::string>>();
    m.graph = graph_from_json(j.at("graph"), catalog);
    m.solution.shapes = j.at("shapes").get<std::vector<Shape>>();
    m.solution.attrs = j.at("attrs").get<std::vector<Attrs>>();
    m.solution.total_flops = j.at("total_flops").get<int64_t>();
    m.solution.total_numel = j.at("total_numel").get<int64_t>();
    m.outputs = j.at("outputs").get<std::vector<EdgeId>>();
  } catch (const json::exception& ex) {
    throw bad(ex.what());
  } catch (const Error& ex) {
    throw bad(ex.what());
  }
  if (m.level != level_of(m.graph)) throw bad("level disagrees with node count");
  if (m.ops.size() != m.graph.nodes.size()) throw bad("op list length disagrees with node count");
  for (size_t i = 0; i < m.ops.size(); ++i)
    if (m.ops[i] != m.graph.nodes[i].op) throw bad("op list disagrees with node " + std::to_string(i));
  if (m.outputs != m.graph.outputs) throw bad("outputs disagree with the graph");
  if (m.solution.shapes.size() != m.graph.edge_count()) throw bad("shape count disagrees with edge count");
  if (m.solution.attrs.size() != m.graph.nodes.size()) throw bad("attribute count disagrees with node count");
  return m;
}

}  // namespace forge
