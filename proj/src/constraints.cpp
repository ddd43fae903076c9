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

// Constraint emission and the exact checker. The checker evaluates each rule
// family on concrete integers over right-aligned views; it shares no code
// with the search in solver.cpp.

#include <algorithm>
#include <numeric>

#include "forge/error.hpp"
#include "forge/solver.hpp"

namespace forge {

using nlohmann::json;

SolverConfig SolverConfig::permissive() {
  SolverConfig c;
  c.min_flops = 0;
  c.max_flops = kSaturated;
  c.max_size = kSaturated;
  c.min_size_tensor = 1;
  return c;
}

void SolverConfig::validate() const {
  if (min_flops < 0 || min_flops > max_flops)
    throw Error(ErrorCode::InvalidArgument, "need 0 <= min_flops <= max_flops");
  if (min_size_tensor < 1) throw Error(ErrorCode::InvalidArgument, "min_size_tensor must be >= 1");
  if (max_size < 1) throw Error(ErrorCode::InvalidArgument, "max_size must be >= 1");
  if (!(time_budget > 0)) throw Error(ErrorCode::InvalidArgument, "time_budget must be positive");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimedOut: return "timed_out";
  }
  return "?";
}

void ConstraintSet::pin_shape(EdgeId e, Shape shape) {
  if (e < 0 || static_cast<size_t>(e) >= graph.edges.size())
    throw Error(ErrorCode::InvalidArgument, "pin on unknown edge " + std::to_string(e));
  if (static_cast<int>(shape.size()) > kMaxOrder) throw Error(ErrorCode::InvalidArgument, "pinned order above 8");
  pins[e] = Pin{static_cast<int>(shape.size()), std::move(shape)};
}

void ConstraintSet::pin_order(EdgeId e, int order) {
  if (e < 0 || static_cast<size_t>(e) >= graph.edges.size())
    throw Error(ErrorCode::InvalidArgument, "pin on unknown edge " + std::to_string(e));
  if (order < 0 || order > kMaxOrder) throw Error(ErrorCode::InvalidArgument, "pinned order out of [0, 8]");
  pins[e] = Pin{order, std::nullopt};
}

namespace {

std::string edge_name(EdgeId e) { return "t" + std::to_string(e); }

std::vector<std::string> render_clauses(const OperatorSpec& spec, const Node& node) {
  std::vector<std::string> c;
  const std::string out = edge_name(node.output);
  std::vector<std::string> in;
  for (EdgeId e : node.inputs) in.push_back(edge_name(e));
  const std::string a = in.empty() ? "" : in[0];
  const std::string b = in.size() > 1 ? in[1] : "";
  const std::string m = std::to_string(spec.spatial_rank);
  switch (spec.constraint_kind) {
    case ConstraintKind::Broadcast: {
      std::string maxn = "max(";
      std::string maxs = "max(";
      for (size_t i = 0; i < in.size(); ++i) {
        maxn += (i ? ", " : "") + in[i] + ".n";
        maxs += (i ? ", " : "") + in[i] + "'.s_i";
      }
      c.push_back(out + ".n = " + maxn + ")");
      c.push_back(out + ".s_i = " + maxs + "), i in 1..N");
      c.push_back("(" + a + "'.s_i = " + b + "'.s_i) or (" + a + "'.s_i = 1) or (" + b + "'.s_i = 1), i in 1..N");
      if (in.size() == 3)
        c.push_back("(max(" + a + "'.s_i, " + b + "'.s_i) = " + in[2] + "'.s_i) or (max(...) = 1) or (" + in[2] +
                    "'.s_i = 1), i in 1..N");
      break;
    }
    case ConstraintKind::Reduce:
      c.push_back("dim < " + a + ".n; dim' = N - " + a + ".n + dim + 1");
      c.push_back("keepdim: " + out + ".n = " + a + ".n, " + out + ".s_dim' = 1, other dims copied");
      c.push_back("not keepdim: " + out + ".n = " + a + ".n - 1, dim' spliced out");
      break;
    case ConstraintKind::DimPreserving:
      c.push_back("dim < " + a + ".n");
      c.push_back(out + " = " + a);
      break;
    case ConstraintKind::Matmul:
      c.push_back(a + ".n >= 2, " + b + ".n >= 2");
      c.push_back(a + "'.s_N = " + b + "'.s_{N-1}");
      c.push_back(out + ".s_{N-1} = " + a + "'.s_{N-1}, " + out + ".s_N = " + b + "'.s_N, " + out +
                  ".n = max(" + a + ".n, " + b + ".n)");
      c.push_back("broadcast on positions 1..N-2");
      break;
    case ConstraintKind::Bmm:
      c.push_back(a + ".n = " + b + ".n = " + out + ".n = 3");
      c.push_back(a + ".s_1 = " + b + ".s_1, " + a + ".s_3 = " + b + ".s_2");
      c.push_back(out + " = (" + a + ".s_1, " + a + ".s_2, " + b + ".s_3)");
      break;
    case ConstraintKind::Transpose:
      c.push_back(a + ".n >= 2, " + out + ".n = " + a + ".n");
      c.push_back(out + ".s_{N-1} = " + a + ".s_N, " + out + ".s_N = " + a + ".s_{N-1}, others copied");
      break;
    case ConstraintKind::Triangular:
      c.push_back(a + ".n >= 2");
      c.push_back(out + " = " + a);
      break;
    case ConstraintKind::Conv:
      c.push_back(a + ".n = " + b + ".n = " + out + ".n = " + m + " + 2");
      c.push_back("2p <= max_j k_j, k_j = " + b + ".s_{2+j} in [1, 7]");
      c.push_back(out + ".s_1 = " + a + ".s_1");
      c.push_back(a + ".s_2 = " + b + ".s_2 * g = 0 (mod g)");
      c.push_back(out + ".s_2 = " + b + ".s_1 = 0 (mod g)");
      c.push_back("spatial: " + a + ".s_i >= k, " + out + ".s_i = floor((" + a +
                  ".s_i + 2p - d(k - 1) - 1) / s) + 1");
      break;
    case ConstraintKind::ConvTranspose:
      c.push_back(a + ".n = " + b + ".n = " + out + ".n = " + m + " + 2");
      c.push_back("2p <= max_j k_j, k_j = " + b + ".s_{2+j} in [1, 7]");
      c.push_back(out + ".s_1 = " + a + ".s_1");
      c.push_back(a + ".s_2 = " + b + ".s_1 = 0 (mod g)");
      c.push_back(out + ".s_2 = " + b + ".s_2 * g");
      c.push_back("spatial: " + out + ".s_i = (" + a + ".s_i - 1) s - 2p + d(k - 1) + 1 >= 1");
      break;
    case ConstraintKind::Pool:
      c.push_back(a + ".n = " + out + ".n = " + m + " + 2");
      c.push_back("2p <= k; batch and channel preserved");
      c.push_back("spatial: " + a + ".s_i >= k, " + out + ".s_i = floor((" + a + ".s_i + 2p - k) / s) + 1");
      break;
    case ConstraintKind::Normalization:
      c.push_back(out + " = " + a);
      if (spec.norm == NormKind::Batch) c.push_back(a + ".n >= 2, numel(" + a + ") / " + a + ".s_2 >= 2");
      if (spec.norm == NormKind::Instance) c.push_back(a + ".n >= 3, prod(" + a + ".s_3..) >= 2");
      if (spec.norm == NormKind::Group) c.push_back(a + ".n >= 2, " + a + ".s_2 = 0 (mod num_groups)");
      if (spec.norm == NormKind::Layer) c.push_back(a + ".n >= 1");
      break;
    case ConstraintKind::Unary:
      c.push_back(out + " = " + a);
      break;
    case ConstraintKind::Cat:
      c.push_back("equal orders n >= 1, dim < n");
      c.push_back("non-dim positions equal across inputs");
      c.push_back(out + ".s_dim = sum of input s_dim");
      break;
    case ConstraintKind::Stack:
      c.push_back("all input shapes equal");
      c.push_back(out + " = (" + std::to_string(in.size()) + ", " + a + ".s_1, ..., " + a + ".s_n)");
      break;
    case ConstraintKind::None:
      throw Error(ErrorCode::UnknownConstraintKind, spec.name + " has no constraint family");
  }
  return c;
}

}  // namespace

ConstraintSet emit_constraints(const ProgramGraph& graph, const Catalog& catalog, const SolverConfig& cfg) {
  cfg.validate();
  ConstraintSet cs;
  cs.graph = graph;
  cs.catalog = &catalog;
  cs.bounds = {cfg.min_flops, cfg.max_flops, cfg.max_size, cfg.min_size_tensor};
  for (const auto& node : graph.nodes) {
    const auto& spec = catalog.lookup(node.op);
    ConstraintBlock block;
    block.node = node.node_id;
    block.op = node.op;
    block.kind = spec.constraint_kind;
    block.inputs = node.inputs;
    block.output = node.output;
    block.clauses = render_clauses(spec, node);
    cs.blocks.push_back(std::move(block));
  }
  cs.global_clauses = {
      std::to_string(cfg.min_flops) + " <= sum flops(op) <= " + std::to_string(cfg.max_flops),
      "sum numel(e) <= " + std::to_string(cfg.max_size),
      std::to_string(cfg.min_size_tensor) + " <= numel(e) for every edge of order >= 1",
      "1 <= e.s_i <= 32768, 0 <= e.n <= 8",
  };
  return cs;
}

json ConstraintSet::to_json() const {
  json blocks_json = json::array();
  for (const auto& b : blocks)
    blocks_json.push_back({{"node", b.node},
                           {"op", b.op},
                           {"kind", to_string(b.kind)},
                           {"inputs", b.inputs},
                           {"output", b.output},
                           {"clauses", b.clauses}});
  json pins_json = json::object();
  for (const auto& [e, p] : pins) {
    json pj = {{"order", p.order}};
    if (p.dims) pj["dims"] = *p.dims;
    pins_json[std::to_string(e)] = pj;
  }
  return {{"blocks", blocks_json},
          {"global", global_clauses},
          {"bounds",
           {{"min_flops", bounds.min_flops},
            {"max_flops", bounds.max_flops},
            {"max_size", bounds.max_size},
            {"min_size_tensor", bounds.min_size_tensor}}},
          {"pins", pins_json}};
}

bool flop_floor_applies(const ProgramGraph& graph, const Catalog& catalog) {
  return std::any_of(graph.nodes.begin(), graph.nodes.end(),
                     [&](const Node& n) { return catalog.lookup(n.op).flop_model != FlopModel::Zero; });
}

void compute_totals(ShapeSolution& s, const ProgramGraph& graph, const Catalog& catalog) {
  s.total_numel = 0;
  for (const auto& shape : s.shapes) s.total_numel = sat_add(s.total_numel, numel(shape));
  s.total_flops = 0;
  for (const auto& node : graph.nodes) {
    std::vector<Shape> in;
    for (EdgeId e : node.inputs) in.push_back(s.shapes[e]);
    const auto& spec = catalog.lookup(node.op);
    s.total_flops = sat_add(s.total_flops, flop_count(spec.flop_model, in, s.shapes[node.output],
                                                      s.attrs[node.node_id]));
  }
}

namespace {

// Right-aligned view of order N; position i (1-indexed) is at index i - 1.
std::vector<int64_t> aligned(const Shape& s, size_t n) {
  std::vector<int64_t> v(n, 1);
  std::copy(s.begin(), s.end(), v.begin() + static_cast<std::ptrdiff_t>(n - s.size()));
  return v;
}

bool compatible(int64_t x, int64_t y) { return x == y || x == 1 || y == 1; }

class Checker {
 public:
  Checker(const ShapeSolution& sol, const ConstraintSet& cs) : sol_(sol), cs_(cs) {}

  std::vector<Violation> run() {
    const auto& g = cs_.graph;
    if (sol_.shapes.size() != g.edges.size())
      throw Error(ErrorCode::IncompleteSolution, "solution has " + std::to_string(sol_.shapes.size()) +
                                                     " shapes for " + std::to_string(g.edges.size()) + " edges");
    if (sol_.attrs.size() != g.nodes.size())
      throw Error(ErrorCode::IncompleteSolution, "solution has " + std::to_string(sol_.attrs.size()) +
                                                     " attribute sets for " + std::to_string(g.nodes.size()) +
                                                     " nodes");
    check_edges();
    for (const auto& node : g.nodes) check_node(node);
    check_globals();
    return std::move(out_);
  }

 private:
  void fail(int node, int edge, std::string constraint, std::string detail = {}) {
    out_.push_back({node, edge, std::move(constraint), std::move(detail)});
  }

  void check_edges() {
    const auto& b = cs_.bounds;
    for (size_t e = 0; e < sol_.shapes.size(); ++e) {
      const Shape& s = sol_.shapes[e];
      const int edge = static_cast<int>(e);
      if (static_cast<int>(s.size()) > kMaxOrder) fail(-1, edge, "order <= 8", to_string(s));
      for (int64_t d : s)
        if (d < kMinDim || d > kMaxDim) fail(-1, edge, "1 <= s_i <= 32768", to_string(s));
      if (!s.empty() && numel(s) < b.min_size_tensor)
        fail(-1, edge, "numel >= MIN_SIZE_TENSOR", std::to_string(numel(s)) + " < " + std::to_string(b.min_size_tensor));
      if (auto it = cs_.pins.find(edge); it != cs_.pins.end()) {
        if (static_cast<int>(s.size()) != it->second.order) fail(-1, edge, "pinned order");
        if (it->second.dims && *it->second.dims != s) fail(-1, edge, "pinned shape", to_string(*it->second.dims));
      }
    }
  }

  void check_globals() {
    const auto& b = cs_.bounds;
    int64_t total = 0;
    for (const auto& s : sol_.shapes) total = sat_add(total, numel(s));
    if (total > b.max_size) fail(-1, -1, "sum numel <= MAX_SIZE", std::to_string(total));
    int64_t flops = 0;
    for (const auto& node : cs_.graph.nodes) {
      const auto& spec = cs_.catalog->lookup(node.op);
      std::vector<Shape> in;
      for (EdgeId e : node.inputs) in.push_back(sol_.shapes[e]);
      flops = sat_add(flops, flop_count(spec.flop_model, in, sol_.shapes[node.output], sol_.attrs[node.node_id]));
    }
    if (flops > b.max_flops) fail(-1, -1, "sum flops <= MAX_FLOPS", std::to_string(flops));
    if (flop_floor_applies(cs_.graph, *cs_.catalog) && flops < b.min_flops)
      fail(-1, -1, "MIN_FLOPS <= sum flops", std::to_string(flops));
    if (sol_.total_flops != flops) fail(-1, -1, "total_flops matches", std::to_string(sol_.total_flops));
    if (sol_.total_numel != total) fail(-1, -1, "total_numel matches", std::to_string(sol_.total_numel));
  }

  void check_node(const Node& node) {
    const auto& spec = cs_.catalog->lookup(node.op);
    const Attrs& at = sol_.attrs[node.node_id];
    const int id = node.node_id;
    std::vector<const Shape*> in;
    for (EdgeId e : node.inputs) in.push_back(&sol_.shapes[e]);
    const Shape& c = sol_.shapes[node.output];
    const Shape& a = *in[0];
    auto need = [&](bool cond, const std::string& what, const std::string& detail = {}) {
      if (!cond) fail(id, node.output, what, detail.empty() ? spec.name : detail);
      return cond;
    };
    auto missing = [&](const char* attr) { fail(id, -1, std::string("attribute ") + attr + " present"); };

    switch (spec.constraint_kind) {
      case ConstraintKind::Broadcast: {
        size_t n = 0;
        for (auto* s : in) n = std::max(n, s->size());
        if (!need(c.size() == n, "c.n = max(in.n)")) return;
        std::vector<std::vector<int64_t>> al;
        for (auto* s : in) al.push_back(aligned(*s, n));
        for (size_t i = 0; i < n; ++i) {
          int64_t acc = al[0][i];
          for (size_t k = 1; k < al.size(); ++k) {
            need(compatible(acc, al[k][i]), "(a.s_i = b.s_i) or (a.s_i = 1) or (b.s_i = 1)",
                 "position " + std::to_string(i + 1));
            acc = std::max(acc, al[k][i]);
          }
          need(c[i] == acc, "c.s_i = max(a.s_i, b.s_i)", "position " + std::to_string(i + 1));
        }
        break;
      }
      case ConstraintKind::Reduce: {
        if (!at.dim) return missing("dim");
        if (!at.keepdim) return missing("keepdim");
        const int64_t n = static_cast<int64_t>(a.size());
        if (!need(*at.dim >= 0 && *at.dim < n, "dim < a.n")) return;
        const int64_t dimp = n - n + *at.dim + 1;  // N = a.n for a single input
        if (*at.keepdim) {
          if (!need(static_cast<int64_t>(c.size()) == n, "keepdim: c.n = a.n")) return;
          for (int64_t i = 1; i <= n; ++i)
            need(c[i - 1] == (i == dimp ? 1 : a[i - 1]), "keepdim: c.s_i", "position " + std::to_string(i));
        } else {
          if (!need(static_cast<int64_t>(c.size()) == n - 1, "c.n = a.n - 1")) return;
          for (int64_t i = 1; i <= n - 1; ++i)
            need(c[i - 1] == (i < dimp ? a[i - 1] : a[i]), "c.s_i spliced", "position " + std::to_string(i));
        }
        break;
      }
      case ConstraintKind::DimPreserving:
        if (!at.dim) return missing("dim");
        need(*at.dim >= 0 && *at.dim < static_cast<int64_t>(a.size()), "dim < a.n");
        need(c == a, "c = a");
        break;
      case ConstraintKind::Matmul: {
        const Shape& b = *in[1];
        if (!need(a.size() >= 2 && b.size() >= 2, "a.n >= 2, b.n >= 2")) return;
        const size_t n = std::max(a.size(), b.size());
        const auto aa = aligned(a, n), bb = aligned(b, n);
        need(aa[n - 1] == bb[n - 2], "a.s_N = b.s_{N-1}");
        if (!need(c.size() == n, "c.n = max(a.n, b.n)")) return;
        need(c[n - 2] == aa[n - 2], "c.s_{N-1} = a.s_{N-1}");
        need(c[n - 1] == bb[n - 1], "c.s_N = b.s_N");
        for (size_t i = 0; i + 2 < n; ++i) {
          need(compatible(aa[i], bb[i]), "batch broadcast", "position " + std::to_string(i + 1));
          need(c[i] == std::max(aa[i], bb[i]), "c.s_i = max(a.s_i, b.s_i)", "position " + std::to_string(i + 1));
        }
        break;
      }
      case ConstraintKind::Bmm: {
        const Shape& b = *in[1];
        if (!need(a.size() == 3 && b.size() == 3 && c.size() == 3, "bmm operands of order 3")) return;
        need(a[0] == b[0], "equal batch");
        need(a[2] == b[1], "a.s_3 = b.s_2");
        need(c == Shape{a[0], a[1], b[2]}, "c = (a.s_1, a.s_2, b.s_3)");
        break;
      }
      case ConstraintKind::Transpose: {
        if (!need(a.size() >= 2, "a.n >= 2")) return;
        Shape t = a;
        std::swap(t[t.size() - 1], t[t.size() - 2]);
        need(c == t, "last two dims swapped");
        break;
      }
      case ConstraintKind::Triangular:
        need(a.size() >= 2, "a.n >= 2");
        need(c == a, "c = a");
        break;
      case ConstraintKind::Conv:
      case ConstraintKind::ConvTranspose: {
        if (!at.stride) return missing("stride");
        if (!at.padding) return missing("padding");
        if (!at.dilation) return missing("dilation");
        if (!at.groups) return missing("groups");
        const int64_t s = *at.stride, p = *at.padding, d = *at.dilation, g = *at.groups;
        need(s >= 1 && s <= kMaxStride, "stride in [1, 4]");
        need(p >= 0 && p <= kMaxPadding, "padding in [0, 3]");
        need(d >= 1 && d <= kMaxDilation, "dilation in [1, 4]");
        need(g == 1 || g == 2 || g == 4, "groups in {1, 2, 4}");
        const Shape& w = *in[1];
        const size_t m = static_cast<size_t>(spec.spatial_rank);
        if (!need(a.size() == m + 2 && c.size() == m + 2 && w.size() == m + 2, "a.n = c.n = w.n = m + 2")) return;
        if (g < 1 || s < 1) return;
        int64_t kmax = 0;
        for (size_t j = 0; j < m; ++j) {
          need(w[2 + j] >= kMinKernel && w[2 + j] <= kMaxKernel, "kernel in [1, 7]");
          kmax = std::max(kmax, w[2 + j]);
        }
        need(2 * p <= kmax, "2p <= max k");
        need(c[0] == a[0], "batch preserved");
        if (spec.constraint_kind == ConstraintKind::Conv) {
          need(a[1] % g == 0, "a.s_C = 0 (mod g)");
          need(a[1] == w[1] * g, "a.s_C = w.s_2 * g");
          need(c[1] == w[0], "c.s_C = C_out");
          need(w[0] % g == 0, "C_out = 0 (mod g)");
          for (size_t j = 0; j < m; ++j) {
            const int64_t x = a[2 + j], k = w[2 + j];
            need(x >= k, "a.s_i >= k", "spatial " + std::to_string(j));
            const int64_t num = x + 2 * p - d * (k - 1) - 1;
            const int64_t want = (num >= 0 ? num / s : -((-num + s - 1) / s)) + 1;
            need(c[2 + j] == want, "c.s_i = floor((a.s_i + 2p - d(k-1) - 1)/s) + 1",
                 "spatial " + std::to_string(j) + ": expected " + std::to_string(want) + ", got " +
                     std::to_string(c[2 + j]));
          }
        } else {
          need(a[1] == w[0], "a.s_C = w.s_1");
          need(a[1] % g == 0, "a.s_C = 0 (mod g)");
          need(c[1] == w[1] * g, "c.s_C = w.s_2 * g");
          for (size_t j = 0; j < m; ++j) {
            const int64_t want = (a[2 + j] - 1) * s - 2 * p + d * (w[2 + j] - 1) + 1;
            need(want >= 1, "transposed output >= 1", "spatial " + std::to_string(j));
            need(c[2 + j] == want, "c.s_i = (a.s_i - 1)s - 2p + d(k-1) + 1", "spatial " + std::to_string(j));
          }
        }
        break;
      }
      case ConstraintKind::Pool: {
        if (!at.kernel) return missing("kernel");
        if (!at.stride) return missing("stride");
        if (!at.padding) return missing("padding");
        const int64_t k = *at.kernel, s = *at.stride, p = *at.padding;
        need(k >= kMinKernel && k <= kMaxKernel, "kernel in [1, 7]");
        need(s >= 1 && s <= kMaxStride, "stride in [1, 4]");
        need(p >= 0 && p <= kMaxPadding, "padding in [0, 3]");
        need(2 * p <= k, "2p <= k");
        const size_t m = static_cast<size_t>(spec.spatial_rank);
        if (!need(a.size() == m + 2 && c.size() == m + 2, "a.n = c.n = m + 2")) return;
        if (s < 1) return;
        need(c[0] == a[0] && c[1] == a[1], "batch and channel preserved");
        for (size_t j = 0; j < m; ++j) {
          const int64_t x = a[2 + j];
          need(x >= k, "a.s_i >= k", "spatial " + std::to_string(j));
          const int64_t num = x + 2 * p - (k - 1) - 1;
          const int64_t want = (num >= 0 ? num / s : -((-num + s - 1) / s)) + 1;
          need(c[2 + j] == want, "c.s_i = floor((a.s_i + 2p - k)/s) + 1", "spatial " + std::to_string(j));
        }
        break;
      }
      case ConstraintKind::Normalization:
        need(c == a, "c = a");
        switch (spec.norm) {
          case NormKind::Batch:
            if (need(a.size() >= 2, "a.n >= 2")) need(numel(a) / a[1] >= 2, "numel / channels >= 2");
            break;
          case NormKind::Instance:
            if (need(a.size() >= 3, "a.n >= 3")) {
              int64_t sp = 1;
              for (size_t i = 2; i < a.size(); ++i) sp = sat_mul(sp, a[i]);
              need(sp >= 2, "spatial numel >= 2");
            }
            break;
          case NormKind::Group:
            if (!at.num_groups) return missing("num_groups");
            if (need(a.size() >= 2, "a.n >= 2"))
              need(*at.num_groups >= 1 && a[1] % *at.num_groups == 0, "channels = 0 (mod num_groups)");
            break;
          case NormKind::Layer:
            need(!a.empty(), "a.n >= 1");
            break;
          case NormKind::None:
            break;
        }
        break;
      case ConstraintKind::Unary:
        need(c == a, "c = a");
        if (spec.name == "Clamp") {
          if (!at.min_value) return missing("min");
          if (!at.max_value) return missing("max");
          need(*at.min_value <= *at.max_value, "min <= max");
        }
        break;
      case ConstraintKind::Cat: {
        if (!at.dim) return missing("dim");
        const size_t n = a.size();
        for (auto* s : in) need(s->size() == n, "equal input orders");
        if (!need(n >= 1 && *at.dim >= 0 && static_cast<size_t>(*at.dim) < n, "0 <= dim < n")) return;
        if (!need(c.size() == n, "c.n = n")) return;
        const size_t dim = static_cast<size_t>(*at.dim);
        int64_t sum = 0;
        for (auto* s : in) {
          if (s->size() != n) return;
          sum += (*s)[dim];
          for (size_t i = 0; i < n; ++i)
            if (i != dim) need((*s)[i] == a[i], "non-dim positions equal", "position " + std::to_string(i + 1));
        }
        for (size_t i = 0; i < n; ++i) need(c[i] == (i == dim ? sum : a[i]), "cat output", "position " + std::to_string(i + 1));
        break;
      }
      case ConstraintKind::Stack: {
        for (auto* s : in) need(*s == a, "all input shapes equal");
        if (at.dim) need(*at.dim == 0, "stack dim = 0");
        Shape want{static_cast<int64_t>(in.size())};
        want.insert(want.end(), a.begin(), a.end());
        need(c == want, "c = (count, a...)");
        break;
      }
      case ConstraintKind::None:
        throw Error(ErrorCode::UnknownConstraintKind, spec.name);
    }
  }

  const ShapeSolution& sol_;
  const ConstraintSet& cs_;
  std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> check(const ShapeSolution& solution, const ConstraintSet& cs) {
  return Checker(solution, cs).run();
}

json to_json(const ShapeSolution& s) {
  json attrs = json::array();
  for (const auto& a : s.attrs) attrs.push_back(a);
  return {{"shapes", s.shapes}, {"attrs", attrs}, {"total_flops", s.total_flops}, {"total_numel", s.total_numel}};
}

ShapeSolution solution_from_json(const json& j) {
  ShapeSolution s;
  s.shapes = j.at("shapes").get<std::vector<Shape>>();
  for (const auto& a : j.at("attrs")) s.attrs.push_back(a.get<Attrs>());
  s.total_flops = j.at("total_flops").get<int64_t>();
  s.total_numel = j.at("total_numel").get<int64_t>();
  return s;
}

json to_json(const std::vector<Violation>& v) {
  json out = json::array();
  for (const auto& x : v)
    out.push_back({{"node", x.node}, {"edge", x.edge}, {"constraint", x.constraint}, {"detail", x.detail}});
  return out;
}

}  // namespace forge
