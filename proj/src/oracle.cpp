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

// Framework shape semantics, written operator by operator. Nothing here is
// shared with the constraint encoding.

#include "forge/oracle.hpp"

#include <stdexcept>

namespace forge {

namespace {

using nlohmann::json;

// Thrown internally and converted into a ShapeError; never escapes infer().
struct Reject {
  std::string reason;
};

[[noreturn]] void reject(std::string reason) { throw Reject{std::move(reason)}; }

void expect(bool cond, const std::string& reason) {
  if (!cond) reject(reason);
}

int64_t need(const std::optional<int>& v, const char* name) {
  if (!v) reject(std::string("missing attribute ") + name);
  return *v;
}

// Dimension index validation accepting the scalar case like the framework.
void check_dim(int64_t dim, size_t rank) {
  const int64_t n = static_cast<int64_t>(rank);
  if (n == 0) {
    expect(dim == 0 || dim == -1, "dim out of range for a scalar");
    return;
  }
  expect(dim >= -n && dim < n, "dim " + std::to_string(dim) + " out of range for rank " + std::to_string(n));
}

int64_t wrap_dim(int64_t dim, size_t rank) { return dim < 0 ? dim + static_cast<int64_t>(rank) : dim; }

Shape broadcast_or_reject(const Shape& a, const Shape& b) {
  auto r = broadcast_shapes(a, b);
  if (!r) reject("shapes " + to_string(a) + " and " + to_string(b) + " do not broadcast");
  return *r;
}

Shape reduce(const Shape& a, const Attrs& at) {
  const int64_t dim = need(at.dim, "dim");
  check_dim(dim, a.size());
  if (!at.keepdim) reject("missing attribute keepdim");
  if (a.empty()) return a;
  const size_t d = static_cast<size_t>(wrap_dim(dim, a.size()));
  Shape out = a;
  if (*at.keepdim) out[d] = 1;
  else out.erase(out.begin() + static_cast<std::ptrdiff_t>(d));
  return out;
}

Shape matmul(Shape a, Shape b) {
  expect(!a.empty() && !b.empty(), "matmul needs at least one dimension per operand");
  const bool a_vec = a.size() == 1, b_vec = b.size() == 1;
  if (a_vec) a.insert(a.begin(), 1);
  if (b_vec) b.push_back(1);
  const int64_t k1 = a.back(), k2 = b[b.size() - 2];
  expect(k1 == k2, "contraction mismatch " + std::to_string(k1) + " vs " + std::to_string(k2));
  Shape batch_a(a.begin(), a.end() - 2), batch_b(b.begin(), b.end() - 2);
  Shape out = broadcast_or_reject(batch_a, batch_b);
  if (!a_vec) out.push_back(a[a.size() - 2]);
  if (!b_vec) out.push_back(b.back());
  return out;
}

// Spatial output of a sliding window.
int64_t window(int64_t in, int64_t k, int64_t s, int64_t p, int64_t d) {
  const int64_t span = d * (k - 1) + 1;
  expect(in + 2 * p >= span, "window larger than padded input");
  return (in + 2 * p - span) / s + 1;
}

Shape pool(const Shape& x, int m, const Attrs& at) {
  const int64_t k = need(at.kernel, "kernel"), s = need(at.stride, "stride"), p = need(at.padding, "padding");
  expect(x.size() == static_cast<size_t>(m + 1) || x.size() == static_cast<size_t>(m + 2),
         "pool" + std::to_string(m) + "d expects rank " + std::to_string(m + 1) + " or " + std::to_string(m + 2));
  expect(k >= 1 && s >= 1 && p >= 0, "pool attributes out of range");
  expect(2 * p <= k, "pad should be at most half of kernel size");
  Shape out = x;
  const size_t first = x.size() - static_cast<size_t>(m);
  for (size_t i = first; i < x.size(); ++i) {
    out[i] = window(x[i], k, s, p, 1);
    expect(out[i] >= 1, "pool output size is too small");
  }
  return out;
}

Shape conv(const Shape& x, const Shape& w, int m, bool transposed, const Attrs& at) {
  const int64_t s = need(at.stride, "stride"), p = need(at.padding, "padding"), d = need(at.dilation, "dilation"),
                g = need(at.groups, "groups");
  expect(s >= 1 && p >= 0 && d >= 1 && g >= 1, "conv attributes out of range");
  expect(w.size() == static_cast<size_t>(m + 2), "weight must have rank " + std::to_string(m + 2));
  const bool batched = x.size() == static_cast<size_t>(m + 2);
  expect(batched || x.size() == static_cast<size_t>(m + 1),
         "conv" + std::to_string(m) + "d expects rank " + std::to_string(m + 1) + " or " + std::to_string(m + 2));
  const size_t c = batched ? 1 : 0;
  Shape out;
  if (batched) out.push_back(x[0]);
  if (!transposed) {
    expect(x[c] == w[1] * g, "input channels " + std::to_string(x[c]) + " != weight channels x groups");
    expect(w[0] % g == 0, "output channels not divisible by groups");
    out.push_back(w[0]);
    for (int j = 0; j < m; ++j) {
      const int64_t o = window(x[c + 1 + j], w[2 + j], s, p, d);
      expect(o >= 1, "conv output size is too small");
      out.push_back(o);
    }
  } else {
    expect(x[c] == w[0], "input channels " + std::to_string(x[c]) + " != weight dim 0");
    expect(w[0] % g == 0, "input channels not divisible by groups");
    out.push_back(w[1] * g);
    for (int j = 0; j < m; ++j) {
      const int64_t o = (x[c + 1 + j] - 1) * s - 2 * p + d * (w[2 + j] - 1) + 1;
      expect(o >= 1, "transposed conv output size is too small");
      out.push_back(o);
    }
  }
  return out;
}

Shape normalize(const OperatorSpec& spec, const Shape& x, const Attrs& at) {
  const std::string& op = spec.name;
  if (op == "BatchNorm") {
    expect(x.size() >= 2, "batch_norm needs rank >= 2");
    expect(numel(x) / x[1] > 1, "expected more than 1 value per channel when training");
  } else if (op == "InstanceNorm") {
    expect(x.size() >= 3, "instance_norm needs rank >= 3");
    int64_t spatial = 1;
    for (size_t i = 2; i < x.size(); ++i) spatial *= x[i];
    expect(spatial > 1, "expected more than 1 spatial element when training");
  } else if (op == "GroupNorm") {
    const int64_t groups = need(at.num_groups, "num_groups");
    expect(x.size() >= 2, "group_norm needs rank >= 2");
    expect(groups >= 1 && x[1] % groups == 0, "channels not divisible by num_groups");
  } else if (op == "LayerNorm") {
    expect(!x.empty(), "layer_norm needs rank >= 1");
  } else {
    reject("unknown normalization " + op);
  }
  return x;
}

Shape infer_node(const OperatorSpec& spec, const std::vector<Shape>& in, const Attrs& at) {
  const auto arity_is = [&](size_t n) {
    expect(in.size() == n, spec.name + " takes " + std::to_string(n) + " inputs, got " + std::to_string(in.size()));
  };
  const std::string& op = spec.name;
  switch (spec.category) {
    case OpCategory::Create: reject("create op used as a compute node");
    case OpCategory::ElementwiseBinary:
      arity_is(2);
      return broadcast_or_reject(in[0], in[1]);
    case OpCategory::ElementwiseTernary:
      arity_is(3);
      return broadcast_or_reject(broadcast_or_reject(in[0], in[1]), in[2]);
    case OpCategory::Reduction:
      arity_is(1);
      return reduce(in[0], at);
    case OpCategory::Matrix:
      if (op == "Matmul") {
        arity_is(2);
        return matmul(in[0], in[1]);
      }
      if (op == "Bmm") {
        arity_is(2);
        expect(in[0].size() == 3 && in[1].size() == 3, "bmm expects 3-D tensors");
        expect(in[0][0] == in[1][0], "bmm batch mismatch");
        expect(in[0][2] == in[1][1], "bmm contraction mismatch");
        return {in[0][0], in[0][1], in[1][2]};
      }
      arity_is(1);
      expect(in[0].size() >= 2, op + " needs rank >= 2");
      if (op == "Transpose") {
        Shape out = in[0];
        std::swap(out[out.size() - 1], out[out.size() - 2]);
        return out;
      }
      return in[0];
    case OpCategory::UnaryActivation:
      arity_is(1);
      if (op == "Clamp") expect(at.min_value || at.max_value, "clamp needs a bound");
      return in[0];
    case OpCategory::UnaryMath:
      arity_is(1);
      return in[0];
    case OpCategory::UnaryWithDim:
    case OpCategory::Cumulative:
      arity_is(1);
      check_dim(need(at.dim, "dim"), in[0].size());
      return in[0];
    case OpCategory::Normalization:
      arity_is(1);
      return normalize(spec, in[0], at);
    case OpCategory::Pool1d:
    case OpCategory::Pool2d:
    case OpCategory::Pool3d:
      arity_is(1);
      return pool(in[0], spec.spatial_rank, at);
    case OpCategory::Conv1d:
    case OpCategory::Conv2d:
    case OpCategory::Conv3d:
      arity_is(2);
      return conv(in[0], in[1], spec.spatial_rank, false, at);
    case OpCategory::ConvTranspose1d:
    case OpCategory::ConvTranspose2d:
    case OpCategory::ConvTranspose3d:
      arity_is(2);
      return conv(in[0], in[1], spec.spatial_rank, true, at);
    case OpCategory::Variadic: {
      expect(!in.empty(), op + " needs inputs");
      if (op == "Stack") {
        const int64_t dim = at.dim.value_or(0);
        expect(dim >= 0 && dim <= static_cast<int64_t>(in[0].size()), "stack dim out of range");
        for (const auto& s : in) expect(s == in[0], "stack expects equal shapes");
        Shape out = in[0];
        out.insert(out.begin() + dim, static_cast<int64_t>(in.size()));
        return out;
      }
      const size_t n = in[0].size();
      expect(n >= 1, "zero-dimensional tensor cannot be concatenated");
      const int64_t raw = need(at.dim, "dim");
      check_dim(raw, n);
      const size_t dim = static_cast<size_t>(wrap_dim(raw, n));
      Shape out = in[0];
      out[dim] = 0;
      for (const auto& s : in) {
        expect(s.size() == n, "cat expects equal ranks");
        for (size_t i = 0; i < n; ++i)
          if (i != dim) expect(s[i] == in[0][i], "cat size mismatch at dim " + std::to_string(i));
        out[dim] += s[dim];
      }
      return out;
    }
  }
  reject("unhandled operator " + op);
}

}  // namespace

std::optional<Shape> broadcast_shapes(const Shape& a, const Shape& b) {
  const size_t n = std::max(a.size(), b.size());
  Shape out(n);
  for (size_t i = 0; i < n; ++i) {
    const int64_t x = i < a.size() ? a[a.size() - 1 - i] : 1;
    const int64_t y = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (x != y && x != 1 && y != 1) return std::nullopt;
    out[n - 1 - i] = x == 1 ? y : x;
  }
  return out;
}

ShapeReport infer(const ProgramGraph& graph, const std::vector<Shape>& create_shapes,
                  const std::vector<Attrs>& attrs, const Catalog& catalog) {
  ShapeReport report;
  const size_t n_edges = graph.create_statements.size() + graph.nodes.size();
  report.shapes.assign(std::max(n_edges, graph.edges.size()), std::nullopt);
  auto fail = [&](int node, std::string reason) {
    report.ok = false;
    report.error_node = node;
    report.reason = std::move(reason);
    return report;
  };
  if (create_shapes.size() != graph.create_statements.size())
    return fail(-1, "expected " + std::to_string(graph.create_statements.size()) + " create shapes");
  if (attrs.size() != graph.nodes.size())
    return fail(-1, "expected " + std::to_string(graph.nodes.size()) + " attribute sets");
  for (size_t i = 0; i < graph.create_statements.size(); ++i) {
    const EdgeId e = graph.create_statements[i].edge;
    if (e < 0 || static_cast<size_t>(e) >= report.shapes.size()) return fail(-1, "create edge out of range");
    for (int64_t d : create_shapes[i])
      if (d < 0) return fail(-1, "negative dimension in create shape");
    report.shapes[e] = create_shapes[i];
  }
  for (size_t i = 0; i < graph.nodes.size(); ++i) {
    const Node& node = graph.nodes[i];
    const int id = static_cast<int>(i);
    try {
      if (!catalog.contains(node.op)) return fail(id, "unknown operator " + node.op);
      std::vector<Shape> in;
      for (EdgeId e : node.inputs) {
        if (e < 0 || static_cast<size_t>(e) >= report.shapes.size() || !report.shapes[e])
          return fail(id, "input edge " + std::to_string(e) + " has no shape");
        in.push_back(*report.shapes[e]);
      }
      if (node.output < 0 || static_cast<size_t>(node.output) >= report.shapes.size() || report.shapes[node.output])
        return fail(id, "output edge " + std::to_string(node.output) + " invalid or already defined");
      report.shapes[node.output] = infer_node(catalog.lookup(node.op), in, attrs[i]);
    } catch (const Reject& r) {
      return fail(id, node.op + ": " + r.reason);
    } catch (const std::exception& ex) {
      return fail(id, node.op + ": " + ex.what());
    }
  }
  return report;
}

MatchReport verify_program(const ProgramGraph& graph, const ShapeSolution& solution, const Catalog& catalog) {
  MatchReport out;
  std::vector<Shape> creates;
  for (const auto& c : graph.create_statements) {
    if (c.edge < 0 || static_cast<size_t>(c.edge) >= solution.shapes.size()) {
      out.ok = false;
      out.reason = "solution lacks a shape for create edge " + std::to_string(c.edge);
      return out;
    }
    creates.push_back(solution.shapes[c.edge]);
  }
  const ShapeReport r = infer(graph, creates, solution.attrs, catalog);
  if (!r.ok) {
    out.ok = false;
    out.error_node = r.error_node;
    out.reason = r.reason;
    return out;
  }
  for (size_t e = 0; e < r.shapes.size(); ++e) {
    const Shape expected = e < solution.shapes.size() ? solution.shapes[e] : Shape{};
    if (e >= solution.shapes.size() || !r.shapes[e] || *r.shapes[e] != expected)
      out.mismatches.push_back({static_cast<EdgeId>(e), expected, r.shapes[e]});
  }
  out.ok = out.mismatches.empty();
  if (!out.ok) out.reason = "inferred shapes differ from the solution";
  return out;
}

json to_json(const ShapeReport& r) {
  json shapes = json::array();
  for (const auto& s : r.shapes) shapes.push_back(s ? json(*s) : json(nullptr));
  json j = {{"status", r.ok ? "ok" : "shape_error"}, {"shapes", shapes}};
  if (!r.ok) j["error"] = {{"node", r.error_node}, {"reason", r.reason}};
  return j;
}

json to_json(const MatchReport& r) {
  json mism = json::array();
  for (const auto& m : r.mismatches)
    mism.push_back({{"edge", m.edge}, {"expected", m.expected}, {"inferred", m.inferred ? json(*m.inferred) : json(nullptr)}});
  json j = {{"status", r.ok ? "ok" : "mismatch"}, {"mismatches", mism}};
  if (r.error_node) j["error"] = {{"node", *r.error_node}, {"reason", r.reason}};
  else if (!r.ok) j["reason"] = r.reason;
  return j;
}

}  // namespace forge
