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

// Shape search in three stages.
//
//  1. Orders: generalized arc consistency over per-edge order domains, then a
//     randomized search over the remaining choices.
//  2. Structure: with orders fixed, each node's attributes and broadcast
//     branches are chosen and every dimension becomes a symbolic term. Terms
//     are unified; relations that cannot be unified are kept as residuals.
//     The choice sequence is recorded so the search can backtrack by replay.
//  3. Values: free variables get integers. Interval evaluation of the terms
//     prunes residuals and the global size/FLOP window before the leaf, where
//     everything is re-verified exactly.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <unordered_map>
#include <unordered_set>

#include "forge/error.hpp"
#include "forge/solver.hpp"

namespace forge {

namespace {

using Clock = std::chrono::steady_clock;
using Mask = uint16_t;

constexpr Mask kAnyOrder = (1u << (kMaxOrder + 1)) - 1;
constexpr Mask kCreateOrders = kAnyOrder & ~Mask{1};

constexpr double kCreateOrderWeights[kMaxOrder + 1] = {0, 3, 4, 4, 3, 1.5, 0.5, 0.3, 0.2};

constexpr int kEnumerateOrders = 64;
constexpr int kMaxRestarts = 48;
constexpr int kReplaysPerRestart = 200;
constexpr int kLeavesPerRestart = 4;
constexpr int kValueRunsPerLeaf = 6;
constexpr int64_t kValueNodeBudget = 4000;
constexpr int kCandidatesPerVar = 3;
constexpr int64_t kBoundLimit = int64_t{1} << 40;

int64_t floor_div(int64_t a, int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

int64_t conv_out(int64_t x, int64_t k, int s, int p, int d) { return floor_div(x + 2 * p - d * (k - 1) - 1, s) + 1; }

int64_t convt_out(int64_t x, int64_t k, int s, int p, int d) { return (x - 1) * s - 2 * p + d * (k - 1) + 1; }

// ---------------------------------------------------------------------------
// Orders

struct OrderContext {
  const ProgramGraph& g;
  std::vector<const OperatorSpec*> specs;
  std::vector<bool> is_create;
};

int norm_min_order(NormKind k) {
  switch (k) {
    case NormKind::Batch: return 2;
    case NormKind::Group: return 2;
    case NormKind::Instance: return 3;
    default: return 1;
  }
}

bool order_relation(const Node& node, const OperatorSpec& spec, const int* in, int out) {
  const int a = in[0];
  if (node.attrs.dim && spec.constraint_kind != ConstraintKind::Stack && a <= *node.attrs.dim) return false;
  const int m2 = spec.spatial_rank + 2;
  switch (spec.constraint_kind) {
    case ConstraintKind::Broadcast: {
      int n = 0;
      for (size_t i = 0; i < node.inputs.size(); ++i) n = std::max(n, in[i]);
      return out == n;
    }
    case ConstraintKind::Reduce:
      if (a < 1) return false;
      if (node.attrs.keepdim) return out == (*node.attrs.keepdim ? a : a - 1);
      return out == a || out == a - 1;
    case ConstraintKind::DimPreserving: return a >= 1 && out == a;
    case ConstraintKind::Matmul: return a >= 2 && in[1] >= 2 && out == std::max(a, in[1]);
    case ConstraintKind::Bmm: return a == 3 && in[1] == 3 && out == 3;
    case ConstraintKind::Transpose:
    case ConstraintKind::Triangular: return a >= 2 && out == a;
    case ConstraintKind::Conv:
    case ConstraintKind::ConvTranspose: return a == m2 && in[1] == m2 && out == m2;
    case ConstraintKind::Pool: return a == m2 && out == m2;
    case ConstraintKind::Normalization: return a >= norm_min_order(spec.norm) && out == a;
    case ConstraintKind::Unary: return out == a;
    default: return false;
  }
}

// One revision of a node's hyperedge. Returns false on a wipeout.
bool revise(const OrderContext& ctx, const Node& node, std::vector<Mask>& dom, bool& changed) {
  const OperatorSpec& spec = *ctx.specs[node.node_id];
  auto set = [&](EdgeId e, Mask m) {
    if (m != dom[e]) {
      dom[e] = m;
      changed = true;
    }
    return m != 0;
  };
  if (spec.constraint_kind == ConstraintKind::Cat || spec.constraint_kind == ConstraintKind::Stack) {
    Mask common = spec.constraint_kind == ConstraintKind::Cat ? Mask(kAnyOrder & ~1u) : Mask(kAnyOrder >> 1);
    for (EdgeId e : node.inputs) common &= dom[e];
    Mask out = dom[node.output];
    if (spec.constraint_kind == ConstraintKind::Cat) {
      common &= out;
      out = common;
    } else {
      common &= Mask(out >> 1);
      out = Mask(common << 1);
    }
    for (EdgeId e : node.inputs)
      if (!set(e, common)) return false;
    return set(node.output, out);
  }
  const size_t k = node.inputs.size();
  std::vector<Mask> support(k, 0);
  Mask out_support = 0;
  int tuple[4] = {0, 0, 0, 0};
  std::function<void(size_t)> walk = [&](size_t i) {
    if (i == k) {
      for (int o = 0; o <= kMaxOrder; ++o) {
        if (!(dom[node.output] >> o & 1) || !order_relation(node, spec, tuple, o)) continue;
        out_support |= Mask(1u << o);
        for (size_t j = 0; j < k; ++j) support[j] |= Mask(1u << tuple[j]);
      }
      return;
    }
    const Mask m = dom[node.inputs[i]];
    for (int v = 0; v <= kMaxOrder; ++v)
      if (m >> v & 1) {
        tuple[i] = v;
        walk(i + 1);
      }
  };
  walk(0);
  for (size_t j = 0; j < k; ++j)
    if (!set(node.inputs[j], dom[node.inputs[j]] & support[j])) return false;
  return set(node.output, out_support);
}

bool propagate(const OrderContext& ctx, std::vector<Mask>& dom) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& node : ctx.g.nodes)
      if (!revise(ctx, node, dom, changed)) return false;
  }
  return true;
}

std::vector<int> orders_of(const std::vector<Mask>& dom) {
  std::vector<int> out;
  for (Mask m : dom) out.push_back(std::countr_zero(m));
  return out;
}

// Collects up to `cap` complete order assignments, in canonical order.
void enumerate_orders(const OrderContext& ctx, std::vector<Mask> dom, size_t from, size_t cap,
                      std::vector<std::vector<int>>& out, int64_t& steps) {
  if (out.size() > cap || ++steps > 200000) return;
  size_t e = from;
  while (e < dom.size() && std::popcount(dom[e]) == 1) ++e;
  if (e == dom.size()) {
    out.push_back(orders_of(dom));
    return;
  }
  for (int v = 0; v <= kMaxOrder; ++v) {
    if (!(dom[e] >> v & 1)) continue;
    auto next = dom;
    next[e] = Mask(1u << v);
    if (propagate(ctx, next)) enumerate_orders(ctx, next, e + 1, cap, out, steps);
    if (out.size() > cap) return;
  }
}

enum class Found { Yes, No, Cut };

Found random_orders(const OrderContext& ctx, std::vector<Mask>& dom, size_t from, Rng& rng, int64_t& steps) {
  if (++steps > 20000) return Found::Cut;
  size_t e = from;
  while (e < dom.size() && std::popcount(dom[e]) == 1) ++e;
  if (e == dom.size()) return Found::Yes;
  std::vector<int> values;
  std::vector<double> weights;
  for (int v = 0; v <= kMaxOrder; ++v)
    if (dom[e] >> v & 1) {
      values.push_back(v);
      weights.push_back(ctx.is_create[e] ? kCreateOrderWeights[v] : 1.0);
    }
  bool cut = false;
  for (int i : rng.weighted_order(weights)) {
    auto next = dom;
    next[e] = Mask(1u << values[i]);
    if (!propagate(ctx, next)) continue;
    const Found f = random_orders(ctx, next, e + 1, rng, steps);
    if (f == Found::Yes) {
      dom = std::move(next);
      return f;
    }
    if (f == Found::Cut) cut = true;
    if (cut) break;
  }
  return cut ? Found::Cut : Found::No;
}

// ---------------------------------------------------------------------------
// Symbolic dimensions

using TermId = int;

enum class TermKind : uint8_t { Const, Var, Scale, Sum, ConvOut, ConvTOut };

struct Term {
  TermKind kind = TermKind::Const;
  int64_t value = 0;  // constant, or scale factor
  int var = -1;
  TermId x = -1;
  TermId k = -1;
  int s = 1, p = 0, d = 1;
  std::vector<TermId> parts;
};

struct Interval {
  int64_t lo = 0;
  int64_t hi = 0;
  bool point() const { return lo == hi; }
};

enum class ResidualKind : uint8_t { Eq, Ge, InRange, DivBy, ProdGe };

struct Residual {
  ResidualKind kind = ResidualKind::Eq;
  TermId a = -1;
  TermId b = -1;
  int64_t lo = 0;
  int64_t hi = 0;
  std::vector<TermId> parts;
};

class Model {
 public:
  std::vector<Term> terms;
  std::vector<TermId> binding;  // per variable; -1 while free
  std::vector<int64_t> lo, hi;  // per variable
  std::vector<Residual> residuals;
  std::vector<std::vector<TermId>> dims;  // per edge
  std::vector<Attrs> attrs;               // per node

  TermId constant(int64_t c) {
    if (auto it = consts_.find(c); it != consts_.end()) return it->second;
    Term t;
    t.value = c;
    const TermId id = add(std::move(t));
    consts_.emplace(c, id);
    return id;
  }

  TermId fresh() {
    Term t;
    t.kind = TermKind::Var;
    t.var = static_cast<int>(binding.size());
    binding.push_back(-1);
    lo.push_back(kMinDim);
    hi.push_back(kMaxDim);
    return add(std::move(t));
  }

  TermId scale(TermId x, int64_t g) {
    if (g == 1) return x;
    Term t;
    t.kind = TermKind::Scale;
    t.x = x;
    t.value = g;
    return add(std::move(t));
  }

  TermId sum(std::vector<TermId> parts) {
    Term t;
    t.kind = TermKind::Sum;
    t.parts = std::move(parts);
    return add(std::move(t));
  }

  TermId conv(TermKind kind, TermId x, TermId k, int s, int p, int d) {
    Term t;
    t.kind = kind;
    t.x = x;
    t.k = k;
    t.s = s;
    t.p = p;
    t.d = d;
    return add(std::move(t));
  }

  TermId resolve(TermId t) const {
    while (terms[t].kind == TermKind::Var && binding[terms[t].var] >= 0) t = binding[terms[t].var];
    return t;
  }

  Interval interval(TermId id) const {
    const Term& t = terms[id];
    switch (t.kind) {
      case TermKind::Const: return {t.value, t.value};
      case TermKind::Var:
        if (binding[t.var] >= 0) return interval(binding[t.var]);
        return {lo[t.var], hi[t.var]};
      case TermKind::Scale: {
        const Interval x = interval(t.x);
        return {sat_mul(x.lo, t.value), sat_mul(x.hi, t.value)};
      }
      case TermKind::Sum: {
        Interval r{0, 0};
        for (TermId p : t.parts) {
          const Interval x = interval(p);
          r.lo = sat_add(r.lo, x.lo);
          r.hi = sat_add(r.hi, x.hi);
        }
        return r;
      }
      case TermKind::ConvOut: {
        const Interval x = interval(t.x), k = interval(t.k);
        return {conv_out(x.lo, k.hi, t.s, t.p, t.d), conv_out(x.hi, k.lo, t.s, t.p, t.d)};
      }
      case TermKind::ConvTOut: {
        const Interval x = interval(t.x), k = interval(t.k);
        return {convt_out(x.lo, k.lo, t.s, t.p, t.d), convt_out(x.hi, k.hi, t.s, t.p, t.d)};
      }
    }
    return {0, 0};
  }

  std::optional<int64_t> ground(TermId t) const {
    const Interval i = interval(t);
    if (i.point()) return i.lo;
    return std::nullopt;
  }

  bool feasible(const Residual& r) const {
    switch (r.kind) {
      case ResidualKind::Eq: {
        const Interval a = interval(r.a), b = interval(r.b);
        return a.lo <= b.hi && b.lo <= a.hi;
      }
      case ResidualKind::Ge: return interval(r.a).hi >= interval(r.b).lo;
      case ResidualKind::InRange: {
        const Interval a = interval(r.a);
        return a.lo <= r.hi && r.lo <= a.hi;
      }
      case ResidualKind::DivBy: {
        const Interval a = interval(r.a);
        return floor_div(a.hi, r.lo) * r.lo >= a.lo;
      }
      case ResidualKind::ProdGe: {
        int64_t p = 1;
        for (TermId t : r.parts) p = sat_mul(p, std::max<int64_t>(interval(t).hi, 0));
        return p >= r.lo;
      }
    }
    return false;
  }

  bool require(Residual r) {
    residuals.push_back(std::move(r));
    return tighten(residuals.back()) && feasible(residuals.back());
  }

  bool unify(TermId a, TermId b) {
    a = resolve(a);
    b = resolve(b);
    if (a == b) return true;
    const auto ga = ground(a), gb = ground(b);
    if (ga && gb) return *ga == *gb;
    if (terms[a].kind == TermKind::Var) return bind(a, b);
    if (terms[b].kind == TermKind::Var) return bind(b, a);
    if (ga && terms[b].kind == TermKind::Scale) return divide_into(*ga, b);
    if (gb && terms[a].kind == TermKind::Scale) return divide_into(*gb, a);
    return require({ResidualKind::Eq, a, b, 0, 0, {}});
  }

  // Bounds propagation over every residual until a fixpoint. Returns false
  // when some domain empties or a residual cannot hold.
  bool propagate() {
    for (int pass = 0; pass < 32; ++pass) {
      changed_ = false;
      for (const auto& r : residuals)
        if (!tighten(r) || !feasible(r)) return false;
      if (!changed_) return true;
    }
    return true;
  }

  // Restricts term `id` to values in [l, h].
  bool narrow(TermId id, int64_t l, int64_t h) {
    l = std::max(l, -kBoundLimit);
    h = std::min(h, kBoundLimit);
    id = resolve(id);
    const Interval cur = interval(id);
    if (cur.lo >= l && cur.hi <= h) return true;
    if (cur.hi < l || cur.lo > h) return false;
    const Term& t = terms[id];
    switch (t.kind) {
      case TermKind::Const: return l <= t.value && t.value <= h;
      case TermKind::Var: {
        lo[t.var] = std::max(lo[t.var], l);
        hi[t.var] = std::min(hi[t.var], h);
        changed_ = true;
        return lo[t.var] <= hi[t.var];
      }
      case TermKind::Scale: return narrow(t.x, ceil_div(l, t.value), floor_div(h, t.value));
      case TermKind::Sum: {
        const std::vector<TermId> parts = t.parts;
        std::vector<Interval> iv;
        int64_t slo = 0, shi = 0;
        for (TermId p : parts) {
          iv.push_back(interval(p));
          slo += iv.back().lo;
          shi += iv.back().hi;
        }
        for (size_t i = 0; i < parts.size(); ++i)
          if (!narrow(parts[i], l - (shi - iv[i].hi), h - (slo - iv[i].lo))) return false;
        return true;
      }
      case TermKind::ConvOut:
      case TermKind::ConvTOut: {
        const bool up = t.kind == TermKind::ConvTOut;  // output increases with k
        const TermId tx = t.x, tk = t.k;
        const int s = t.s, p = t.p, d = t.d;
        auto f = [&](int64_t x, int64_t k) { return up ? convt_out(x, k, s, p, d) : conv_out(x, k, s, p, d); };
        const Interval x = interval(tx), k = interval(tk);
        const int64_t k_for_lo = up ? k.hi : k.lo;  // k giving the largest output
        const int64_t k_for_hi = up ? k.lo : k.hi;  // k giving the smallest output
        const int64_t x_lo = first_true(x.lo, x.hi, [&](int64_t v) { return f(v, k_for_lo) >= l; });
        const int64_t x_hi = first_true(x.lo, x.hi, [&](int64_t v) { return f(v, k_for_hi) > h; }) - 1;
        if (!narrow(tx, x_lo, x_hi)) return false;
        const Interval x2 = interval(tx);
        int64_t k_lo, k_hi;
        if (up) {
          k_lo = first_true(k.lo, k.hi, [&](int64_t v) { return f(x2.hi, v) >= l; });
          k_hi = first_true(k.lo, k.hi, [&](int64_t v) { return f(x2.lo, v) > h; }) - 1;
        } else {
          k_lo = first_true(k.lo, k.hi, [&](int64_t v) { return f(x2.lo, v) <= h; });
          k_hi = first_true(k.lo, k.hi, [&](int64_t v) { return f(x2.hi, v) < l; }) - 1;
        }
        return narrow(tk, k_lo, k_hi);
      }
    }
    return false;
  }

  void collect_vars(TermId id, std::vector<int>& out) const {
    id = resolve(id);
    const Term& t = terms[id];
    switch (t.kind) {
      case TermKind::Const: return;
      case TermKind::Var: out.push_back(t.var); return;
      case TermKind::Scale: collect_vars(t.x, out); return;
      case TermKind::Sum:
        for (TermId p : t.parts) collect_vars(p, out);
        return;
      case TermKind::ConvOut:
      case TermKind::ConvTOut:
        collect_vars(t.x, out);
        collect_vars(t.k, out);
        return;
    }
  }

 private:
  TermId add(Term t) {
    terms.push_back(std::move(t));
    return static_cast<TermId>(terms.size() - 1);
  }

  bool occurs(int var, TermId t) const {
    std::vector<int> vars;
    collect_vars(t, vars);
    return std::find(vars.begin(), vars.end(), var) != vars.end();
  }

  bool bind(TermId v, TermId t) {
    const int var = terms[v].var;
    if (occurs(var, t)) return require({ResidualKind::Eq, v, t, 0, 0, {}});
    const int64_t l = lo[var], h = hi[var];
    binding[var] = t;
    return narrow(t, l, h);
  }

  bool divide_into(int64_t c, TermId scaled) {
    const Term& t = terms[scaled];
    if (c % t.value != 0) return false;
    return unify(t.x, constant(c / t.value));
  }

  static int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

  // Smallest v in [a, b] with pred(v), for pred monotone false -> true; b + 1 if none.
  template <typename Pred>
  static int64_t first_true(int64_t a, int64_t b, Pred pred) {
    int64_t hi = b + 1;
    while (a < hi) {
      const int64_t mid = a + (hi - a) / 2;
      if (pred(mid)) hi = mid;
      else a = mid + 1;
    }
    return a;
  }

  bool tighten(const Residual& r) {
    switch (r.kind) {
      case ResidualKind::Eq: {
        const Interval b = interval(r.b);
        if (!narrow(r.a, b.lo, b.hi)) return false;
        const Interval a = interval(r.a);
        return narrow(r.b, a.lo, a.hi);
      }
      case ResidualKind::Ge:
        if (!narrow(r.a, interval(r.b).lo, kBoundLimit)) return false;
        return narrow(r.b, -kBoundLimit, interval(r.a).hi);
      case ResidualKind::InRange: return narrow(r.a, r.lo, r.hi);
      case ResidualKind::DivBy: {
        const TermId a = resolve(r.a);
        if (terms[a].kind != TermKind::Var) return true;
        const Interval i = interval(a);
        return narrow(a, ceil_div(i.lo, r.lo) * r.lo, floor_div(i.hi, r.lo) * r.lo);
      }
      case ResidualKind::ProdGe: {
        for (size_t i = 0; i < r.parts.size(); ++i) {
          int64_t others = 1;
          for (size_t j = 0; j < r.parts.size(); ++j)
            if (j != i) others = sat_mul(others, std::max<int64_t>(interval(r.parts[j]).hi, 0));
          if (others == 0) return false;
          if (!narrow(r.parts[i], ceil_div(r.lo, others), kBoundLimit)) return false;
        }
        return true;
      }
    }
    return true;
  }

  bool changed_ = false;
  std::unordered_map<int64_t, TermId> consts_;
};

// ---------------------------------------------------------------------------
// Replayable choices

class Script {
 public:
  int choose(Rng& rng, std::span<const double> weights) {
    if (weights.size() == 1) return 0;
    if (cursor_ == points_.size()) points_.push_back({rng.weighted_order(weights), 0});
    const auto& p = points_[cursor_++];
    return p.perm[p.at];
  }

  void rewind() { cursor_ = 0; }
  size_t cursor() const { return cursor_; }

  // Moves to the next untried branch at or before `depth`.
  bool advance(size_t depth) {
    points_.resize(std::min(depth, points_.size()));
    while (!points_.empty()) {
      auto& p = points_.back();
      if (p.at + 1 < p.perm.size()) {
        ++p.at;
        return true;
      }
      points_.pop_back();
    }
    return false;
  }

 private:
  struct Point {
    std::vector<int> perm;
    size_t at = 0;
  };
  std::vector<Point> points_;
  size_t cursor_ = 0;
};

struct Context {
  const ConstraintSet& cs;
  const ProgramGraph& g;
  std::vector<const OperatorSpec*> specs;
  GlobalBounds bounds;
  bool floor_applies = true;
  Clock::time_point deadline;

  bool expired() const { return Clock::now() >= deadline; }
};

// Builds the symbolic model for one order assignment and one choice script.
class Structure {
 public:
  Structure(const Context& ctx, const std::vector<int>& orders, Script& script, Rng& rng)
      : ctx_(ctx), orders_(orders), script_(script), rng_(rng) {}

  bool run(Model& m) {
    m_ = &m;
    const auto& g = ctx_.g;
    m.dims.assign(g.edges.size(), {});
    m.attrs.assign(g.nodes.size(), {});
    for (const auto& c : g.create_statements) {
      auto& d = m.dims[c.edge];
      auto pin = ctx_.cs.pins.find(c.edge);
      for (int i = 0; i < orders_[c.edge]; ++i)
        d.push_back(pin != ctx_.cs.pins.end() && pin->second.dims ? m.constant((*pin->second.dims)[i]) : m.fresh());
    }
    for (const auto& node : g.nodes) {
      if (!build(node) || !m.propagate()) return false;
      auto pin = ctx_.cs.pins.find(node.output);
      if (pin != ctx_.cs.pins.end() && pin->second.dims) {
        const auto& want = *pin->second.dims;
        auto& have = m.dims[node.output];
        if (want.size() != have.size()) return false;
        for (size_t i = 0; i < want.size(); ++i)
          if (!m.unify(have[i], m.constant(want[i]))) return false;
      }
    }
    return finish();
  }

 private:
  std::optional<int64_t> pick(const std::vector<int64_t>& values, const std::vector<double>& weights,
                              std::optional<int> pinned) {
    if (pinned) {
      if (std::find(values.begin(), values.end(), *pinned) == values.end()) return std::nullopt;
      return *pinned;
    }
    return values[script_.choose(rng_, weights)];
  }

  std::optional<int64_t> pick_range(int64_t lo, int64_t hi, std::optional<int> pinned) {
    std::vector<int64_t> values;
    for (int64_t v = lo; v <= hi; ++v) values.push_back(v);
    if (values.empty()) return std::nullopt;
    return pick(values, std::vector<double>(values.size(), 1.0), pinned);
  }

  // Broadcast merge of two aligned dims; returns the output dim.
  std::optional<TermId> merge(TermId acc, TermId t) {
    Model& m = *m_;
    if (m.ground(acc) == 1) return t;
    if (m.ground(t) == 1) return acc;
    static constexpr double kBranches[] = {4, 1, 1};
    switch (script_.choose(rng_, kBranches)) {
      case 0:
        if (!m.unify(acc, t)) return std::nullopt;
        return acc;
      case 1:
        if (!m.unify(acc, m.constant(1))) return std::nullopt;
        return t;
      default:
        if (!m.unify(t, m.constant(1))) return std::nullopt;
        return acc;
    }
  }

  bool broadcast(const std::vector<const std::vector<TermId>*>& ins, size_t n, size_t upto,
                 std::vector<TermId>& out) {
    for (size_t i = 0; i < upto; ++i) {
      std::optional<TermId> acc;
      for (const auto* in : ins) {
        if (i + in->size() < n) continue;
        const TermId t = (*in)[i + in->size() - n];
        if (!acc) {
          acc = t;
          continue;
        }
        acc = merge(*acc, t);
        if (!acc) return false;
      }
      out[i] = acc ? *acc : m_->constant(1);
    }
    return true;
  }

  bool build(const Node& node) {
    Model& m = *m_;
    const OperatorSpec& spec = *ctx_.specs[node.node_id];
    const Attrs& pin = node.attrs;
    Attrs& at = m.attrs[node.node_id];
    const size_t n_out = static_cast<size_t>(orders_[node.output]);
    std::vector<TermId> out(n_out, -1);
    const std::vector<TermId>& a = m.dims[node.inputs[0]];
    const int64_t na = static_cast<int64_t>(a.size());

    switch (spec.constraint_kind) {
      case ConstraintKind::Broadcast: {
        std::vector<const std::vector<TermId>*> ins;
        for (EdgeId e : node.inputs) ins.push_back(&m.dims[e]);
        if (!broadcast(ins, n_out, n_out, out)) return false;
        break;
      }
      case ConstraintKind::Reduce: {
        const auto dim = pick_range(0, na - 1, pin.dim);
        if (!dim) return false;
        const bool keep = static_cast<int64_t>(n_out) == na;
        if (pin.keepdim && *pin.keepdim != keep) return false;
        at.dim = static_cast<int>(*dim);
        at.keepdim = keep;
        out.clear();
        for (int64_t i = 0; i < na; ++i) {
          if (i != *dim) out.push_back(a[i]);
          else if (keep) out.push_back(m.constant(1));
        }
        break;
      }
      case ConstraintKind::DimPreserving: {
        const auto dim = pick_range(0, na - 1, pin.dim);
        if (!dim) return false;
        at.dim = static_cast<int>(*dim);
        out = a;
        break;
      }
      case ConstraintKind::Matmul: {
        const auto& b = m.dims[node.inputs[1]];
        const size_t n = n_out;
        auto at_pos = [&](const std::vector<TermId>& v, size_t i) { return v[i + v.size() - n]; };
        if (!m.unify(at_pos(a, n - 1), at_pos(b, n - 2))) return false;
        if (!broadcast({&a, &b}, n, n - 2, out)) return false;
        out[n - 2] = at_pos(a, n - 2);
        out[n - 1] = at_pos(b, n - 1);
        break;
      }
      case ConstraintKind::Bmm: {
        const auto& b = m.dims[node.inputs[1]];
        if (!m.unify(a[0], b[0]) || !m.unify(a[2], b[1])) return false;
        out = {a[0], a[1], b[2]};
        break;
      }
      case ConstraintKind::Transpose:
        out = a;
        std::swap(out[n_out - 1], out[n_out - 2]);
        break;
      case ConstraintKind::Triangular:
        out = a;
        break;
      case ConstraintKind::Conv:
      case ConstraintKind::ConvTranspose: {
        static const std::vector<double> kStrideW = {6, 3, 1, 1}, kPadW = {4, 3, 2, 1}, kDilW = {6, 2, 1, 1},
                                         kGroupW = {5, 2, 1};
        const auto s = pick({1, 2, 3, 4}, kStrideW, pin.stride);
        const auto p = pick({0, 1, 2, 3}, kPadW, pin.padding);
        const auto d = pick({1, 2, 3, 4}, kDilW, pin.dilation);
        const auto gr = pick({1, 2, 4}, kGroupW, pin.groups);
        if (!s || !p || !d || !gr) return false;
        at.stride = static_cast<int>(*s);
        at.padding = static_cast<int>(*p);
        at.dilation = static_cast<int>(*d);
        at.groups = static_cast<int>(*gr);
        const auto& w = m.dims[node.inputs[1]];
        const int ms = spec.spatial_rank;
        for (int j = 0; j < ms; ++j)
          if (!m.require({ResidualKind::InRange, w[2 + j], -1, kMinKernel, kMaxKernel, {}})) return false;
        if (*p > 0) {
          const int j = ms == 1 ? 0 : script_.choose(rng_, std::vector<double>(ms, 1.0));
          if (!m.require({ResidualKind::Ge, w[2 + j], m.constant(2 * *p), 0, 0, {}})) return false;
        }
        const TermKind kind =
            spec.constraint_kind == ConstraintKind::Conv ? TermKind::ConvOut : TermKind::ConvTOut;
        out[0] = a[0];
        if (spec.constraint_kind == ConstraintKind::Conv) {
          if (!m.unify(a[1], m.scale(w[1], *gr))) return false;
          if (!m.require({ResidualKind::DivBy, w[0], -1, *gr, 0, {}})) return false;
          out[1] = w[0];
          for (int j = 0; j < ms; ++j)
            if (!m.require({ResidualKind::Ge, a[2 + j], w[2 + j], 0, 0, {}})) return false;
        } else {
          if (!m.unify(a[1], w[0])) return false;
          if (!m.require({ResidualKind::DivBy, w[0], -1, *gr, 0, {}})) return false;
          out[1] = m.scale(w[1], *gr);
        }
        for (int j = 0; j < ms; ++j)
          out[2 + j] = m.conv(kind, a[2 + j], w[2 + j], at.stride.value(), at.padding.value(), at.dilation.value());
        break;
      }
      case ConstraintKind::Pool: {
        static const std::vector<double> kKernelW = {1, 4, 4, 2, 2, 1, 1}, kStrideW = {3, 4, 1, 1};
        const auto k = pick({1, 2, 3, 4, 5, 6, 7}, kKernelW, pin.kernel);
        const auto s = pick({1, 2, 3, 4}, kStrideW, pin.stride);
        if (!k || !s) return false;
        const auto p = pick_range(0, std::min<int64_t>(kMaxPadding, *k / 2), pin.padding);
        if (!p) return false;
        at.kernel = static_cast<int>(*k);
        at.stride = static_cast<int>(*s);
        at.padding = static_cast<int>(*p);
        out[0] = a[0];
        out[1] = a[1];
        for (int j = 0; j < spec.spatial_rank; ++j) {
          if (!m.require({ResidualKind::Ge, a[2 + j], m.constant(*k), 0, 0, {}})) return false;
          out[2 + j] = m.conv(TermKind::ConvOut, a[2 + j], m.constant(*k), at.stride.value(), at.padding.value(), 1);
        }
        break;
      }
      case ConstraintKind::Normalization: {
        out = a;
        if (spec.norm == NormKind::Batch) {
          std::vector<TermId> rest;
          for (int64_t i = 0; i < na; ++i)
            if (i != 1) rest.push_back(a[i]);
          if (!m.require({ResidualKind::ProdGe, -1, -1, 2, 0, rest})) return false;
        } else if (spec.norm == NormKind::Instance) {
          if (!m.require({ResidualKind::ProdGe, -1, -1, 2, 0, {a.begin() + 2, a.end()}})) return false;
        } else if (spec.norm == NormKind::Group) {
          static const std::vector<double> kW = {2, 2, 1};
          const auto groups = pick({1, 2, 4}, kW, pin.num_groups);
          if (!groups) return false;
          at.num_groups = static_cast<int>(*groups);
          if (!m.require({ResidualKind::DivBy, a[1], -1, *groups, 0, {}})) return false;
        }
        break;
      }
      case ConstraintKind::Unary:
        out = a;
        if (spec.name == "Clamp") {
          static const double kMin[] = {-1.0, -0.5, 0.0}, kMax[] = {0.5, 1.0, 2.0};
          static const double kW[] = {1, 1, 1};
          at.min_value = pin.min_value ? *pin.min_value : kMin[script_.choose(rng_, kW)];
          at.max_value = pin.max_value ? *pin.max_value : kMax[script_.choose(rng_, kW)];
          if (*at.min_value > *at.max_value) return false;
        }
        break;
      case ConstraintKind::Cat: {
        const auto dim = pick_range(0, na - 1, pin.dim);
        if (!dim) return false;
        at.dim = static_cast<int>(*dim);
        std::vector<TermId> parts;
        for (EdgeId e : node.inputs) {
          const auto& x = m.dims[e];
          parts.push_back(x[*dim]);
          for (int64_t i = 0; i < na; ++i)
            if (i != *dim && !m.unify(a[i], x[i])) return false;
        }
        out = a;
        out[*dim] = m.sum(std::move(parts));
        break;
      }
      case ConstraintKind::Stack: {
        if (pin.dim && *pin.dim != 0) return false;
        at.dim = 0;
        for (EdgeId e : node.inputs)
          for (int64_t i = 0; i < na; ++i)
            if (!m.unify(a[i], m.dims[e][i])) return false;
        out = {m.constant(static_cast<int64_t>(node.inputs.size()))};
        out.insert(out.end(), a.begin(), a.end());
        break;
      }
      case ConstraintKind::None:
        throw Error(ErrorCode::UnknownConstraintKind, spec.name);
    }
    m.dims[node.output] = std::move(out);
    return true;
  }

  bool finish() {
    Model& m = *m_;
    std::unordered_set<TermId> seen;
    for (size_t e = 0; e < m.dims.size(); ++e) {
      for (TermId t : m.dims[e]) {
        const TermId r = m.resolve(t);
        if (m.terms[r].kind != TermKind::Var && m.terms[r].kind != TermKind::Const && seen.insert(r).second)
          m.residuals.push_back({ResidualKind::InRange, r, -1, kMinDim, kMaxDim, {}});
      }
      if (!m.dims[e].empty() && ctx_.bounds.min_size_tensor > 1)
        m.residuals.push_back({ResidualKind::ProdGe, -1, -1, ctx_.bounds.min_size_tensor, 0, m.dims[e]});
    }
    return m.propagate();
  }

  const Context& ctx_;
  const std::vector<int>& orders_;
  Script& script_;
  Rng& rng_;
  Model* m_ = nullptr;
};

// ---------------------------------------------------------------------------
// Values

class Values {
 public:
  Values(const Context& ctx, Model& m, Rng& rng, double target, SolveStats& stats)
      : ctx_(ctx), m_(m), rng_(rng), target_(target), stats_(stats) {
    index();
  }

  int too_small = 0;
  int too_big = 0;
  bool cut = false;
  bool exact() const { return free_.empty() && !cut; }

  std::optional<ShapeSolution> run() {
    nodes_ = 0;
    if (!globals_ok()) return std::nullopt;
    if (dfs()) return std::move(result_);
    return std::nullopt;
  }

 private:
  void index() {
    const size_t nv = m_.binding.size();
    order_.assign(nv, 0);
    std::vector<int> first(nv, -1);
    int pos = 0;
    for (const auto& dims : m_.dims) {
      for (TermId t : dims) {
        std::vector<int> vars;
        m_.collect_vars(t, vars);
        for (int v : vars) {
          if (first[v] < 0) first[v] = pos++;
          if (m_.terms[m_.resolve(t)].kind == TermKind::Var)
            order_[v] = std::max(order_[v], static_cast<int>(dims.size()));
        }
      }
    }
    for (const auto& r : m_.residuals) {
      if (r.kind != ResidualKind::DivBy) continue;
      const TermId a = m_.resolve(r.a);
      if (m_.terms[a].kind != TermKind::Var) continue;
      const int v = m_.terms[a].var;
      mod_[v] = std::lcm(mod_.count(v) ? mod_[v] : 1, r.lo);
    }
    for (size_t v = 0; v < nv; ++v)
      if (m_.binding[v] < 0 && first[v] >= 0) free_.push_back(static_cast<int>(v));
    std::stable_sort(free_.begin(), free_.end(), [&](int x, int y) { return first[x] < first[y]; });
  }

  int64_t modulus(int v) const {
    auto it = mod_.find(v);
    return it == mod_.end() ? 1 : it->second;
  }

  // Most constrained unassigned variable first.
  int pick_var() const {
    int best = -1;
    int64_t width = 0;
    for (int v : free_) {
      const int64_t w = m_.hi[v] - m_.lo[v];
      if (w == 0) continue;
      if (best < 0 || w < width) {
        best = v;
        width = w;
      }
    }
    if (best >= 0) return best;
    return -1;
  }

  int64_t align(int v, int64_t x) const {
    const int64_t g = modulus(v);
    const int64_t lo = m_.lo[v], hi = m_.hi[v];
    x = std::clamp(x, lo, hi);
    const int64_t up = (x + g - 1) / g * g;
    if (up <= hi) return up;
    const int64_t down = x / g * g;
    return down >= lo ? down : -1;
  }

  std::vector<int64_t> candidates(int v) {
    const int64_t lo = m_.lo[v], hi = m_.hi[v];
    std::vector<int64_t> out;
    const double base = std::pow(target_, 1.0 / std::max(1, order_[v]));
    for (int tries = 0; tries < 4 * kCandidatesPerVar && static_cast<int>(out.size()) < kCandidatesPerVar; ++tries) {
      int64_t x;
      if (hi - lo < 64) {
        x = rng_.uniform(lo, hi);
      } else {
        const double jitter = std::exp((rng_.unit() * 2.0 - 1.0) * std::log(2.0));
        x = static_cast<int64_t>(std::llround(base * jitter));
      }
      x = align(v, x);
      if (x >= 0 && std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    }
    return out;
  }

  bool globals_ok() {
    const auto& g = ctx_.g;
    const auto& b = ctx_.bounds;
    lo_shapes_.resize(g.edges.size());
    hi_shapes_.resize(g.edges.size());
    int64_t size = 0;
    for (size_t e = 0; e < g.edges.size(); ++e) {
      auto& l = lo_shapes_[e];
      auto& h = hi_shapes_[e];
      l.clear();
      h.clear();
      for (TermId t : m_.dims[e]) {
        const Interval i = m_.interval(t);
        l.push_back(std::clamp<int64_t>(i.lo, kMinDim, kMaxDim));
        h.push_back(std::clamp<int64_t>(i.hi, kMinDim, kMaxDim));
      }
      size = sat_add(size, numel(l));
    }
    if (size > b.max_size) {
      ++too_big;
      return false;
    }
    int64_t flo = 0, fhi = 0;
    std::vector<Shape> in_lo, in_hi;
    for (const auto& node : g.nodes) {
      in_lo.clear();
      in_hi.clear();
      for (EdgeId e : node.inputs) {
        in_lo.push_back(lo_shapes_[e]);
        in_hi.push_back(hi_shapes_[e]);
      }
      const auto model = ctx_.specs[node.node_id]->flop_model;
      const Attrs& at = m_.attrs[node.node_id];
      flo = sat_add(flo, flop_count(model, in_lo, lo_shapes_[node.output], at));
      fhi = sat_add(fhi, flop_count(model, in_hi, hi_shapes_[node.output], at));
    }
    if (flo > b.max_flops) {
      ++too_big;
      return false;
    }
    if (ctx_.floor_applies && fhi < b.min_flops) {
      ++too_small;
      return false;
    }
    return true;
  }

  bool dfs() {
    if (++nodes_ > kValueNodeBudget || ((nodes_ & 63) == 0 && ctx_.expired())) {
      cut = true;
      return false;
    }
    ++stats_.search_nodes;
    const int v = pick_var();
    if (v < 0) return leaf();
    const auto saved_lo = m_.lo, saved_hi = m_.hi;
    for (int64_t x : candidates(v)) {
      m_.lo[v] = m_.hi[v] = x;
      if (m_.propagate() && globals_ok() && dfs()) return true;
      m_.lo = saved_lo;
      m_.hi = saved_hi;
      if (cut) return false;
    }
    return false;
  }

  bool leaf() {
    ShapeSolution s;
    for (const auto& d : m_.dims) {
      Shape shape;
      for (TermId t : d) shape.push_back(m_.interval(t).lo);
      s.shapes.push_back(std::move(shape));
    }
    s.attrs = m_.attrs;
    compute_totals(s, ctx_.g, *ctx_.cs.catalog);
    if (!check(s, ctx_.cs).empty()) {
      ++stats_.check_rejections;
      return false;
    }
    result_ = std::move(s);
    return true;
  }

  const Context& ctx_;
  Model& m_;
  Rng& rng_;
  double target_;
  SolveStats& stats_;
  std::vector<int> order_;
  std::unordered_map<int, int64_t> mod_;
  std::vector<int> free_;
  std::vector<Shape> lo_shapes_, hi_shapes_;
  int64_t nodes_ = 0;
  ShapeSolution result_;
};

std::vector<Mask> initial_orders(const ConstraintSet& cs, OrderContext& octx) {
  const ProgramGraph& g = cs.graph;
  std::vector<Mask> dom(g.edges.size(), kAnyOrder);
  for (const auto& c : g.create_statements) {
    dom[c.edge] = kCreateOrders;
    octx.is_create[c.edge] = true;
  }
  for (const auto& [e, pin] : cs.pins) dom[e] &= pin.order >= 0 && pin.order <= kMaxOrder ? Mask(1u << pin.order) : 0;
  return dom;
}

OrderContext order_context(const ConstraintSet& cs) {
  OrderContext octx{cs.graph, {}, std::vector<bool>(cs.graph.edges.size(), false)};
  for (const auto& node : cs.graph.nodes) {
    const auto* spec = &cs.catalog->lookup(node.op);
    if (spec->constraint_kind == ConstraintKind::None) throw Error(ErrorCode::UnknownConstraintKind, node.op);
    octx.specs.push_back(spec);
  }
  return octx;
}

}  // namespace

bool orders_feasible(const ConstraintSet& cs) {
  if (!cs.catalog) throw Error(ErrorCode::InvalidArgument, "constraint set has no catalog");
  OrderContext octx = order_context(cs);
  std::vector<Mask> dom = initial_orders(cs, octx);
  return std::find(dom.begin(), dom.end(), Mask{0}) == dom.end() && propagate(octx, dom);
}

SolveResult solve(const ConstraintSet& cs, const SolverConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!cs.catalog) throw Error(ErrorCode::InvalidArgument, "constraint set has no catalog");
  const auto start = Clock::now();
  const ProgramGraph& g = cs.graph;

  Context ctx{cs, g, {}, cs.bounds, flop_floor_applies(g, *cs.catalog),
              start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.time_budget))};
  OrderContext octx = order_context(cs);
  ctx.specs = octx.specs;

  SolveResult result;
  auto finish = [&](SolveStatus status, std::string detail) {
    result.status = status;
    result.detail = std::move(detail);
    result.stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
  };

  std::vector<Mask> dom = initial_orders(cs, octx);
  if (std::find(dom.begin(), dom.end(), Mask{0}) != dom.end() || !propagate(octx, dom))
    return finish(SolveStatus::Infeasible, "no consistent tensor orders");

  std::vector<std::vector<int>> listed;
  int64_t steps = 0;
  enumerate_orders(octx, dom, 0, kEnumerateOrders, listed, steps);
  const bool exhaustive = listed.size() <= static_cast<size_t>(kEnumerateOrders) && steps <= 200000;
  if (exhaustive && listed.empty()) return finish(SolveStatus::Infeasible, "no consistent tensor orders");
  if (exhaustive) rng.shuffle(listed);

  const int64_t edges = std::max<int64_t>(1, static_cast<int64_t>(g.edges.size()));
  double target = std::clamp(static_cast<double>(cs.bounds.max_size) / (8.0 * static_cast<double>(edges)), 64.0,
                             static_cast<double>(int64_t{1} << 22));
  target *= std::exp(-rng.unit() * std::log(8.0));
  bool all_exact = true;
  std::string last_failure = "no structural assignment";

  const int max_restarts = exhaustive ? std::max(kMaxRestarts, static_cast<int>(listed.size())) : kMaxRestarts;
  for (int restart = 0; restart < max_restarts; ++restart) {
    if (ctx.expired()) return finish(SolveStatus::TimedOut, "time budget exhausted");
    std::vector<int> orders;
    if (exhaustive) {
      if (restart > 0 && restart % static_cast<int>(listed.size()) == 0 && all_exact)
        return finish(SolveStatus::Infeasible, last_failure);
      orders = listed[restart % listed.size()];
    } else {
      auto d = dom;
      int64_t order_steps = 0;
      const Found f = random_orders(octx, d, 0, rng, order_steps);
      if (f == Found::No) return finish(SolveStatus::Infeasible, "no consistent tensor orders");
      if (f == Found::Cut) {
        all_exact = false;
        continue;
      }
      orders = orders_of(d);
    }
    ++result.stats.restarts;

    Script script;
    int leaves = 0;
    bool exhausted = false;
    for (int replay = 0; replay < kReplaysPerRestart && leaves < kLeavesPerRestart; ++replay) {
      if (ctx.expired()) return finish(SolveStatus::TimedOut, "time budget exhausted");
      script.rewind();
      Model model;
      Structure structure(ctx, orders, script, rng);
      if (structure.run(model)) {
        ++leaves;
        ++result.stats.structural_leaves;
        for (int run = 0; run < kValueRunsPerLeaf; ++run) {
          Model trial = model;
          Values values(ctx, trial, rng, target, result.stats);
          if (auto sol = values.run()) {
            result.solution = std::move(sol);
            return finish(SolveStatus::Solved, "");
          }
          if (!values.exact()) all_exact = false;
          if (values.exact()) {
            last_failure = "global bounds violated";
            break;
          }
          if (values.too_small > values.too_big) target *= 4;
          else if (values.too_big > 0) target /= 4;
          target = std::clamp(target, 4.0, 0x1.0p40);
        }
      } else {
        last_failure = "structural conflict";
      }
      if (!script.advance(script.cursor())) {
        exhausted = true;
        break;
      }
    }
    if (!exhausted) all_exact = false;
  }
  if (exhaustive && all_exact) return finish(SolveStatus::Infeasible, last_failure);
  return finish(SolveStatus::TimedOut, "restart budget exhausted");
}

}  // namespace forge
