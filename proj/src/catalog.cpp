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

#include "forge/catalog.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "forge/error.hpp"

namespace forge {
namespace {

using nlohmann::json;

const std::vector<AttrDescriptor> kReduceAttrs = {{"dim", "[0, n)"}, {"keepdim", "bool"}};
const std::vector<AttrDescriptor> kDimAttrs = {{"dim", "[0, n)"}};
const std::vector<AttrDescriptor> kConvAttrs = {{"kernel", "weight spatial dims in [1, 7]"},
                                                {"stride", "[1, 4]"},
                                                {"padding", "[0, 3], 2p <= max kernel"},
                                                {"dilation", "[1, 4]"},
                                                {"groups", "{1, 2, 4}"}};
const std::vector<AttrDescriptor> kPoolAttrs = {
    {"kernel", "[1, 7]"}, {"stride", "[1, 4]"}, {"padding", "[0, 3], 2p <= kernel"}};

OperatorSpec make(std::string name, std::string qualified, OpCategory cat, int arity, ConstraintKind kind,
                  FlopModel flops, std::vector<AttrDescriptor> attrs = {}) {
  OperatorSpec s;
  s.name = std::move(name);
  s.qualified_name = std::move(qualified);
  s.category = cat;
  s.arity = arity;
  s.constraint_kind = kind;
  s.flop_model = flops;
  s.attr_schema = std::move(attrs);
  return s;
}

std::vector<OperatorSpec> standard_specs() {
  using C = OpCategory;
  using K = ConstraintKind;
  using F = FlopModel;
  std::vector<OperatorSpec> v;

  for (auto [n, q] : {std::pair{"Randn", "torch.randn"}, {"Ones", "torch.ones"}, {"Zeros", "torch.zeros"}})
    v.push_back(make(n, q, C::Create, 0, K::None, F::Zero, {{"shape", "solved"}}));

  for (auto [n, q] : {std::pair{"Add", "torch.add"},
                      {"Mul", "torch.mul"},
                      {"Sub", "torch.sub"},
                      {"Div", "torch.div"},
                      {"Maximum", "torch.maximum"},
                      {"Minimum", "torch.minimum"}})
    v.push_back(make(n, q, C::ElementwiseBinary, 2, K::Broadcast, F::NumelOut));

  v.push_back(make("Lerp", "torch.lerp", C::ElementwiseTernary, 3, K::Broadcast, F::NumelOut,
                   {{"weight", "tensor input, broadcast"}}));

  for (auto [n, q] : {std::pair{"Max", "torch.max"},
                      {"Min", "torch.min"},
                      {"Sum", "torch.sum"},
                      {"Mean", "torch.mean"},
                      {"ArgMax", "torch.argmax"},
                      {"ArgMin", "torch.argmin"},
                      {"Var", "torch.var"},
                      {"Norm", "torch.norm"}}) {
    auto s = make(n, q, C::Reduction, 1, K::Reduce, F::NumelIn, kReduceAttrs);
    s.integer_output = (s.name == "ArgMax" || s.name == "ArgMin");
    s.selects_values = (s.name == "Max" || s.name == "Min");
    v.push_back(std::move(s));
  }

  v.push_back(make("Matmul", "torch.matmul", C::Matrix, 2, K::Matmul, F::MatmulMNK));
  v.push_back(make("Bmm", "torch.bmm", C::Matrix, 2, K::Bmm, F::MatmulMNK));
  v.push_back(make("Transpose", "torch.transpose", C::Matrix, 1, K::Transpose, F::Zero,
                   {{"dims", "last two"}}));
  v.push_back(make("Triu", "torch.triu", C::Matrix, 1, K::Triangular, F::Zero));
  v.push_back(make("Tril", "torch.tril", C::Matrix, 1, K::Triangular, F::Zero));

  for (auto [n, q] : {std::pair{"ReLU", "torch.relu"},
                      {"LeakyReLU", "torch.nn.functional.leaky_relu"},
                      {"Sigmoid", "torch.sigmoid"},
                      {"Tanh", "torch.tanh"},
                      {"Swish", "torch.nn.functional.silu"},
                      {"GELU", "torch.nn.functional.gelu"},
                      {"SELU", "torch.selu"},
                      {"ELU", "torch.nn.functional.elu"},
                      {"Hardsigmoid", "torch.nn.functional.hardsigmoid"},
                      {"HardTanh", "torch.nn.functional.hardtanh"},
                      {"Softplus", "torch.nn.functional.softplus"},
                      {"Softsign", "torch.nn.functional.softsign"},
                      {"LogSigmoid", "torch.nn.functional.logsigmoid"}})
    v.push_back(make(n, q, C::UnaryActivation, 1, K::Unary, F::NumelOut));
  v.push_back(make("Clamp", "torch.clamp", C::UnaryActivation, 1, K::Unary, F::NumelOut,
                   {{"min", "{-1.0, -0.5, 0.0}"}, {"max", "{0.5, 1.0, 2.0}"}}));

  v.push_back(make("Softmax", "torch.softmax", C::UnaryWithDim, 1, K::DimPreserving, F::NumelOut, kDimAttrs));
  v.push_back(
      make("LogSoftmax", "torch.log_softmax", C::UnaryWithDim, 1, K::DimPreserving, F::NumelOut, kDimAttrs));

  for (auto [n, q] : {std::pair{"Cos", "torch.cos"}, {"Sin", "torch.sin"}, {"Exp2", "torch.exp2"}, {"Abs", "torch.abs"}})
    v.push_back(make(n, q, C::UnaryMath, 1, K::Unary, F::NumelOut));

  for (auto [n, q] : {std::pair{"CumMax", "torch.cummax"}, {"CumMin", "torch.cummin"}, {"CumSum", "torch.cumsum"}}) {
    auto s = make(n, q, C::Cumulative, 1, K::DimPreserving, F::NumelIn, kDimAttrs);
    s.selects_values = (s.name != "CumSum");
    v.push_back(std::move(s));
  }

  const std::array norms = {std::tuple{"BatchNorm", "torch.nn.functional.batch_norm", NormKind::Batch},
                            std::tuple{"LayerNorm", "torch.nn.functional.layer_norm", NormKind::Layer},
                            std::tuple{"GroupNorm", "torch.nn.functional.group_norm", NormKind::Group},
                            std::tuple{"InstanceNorm", "torch.nn.functional.instance_norm", NormKind::Instance}};
  for (auto [n, q, kind] : norms) {
    std::vector<AttrDescriptor> attrs;
    if (kind == NormKind::Group) attrs = {{"num_groups", "{1, 2, 4}"}};
    if (kind == NormKind::Layer) attrs = {{"normalized_shape", "trailing dimension"}};
    auto s = make(n, q, C::Normalization, 1, K::Normalization, F::NumelOut, std::move(attrs));
    s.norm = kind;
    v.push_back(std::move(s));
  }

  const std::array pool_cats = {C::Pool1d, C::Pool2d, C::Pool3d};
  for (int m = 1; m <= 3; ++m) {
    for (auto [n, q] : {std::pair{"AvgPool", "torch.nn.functional.avg_pool"},
                        {"MaxPool", "torch.nn.functional.max_pool"}}) {
      auto s = make(std::string(n) + std::to_string(m) + "d", std::string(q) + std::to_string(m) + "d",
                    pool_cats[m - 1], 1, K::Pool, F::Pool, kPoolAttrs);
      s.spatial_rank = m;
      v.push_back(std::move(s));
    }
  }

  const std::array conv_cats = {C::Conv1d, C::Conv2d, C::Conv3d};
  for (int m = 1; m <= 3; ++m) {
    auto s = make("Conv" + std::to_string(m) + "d", "torch.nn.functional.conv" + std::to_string(m) + "d",
                  conv_cats[m - 1], 2, K::Conv, F::Conv, kConvAttrs);
    s.spatial_rank = m;
    v.push_back(std::move(s));
  }
  const std::array convt_cats = {C::ConvTranspose1d, C::ConvTranspose2d, C::ConvTranspose3d};
  for (int m = 1; m <= 3; ++m) {
    auto s = make("ConvTranspose" + std::to_string(m) + "d",
                  "torch.nn.functional.conv_transpose" + std::to_string(m) + "d", convt_cats[m - 1], 2,
                  K::ConvTranspose, F::ConvTranspose, kConvAttrs);
    s.spatial_rank = m;
    v.push_back(std::move(s));
  }

  v.push_back(make("Cat", "torch.cat", C::Variadic, OperatorSpec::kVariadic, K::Cat, F::Zero, kDimAttrs));
  v.push_back(
      make("Stack", "torch.stack", C::Variadic, OperatorSpec::kVariadic, K::Stack, F::Zero, {{"dim", "{0}"}}));
  return v;
}

template <typename E, size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, const char* what) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  throw Error(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename E, size_t N>
std::string_view enum_name(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table)
    if (v == e) return name;
  return "?";
}

constexpr std::array<std::pair<OpCategory, std::string_view>, 20> kCategoryNames = {{
    {OpCategory::Create, "Create"},
    {OpCategory::ElementwiseBinary, "ElementwiseBinary"},
    {OpCategory::ElementwiseTernary, "ElementwiseTernary"},
    {OpCategory::Reduction, "Reduction"},
    {OpCategory::Matrix, "Matrix"},
    {OpCategory::UnaryActivation, "UnaryActivation"},
    {OpCategory::UnaryWithDim, "UnaryWithDim"},
    {OpCategory::UnaryMath, "UnaryMath"},
    {OpCategory::Cumulative, "Cumulative"},
    {OpCategory::Normalization, "Normalization"},
    {OpCategory::Pool1d, "Pool1d"},
    {OpCategory::Pool2d, "Pool2d"},
    {OpCategory::Pool3d, "Pool3d"},
    {OpCategory::Conv1d, "Conv1d"},
    {OpCategory::Conv2d, "Conv2d"},
    {OpCategory::Conv3d, "Conv3d"},
    {OpCategory::ConvTranspose1d, "ConvTranspose1d"},
    {OpCategory::ConvTranspose2d, "ConvTranspose2d"},
    {OpCategory::ConvTranspose3d, "ConvTranspose3d"},
    {OpCategory::Variadic, "Variadic"},
}};

constexpr std::array<std::pair<ConstraintKind, std::string_view>, 15> kKindNames = {{
    {ConstraintKind::None, "None"},
    {ConstraintKind::Broadcast, "Broadcast"},
    {ConstraintKind::Reduce, "Reduce"},
    {ConstraintKind::DimPreserving, "DimPreserving"},
    {ConstraintKind::Matmul, "Matmul"},
    {ConstraintKind::Bmm, "Bmm"},
    {ConstraintKind::Transpose, "Transpose"},
    {ConstraintKind::Triangular, "Triangular"},
    {ConstraintKind::Conv, "Conv"},
    {ConstraintKind::ConvTranspose, "ConvTranspose"},
    {ConstraintKind::Pool, "Pool"},
    {ConstraintKind::Normalization, "Normalization"},
    {ConstraintKind::Unary, "Unary"},
    {ConstraintKind::Cat, "Cat"},
    {ConstraintKind::Stack, "Stack"},
}};

constexpr std::array<std::pair<FlopModel, std::string_view>, 7> kFlopNames = {{
    {FlopModel::Zero, "zero"},
    {FlopModel::NumelOut, "numel_out"},
    {FlopModel::NumelIn, "numel_in"},
    {FlopModel::MatmulMNK, "matmul_2bmnk"},
    {FlopModel::Conv, "conv_2_out_cin_k"},
    {FlopModel::ConvTranspose, "conv_transpose_2_in_cout_k"},
    {FlopModel::Pool, "pool_out_k"},
}};

constexpr std::array<std::pair<NormKind, std::string_view>, 5> kNormNames = {{
    {NormKind::None, "none"},
    {NormKind::Batch, "batch"},
    {NormKind::Layer, "layer"},
    {NormKind::Group, "group"},
    {NormKind::Instance, "instance"},
}};

int64_t product_from(const Shape& s, size_t first) {
  int64_t n = 1;
  for (size_t i = first; i < s.size(); ++i) n = sat_mul(n, s[i]);
  return n;
}

}  // namespace

std::string_view to_string(OpCategory c) { return enum_name(c, kCategoryNames); }
std::string_view to_string(ConstraintKind k) { return enum_name(k, kKindNames); }
std::string_view to_string(FlopModel m) { return enum_name(m, kFlopNames); }
std::string_view to_string(NormKind k) { return enum_name(k, kNormNames); }
OpCategory category_from_string(std::string_view s) { return parse_enum(s, kCategoryNames, "category"); }
ConstraintKind constraint_kind_from_string(std::string_view s) {
  try {
    return parse_enum(s, kKindNames, "constraint kind");
  } catch (const Error& e) {
    throw Error(ErrorCode::UnknownConstraintKind, std::string(s));
  }
}
FlopModel flop_model_from_string(std::string_view s) { return parse_enum(s, kFlopNames, "flop model"); }
NormKind norm_kind_from_string(std::string_view s) { return parse_enum(s, kNormNames, "norm kind"); }

Catalog::Catalog(std::vector<OperatorSpec> specs) {
  for (auto& s : specs) {
    if (index_.count(s.name)) throw Error(ErrorCode::InvalidArgument, "duplicate operator " + s.name);
    index_.emplace(s.name, index_.size());
    if (s.category == OpCategory::Create) {
      create_.push_back(std::move(s));
    } else {
      compute_.push_back(std::move(s));
    }
  }
}

const Catalog& Catalog::standard() {
  static const Catalog catalog(standard_specs());
  return catalog;
}

std::vector<OperatorSpec> Catalog::all() const {
  std::vector<OperatorSpec> out(index_.size());
  for (const auto& s : create_) out[index_.at(s.name)] = s;
  for (const auto& s : compute_) out[index_.at(s.name)] = s;
  return out;
}

bool Catalog::contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

const OperatorSpec& Catalog::lookup(std::string_view name) const {
  for (const auto& s : compute_)
    if (s.name == name) return s;
  for (const auto& s : create_)
    if (s.name == name) return s;
  throw Error(ErrorCode::NotFound, "operator '" + std::string(name) + "'");
}

namespace {

const OperatorSpec& sample_from(const std::vector<OperatorSpec>& pool, Rng& rng,
                                const std::set<std::string>* subset) {
  if (subset == nullptr) {
    if (pool.empty()) throw Error(ErrorCode::EmptySubset, "catalog has no operators of this class");
    return pool[rng.index(pool.size())];
  }
  if (subset->empty()) throw Error(ErrorCode::EmptySubset, "operator subset is empty");
  std::vector<const OperatorSpec*> chosen;
  for (const auto& name : *subset) {
    auto it = std::find_if(pool.begin(), pool.end(), [&](const OperatorSpec& s) { return s.name == name; });
    if (it == pool.end()) throw Error(ErrorCode::NotFound, "operator '" + name + "' in subset");
    chosen.push_back(&*it);
  }
  // std::set iterates in name order, so the draw is independent of insertion order.
  return *chosen[rng.index(chosen.size())];
}

}  // namespace

const OperatorSpec& Catalog::sample_compute(Rng& rng, const std::set<std::string>* subset) const {
  return sample_from(compute_, rng, subset);
}

const OperatorSpec& Catalog::sample_create(Rng& rng, const std::set<std::string>* subset) const {
  return sample_from(create_, rng, subset);
}

json Catalog::to_json() const {
  json ops = json::array();
  for (const auto& s : all()) {
    json attrs = json::array();
    for (const auto& a : s.attr_schema) attrs.push_back({{"name", a.name}, {"domain", a.domain}});
    ops.push_back({{"name", s.name},
                   {"qualified_name", s.qualified_name},
                   {"category", to_string(s.category)},
                   {"arity", s.is_variadic() ? json("at-least-2") : json(s.arity)},
                   {"attr_schema", attrs},
                   {"constraint_kind", to_string(s.constraint_kind)},
                   {"flop_model", to_string(s.flop_model)},
                   {"spatial_rank", s.spatial_rank},
                   {"norm", to_string(s.norm)},
                   {"integer_output", s.integer_output},
                   {"selects_values", s.selects_values}});
  }
  return {{"operators", ops}};
}

Catalog Catalog::from_json(const json& j) {
  std::vector<OperatorSpec> specs;
  for (const auto& o : j.at("operators")) {
    OperatorSpec s;
    s.name = o.at("name").get<std::string>();
    s.qualified_name = o.at("qualified_name").get<std::string>();
    s.category = category_from_string(o.at("category").get<std::string>());
    s.arity = o.at("arity").is_string() ? OperatorSpec::kVariadic : o.at("arity").get<int>();
    for (const auto& a : o.at("attr_schema"))
      s.attr_schema.push_back({a.at("name").get<std::string>(), a.at("domain").get<std::string>()});
    s.constraint_kind = constraint_kind_from_string(o.at("constraint_kind").get<std::string>());
    s.flop_model = flop_model_from_string(o.at("flop_model").get<std::string>());
    s.spatial_rank = o.value("spatial_rank", 0);
    s.norm = norm_kind_from_string(o.value("norm", "none"));
    s.integer_output = o.value("integer_output", false);
    s.selects_values = o.value("selects_values", false);
    specs.push_back(std::move(s));
  }
  return Catalog(std::move(specs));
}

int64_t flop_count(FlopModel model, std::span<const Shape> in, const Shape& out, const Attrs& attrs) {
  switch (model) {
    case FlopModel::Zero:
      return 0;
    case FlopModel::NumelOut:
      return numel(out);
    case FlopModel::NumelIn:
      return in.empty() ? 0 : numel(in[0]);
    case FlopModel::MatmulMNK: {
      if (in.empty() || in[0].empty() || out.size() < 2) return 0;
      const int64_t k = in[0].back();
      return sat_mul(2, sat_mul(numel(out), k));
    }
    case FlopModel::Conv: {
      // 2 * numel(out) * (C_in / g) * prod(k); the weight carries C_in / g.
      if (in.size() < 2 || in[1].size() < 2) return 0;
      return sat_mul(2, sat_mul(numel(out), product_from(in[1], 1)));
    }
    case FlopModel::ConvTranspose: {
      // Each input element scatters into (C_out / g) * prod(k) outputs.
      if (in.size() < 2 || in[1].size() < 2) return 0;
      return sat_mul(2, sat_mul(numel(in[0]), product_from(in[1], 1)));
    }
    case FlopModel::Pool: {
      const int64_t k = attrs.kernel.value_or(1);
      int64_t window = 1;
      const size_t m = out.size() >= 2 ? out.size() - 2 : 0;
      for (size_t i = 0; i < m; ++i) window = sat_mul(window, k);
      return sat_mul(numel(out), window);
    }
  }
  return 0;
}

int64_t flops_of(const OperatorSpec& spec, std::span<const Shape> in, const Shape& out, const Attrs& attrs) {
  auto mismatch = [&](const std::string& why) { return Error(ErrorCode::ShapeMismatch, spec.name + ": " + why); };
  if (spec.category == OpCategory::Create) return 0;
  if (spec.is_variadic()) {
    if (in.size() < kMinVariadic) throw mismatch("needs at least 2 inputs");
  } else if (static_cast<int>(in.size()) != spec.arity) {
    throw mismatch("expected " + std::to_string(spec.arity) + " inputs, got " + std::to_string(in.size()));
  }
  for (const auto& s : in)
    for (int64_t d : s)
      if (d < 1) throw mismatch("nonpositive dimension");
  for (int64_t d : out)
    if (d < 1) throw mismatch("nonpositive dimension");
  switch (spec.constraint_kind) {
    case ConstraintKind::Matmul:
    case ConstraintKind::Bmm:
      if (in[0].size() < 2 || in[1].size() < 2 || out.size() < 2) throw mismatch("matmul operands need order >= 2");
      if (in[0].back() != in[1][in[1].size() - 2]) throw mismatch("inner dimensions differ");
      break;
    case ConstraintKind::Conv:
    case ConstraintKind::ConvTranspose:
    case ConstraintKind::Pool: {
      const size_t want = static_cast<size_t>(spec.spatial_rank) + 2;
      if (in[0].size() != want || out.size() != want) throw mismatch("rank must be " + std::to_string(want));
      if (spec.constraint_kind != ConstraintKind::Pool && in[1].size() != want)
        throw mismatch("weight rank must be " + std::to_string(want));
      break;
    }
    default:
      break;
  }
  return flop_count(spec.flop_model, in, out, attrs);
}

}  // namespace forge
