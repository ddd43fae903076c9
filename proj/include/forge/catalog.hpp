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

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "forge/rng.hpp"
#include "forge/shape.hpp"
#include "json.hpp"

namespace forge {

enum class OpCategory {
  Create,
  ElementwiseBinary,
  ElementwiseTernary,
  Reduction,
  Matrix,
  UnaryActivation,
  UnaryWithDim,
  UnaryMath,
  Cumulative,
  Normalization,
  Pool1d,
  Pool2d,
  Pool3d,
  Conv1d,
  Conv2d,
  Conv3d,
  ConvTranspose1d,
  ConvTranspose2d,
  ConvTranspose3d,
  Variadic,
};

/// Shape-rule family an operator is checked and solved under.
enum class ConstraintKind {
  None,  // create ops
  Broadcast,
  Reduce,
  DimPreserving,  // softmax family and cumulative ops: dim < n, shape kept
  Matmul,
  Bmm,
  Transpose,
  Triangular,
  Conv,
  ConvTranspose,
  Pool,
  Normalization,
  Unary,
  Cat,
  Stack,
};

enum class NormKind { None, Batch, Layer, Group, Instance };

enum class FlopModel { Zero, NumelOut, NumelIn, MatmulMNK, Conv, ConvTranspose, Pool };

struct AttrDescriptor {
  std::string name;
  std::string domain;  // human-readable, e.g. "[1, 4]" or "{1, 2, 4}"

  bool operator==(const AttrDescriptor&) const = default;
};

struct OperatorSpec {
  std::string name;
  std::string qualified_name;
  OpCategory category = OpCategory::Create;
  int arity = 0;  // fixed input count; kVariadic for "at least 2"
  std::vector<AttrDescriptor> attr_schema;
  ConstraintKind constraint_kind = ConstraintKind::None;
  FlopModel flop_model = FlopModel::Zero;
  int spatial_rank = 0;  // conv/pool m
  NormKind norm = NormKind::None;
  bool integer_output = false;  // argmax/argmin
  bool selects_values = false;  // call returns (values, indices); emit [0]

  static constexpr int kVariadic = -1;

  bool is_variadic() const { return arity == kVariadic; }
  bool operator==(const OperatorSpec&) const = default;
};

/// Attribute domains sampled by the solver.
inline constexpr int kMaxStride = 4;
inline constexpr int kMaxPadding = 3;
inline constexpr int kMaxDilation = 4;
inline constexpr int kMinKernel = 1;
inline constexpr int kMaxKernel = 7;
inline constexpr int kGroupChoices[] = {1, 2, 4};
inline constexpr int kMinVariadic = 2;
inline constexpr int kMaxVariadic = 4;

class Catalog {
 public:
  /// The full operator table: three create ops and every compute op.
  static const Catalog& standard();

  explicit Catalog(std::vector<OperatorSpec> specs);

  const std::vector<OperatorSpec>& compute_ops() const { return compute_; }
  const std::vector<OperatorSpec>& create_ops() const { return create_; }
  std::vector<OperatorSpec> all() const;

  const OperatorSpec& lookup(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// Uniform draw over `subset` (default: every compute op).
  const OperatorSpec& sample_compute(Rng& rng, const std::set<std::string>* subset = nullptr) const;
  const OperatorSpec& sample_create(Rng& rng, const std::set<std::string>* subset = nullptr) const;

  nlohmann::json to_json() const;
  static Catalog from_json(const nlohmann::json& j);

 private:
  std::vector<OperatorSpec> compute_;
  std::vector<OperatorSpec> create_;
  std::unordered_map<std::string, size_t> index_;  // name -> position in all()
};

/// Operation count under the documented per-family FLOP model. Validates the
/// shapes against the operator's arity and rank requirements.
int64_t flops_of(const OperatorSpec& spec, std::span<const Shape> in_shapes, const Shape& out_shape,
                 const Attrs& attrs);

/// Same model without shape validation. Monotone nondecreasing in every
/// dimension of every argument, which the solver relies on for bounds.
int64_t flop_count(FlopModel model, std::span<const Shape> in_shapes, const Shape& out_shape,
                   const Attrs& attrs);

std::string_view to_string(OpCategory c);
std::string_view to_string(ConstraintKind k);
std::string_view to_string(FlopModel m);
std::string_view to_string(NormKind k);
OpCategory category_from_string(std::string_view s);
ConstraintKind constraint_kind_from_string(std::string_view s);
FlopModel flop_model_from_string(std::string_view s);
NormKind norm_kind_from_string(std::string_view s);

}  // namespace forge
