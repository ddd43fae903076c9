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

#include <cstdio>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/shape.hpp"

namespace forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::AritySubsetConflict: return "AritySubsetConflict";
    case ErrorCode::UnknownConstraintKind: return "UnknownConstraintKind";
    case ErrorCode::IncompleteSolution: return "IncompleteSolution";
    case ErrorCode::UnverifiedSolution: return "UnverifiedSolution";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::FragmentOutOfRange: return "FragmentOutOfRange";
    case ErrorCode::BindingMismatch: return "BindingMismatch";
    case ErrorCode::NoneVerified: return "NoneVerified";
    case ErrorCode::MalformedSource: return "MalformedSource";
    case ErrorCode::NonpositiveTime: return "NonpositiveTime";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::CoverageUnreachable: return "CoverageUnreachable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string to_string(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  if (s.size() == 1) out += ",";
  return out + ")";
}

void to_json(nlohmann::json& j, const Attrs& a) {
  j = nlohmann::json::object();
  if (a.dim) j["dim"] = *a.dim;
  if (a.keepdim) j["keepdim"] = *a.keepdim;
  if (a.stride) j["stride"] = *a.stride;
  if (a.padding) j["padding"] = *a.padding;
  if (a.dilation) j["dilation"] = *a.dilation;
  if (a.groups) j["groups"] = *a.groups;
  if (a.kernel) j["kernel"] = *a.kernel;
  if (a.num_groups) j["num_groups"] = *a.num_groups;
  if (a.min_value) j["min"] = *a.min_value;
  if (a.max_value) j["max"] = *a.max_value;
}

void from_json(const nlohmann::json& j, Attrs& a) {
  a = Attrs{};
  if (!j.is_object()) throw Error(ErrorCode::MalformedManifest, "attrs must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "dim") a.dim = it->get<int>();
    else if (k == "keepdim") a.keepdim = it->get<bool>();
    else if (k == "stride") a.stride = it->get<int>();
    else if (k == "padding") a.padding = it->get<int>();
    else if (k == "dilation") a.dilation = it->get<int>();
    else if (k == "groups") a.groups = it->get<int>();
    else if (k == "kernel") a.kernel = it->get<int>();
    else if (k == "num_groups") a.num_groups = it->get<int>();
    else if (k == "min") a.min_value = it->get<double>();
    else if (k == "max") a.max_value = it->get<double>();
    else throw Error(ErrorCode::MalformedManifest, "unknown attribute '" + k + "'");
  }
}

}  // namespace forge
