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

#include "forge/dataset.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/oracle.hpp"

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

StageSpec stage_spec(int stage) {
  switch (stage) {
    case 1: return {1, 1, 20000, BuildMode::Chain};
    case 2: return {2, 2, 60000, BuildMode::Chain};
    case 3: return {3, 5, 20000, BuildMode::Chain};
    default: throw Error(ErrorCode::InvalidArgument, "stage must be 1, 2 or 3, got " + std::to_string(stage));
  }
}

int scaled_count(int count, double scale) {
  if (!(scale > 0 && scale <= 1)) throw Error(ErrorCode::InvalidArgument, "scale must lie in (0, 1]");
  const double exact = scale * count;
  const int n = static_cast<int>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "scale leaves no programs");
  return n;
}

std::string program_hash(const ProgramGraph& g, const ShapeSolution& s) {
  Fnv1a h;
  h.u64(structural_hash(g));
  for (const auto& shape : s.shapes) {
    h.u64(shape.size());
    for (int64_t d : shape) h.i64(d);
  }
  for (const auto& a : s.attrs) h.str(json(a).dump());
  return hex64(h.digest());
}

std::string DatasetManifest::digest() const {
  Fnv1a h;
  h.str(name);
  h.u64(seed);
  h.str(spec.dump());
  for (const auto& e : entries) {
    h.str(e.program_id);
    h.i64(e.level);
    h.u64(e.seed);
    h.str(e.structural_hash);
    h.str(e.source_digest);
    h.str(e.manifest_digest);
    h.str(e.source_path);
    h.str(e.manifest_path);
  }
  return hex64(h.digest());
}

std::set<std::string> DatasetManifest::hashes() const {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.structural_hash);
  return out;
}

std::optional<GeneratedProgram> generate_program(const SliceSpec& slice, uint64_t slot_seed, const SolverConfig& cfg,
                                                 const std::set<std::string>& exclude, const std::string& program_id,
                                                 const Catalog& catalog, int first_attempt) {
  for (int attempt = first_attempt; attempt < kSlotRetries; ++attempt) {
    std::optional<ProgramGraph> graph;
    std::optional<ConstraintSet> cs;
    uint64_t graph_seed = 0;
    for (int draw = 0; draw < kOrderDraws && !graph; ++draw) {
      graph_seed = derive_seed(slot_seed, static_cast<uint64_t>(attempt), static_cast<uint64_t>(draw));
      BuildConfig bc{slice.level, slice.mode, slice.op_subset, graph_seed};
      ProgramGraph g = build(bc, catalog);
      ConstraintSet c = emit_constraints(g, catalog, cfg);
      if (orders_feasible(c)) {
        graph = std::move(g);
        cs = std::move(c);
      }
    }
    if (!graph) continue;
    Rng rng(derive_seed(graph_seed, 0x50u));
    const SolveResult r = solve(*cs, cfg, rng);
    if (!r.ok()) continue;
    if (!check(*r.solution, *cs).empty() || !verify_program(*graph, *r.solution, catalog).ok) continue;
    const std::string hash = program_hash(*graph, *r.solution);
    if (exclude.count(hash)) continue;
    GeneratedProgram out;
    out.program = emit(*graph, *r.solution, catalog, {program_id, graph_seed});
    out.hash = hash;
    out.seed = graph_seed;
    out.attempts = attempt + 1;
    return out;
  }
  return std::nullopt;
}

namespace {

json solver_json(const SolverConfig& c) {
  return {{"min_flops", c.min_flops},
          {"max_flops", c.max_flops},
          {"max_size", c.max_size},
          {"min_size_tensor", c.min_size_tensor},
          {"time_budget", c.time_budget}};
}

SolverConfig solver_from_json(const json& j) {
  SolverConfig c;
  c.min_flops = j.value("min_flops", c.min_flops);
  c.max_flops = j.value("max_flops", c.max_flops);
  c.max_size = j.value("max_size", c.max_size);
  c.min_size_tensor = j.value("min_size_tensor", c.min_size_tensor);
  c.time_budget = j.value("time_budget", c.time_budget);
  return c;
}

struct Slot {
  const SliceSpec* slice = nullptr;
  uint64_t seed = 0;
  std::string id;
  std::optional<GeneratedProgram> result;
};

std::string slice_label(const SliceSpec& s) {
  std::string l = "level " + std::to_string(s.level) + " " + std::string(to_string(s.mode));
  if (s.op_subset && s.op_subset->size() == 1) l += " op " + *s.op_subset->begin();
  return l;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
}

}  // namespace

DatasetManifest build_dataset(const std::string& name, const std::vector<SliceSpec>& slices, uint64_t seed,
                              const GenerationOptions& opts, const json& spec, const Catalog& catalog) {
  opts.solver.validate();
  std::vector<Slot> slots;
  for (const auto& s : slices) {
    if (s.count < 0) throw Error(ErrorCode::InvalidArgument, "negative slot count");
    for (int k = 0; k < s.count; ++k) {
      Slot slot;
      slot.slice = &s;
      slot.seed = derive_seed(seed, fnv1a(name), slots.size());
      char id[32];
      std::snprintf(id, sizeof id, "%06zu", slots.size());
      slot.id = name + "_" + id;
      slots.push_back(std::move(slot));
    }
  }

  // First pass: each slot independently, ignoring duplicates between slots.
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < slots.size(); i = next++)
      slots[i].result = generate_program(*slots[i].slice, slots[i].seed, opts.solver, opts.exclude, slots[i].id, catalog);
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(slots.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Second pass in slot order: a duplicate resumes its slot's retry sequence,
  // which is exactly what a sequential run would have done.
  std::set<std::string> seen = opts.exclude;
  DatasetManifest m;
  m.name = name;
  m.spec = spec;
  m.spec["solver"] = solver_json(opts.solver);
  m.seed = seed;
  for (size_t i = 0; i < slots.size(); ++i) {
    Slot& slot = slots[i];
    while (slot.result && seen.count(slot.result->hash)) {
      slot.result = generate_program(*slot.slice, slot.seed, opts.solver, seen, slot.id, catalog,
                                     slot.result->attempts);
    }
    if (!slot.result) {
      const SliceSpec& s = *slot.slice;
      const std::string where = "slot " + std::to_string(i) + " (" + slice_label(s) + ")";
      if (s.op_subset && s.op_subset->size() == 1)
        throw Error(ErrorCode::CoverageUnreachable, "operator " + *s.op_subset->begin() +
                                                        " has no feasible level-" + std::to_string(s.level) +
                                                        " program: " + where);
      throw Error(ErrorCode::GenerationExhausted, where + " failed after " + std::to_string(kSlotRetries) +
                                                      " attempts; " + std::to_string(m.entries.size()) + " of " +
                                                      std::to_string(slots.size()) + " programs completed");
    }
    seen.insert(slot.result->hash);
    const EmittedProgram& p = slot.result->program;
    const std::string manifest_text = serialize_manifest(p.manifest);
    const std::string level_dir = "level_" + std::to_string(slot.slice->level);
    DatasetEntry e;
    e.program_id = slot.id;
    e.level = slot.slice->level;
    e.seed = slot.result->seed;
    e.structural_hash = slot.result->hash;
    e.source_digest = hex64(fnv1a(p.source));
    e.manifest_digest = hex64(fnv1a(manifest_text));
    e.source_path = level_dir + "/program_" + slot.id + ".py";
    e.manifest_path = level_dir + "/program_" + slot.id + ".json";
    if (opts.out_dir) {
      const fs::path root = fs::path(*opts.out_dir) / name;
      fs::create_directories(root / level_dir);
      write_file(root / e.source_path, p.source);
      write_file(root / e.manifest_path, manifest_text);
    }
    m.entries.push_back(std::move(e));
  }
  if (opts.out_dir) write_file(fs::path(*opts.out_dir) / name / "index.json", to_json(m).dump(2) + "\n");
  return m;
}

DatasetManifest build_stage(int stage, double scale, uint64_t seed, const GenerationOptions& opts,
                            const Catalog& catalog) {
  const StageSpec s = stage_spec(stage);
  const int n = scaled_count(s.count, scale);
  const json spec = {{"kind", "stage"}, {"stage", stage}, {"level", s.level}, {"mode", to_string(s.mode)},
                     {"scale", scale}, {"count", n}};
  return build_dataset("stage" + std::to_string(stage), {{s.level, s.mode, n, std::nullopt}}, seed, opts, spec,
                       catalog);
}

std::vector<SliceSpec> benchmark_slices(const Catalog& catalog) {
  std::vector<SliceSpec> slices;
  for (const auto& op : catalog.compute_ops())
    slices.push_back({1, BuildMode::Dag, 2, std::set<std::string>{op.name}});
  for (int level : {2, 5, 20}) slices.push_back({level, BuildMode::Dag, 100, std::nullopt});
  return slices;
}

DatasetManifest build_benchmark(uint64_t seed, const GenerationOptions& opts, const Catalog& catalog) {
  const auto slices = benchmark_slices(catalog);
  int total = 0;
  for (const auto& s : slices) total += s.count;
  const json spec = {{"kind", "benchmark"},
                     {"level_1_per_operator", 2},
                     {"operators", catalog.compute_ops().size()},
                     {"levels", {{"2", 100}, {"5", 100}, {"20", 100}}},
                     {"mode", "dag"},
                     {"count", total}};
  return build_dataset("benchmark", slices, seed, opts, spec, catalog);
}

json to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries)
    entries.push_back({{"program_id", e.program_id},
                       {"level", e.level},
                       {"seed", e.seed},
                       {"structural_hash", e.structural_hash},
                       {"source_digest", e.source_digest},
                       {"manifest_digest", e.manifest_digest},
                       {"source", e.source_path},
                       {"manifest", e.manifest_path}});
  return {{"dataset", m.name}, {"spec", m.spec},       {"seed", m.seed},
          {"count", m.entries.size()}, {"digest", m.digest()}, {"entries", entries}};
}

DatasetManifest dataset_from_json(const json& j) {
  DatasetManifest m;
  try {
    m.name = j.at("dataset").get<std::string>();
    m.spec = j.at("spec");
    m.seed = j.at("seed").get<uint64_t>();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("program_id").get<std::string>(), e.at("level").get<int>(), e.at("seed").get<uint64_t>(),
                           e.at("structural_hash").get<std::string>(), e.at("source_digest").get<std::string>(),
                           e.at("manifest_digest").get<std::string>(), e.at("source").get<std::string>(),
                           e.at("manifest").get<std::string>()});
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedManifest, std::string("dataset index: ") + ex.what());
  }
  if (j.contains("digest") && j.at("digest") != m.digest())
    throw Error(ErrorCode::MalformedManifest, "dataset index digest does not match its entries");
  return m;
}

namespace {

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return std::nullopt;
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

DatasetManifest load_dataset(const std::string& dir) {
  const auto text = read_file(fs::path(dir) / "index.json");
  if (!text) throw Error(ErrorCode::MalformedManifest, "no index.json in " + dir);
  try {
    return dataset_from_json(json::parse(*text));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::MalformedManifest, std::string("index.json: ") + ex.what());
  }
}

std::vector<DatasetProblem> verify_dataset(const std::string& dir, const Catalog& catalog) {
  const DatasetManifest m = load_dataset(dir);
  const SolverConfig cfg = solver_from_json(m.spec.value("solver", json::object()));
  std::vector<DatasetProblem> problems;
  std::set<std::string> seen;
  for (const auto& e : m.entries) {
    auto fail = [&](std::string detail) { problems.push_back({e.program_id, std::move(detail)}); };
    if (!seen.insert(e.structural_hash).second) fail("duplicate structural hash");
    const auto source = read_file(fs::path(dir) / e.source_path);
    const auto manifest = read_file(fs::path(dir) / e.manifest_path);
    if (!source || !manifest) {
      fail("missing program files");
      continue;
    }
    if (hex64(fnv1a(*source)) != e.source_digest) fail("source digest mismatch");
    if (hex64(fnv1a(*manifest)) != e.manifest_digest) fail("manifest digest mismatch");
    try {
      const Manifest pm = parse_manifest(*manifest, catalog);
      if (pm.level != e.level) fail("level disagrees with the index");
      const ConstraintSet cs = emit_constraints(pm.graph, catalog, cfg);
      for (const auto& v : check(pm.solution, cs)) fail("constraint " + v.constraint + ": " + v.detail);
      const MatchReport r = verify_program(pm.graph, pm.solution, catalog);
      if (!r.ok) fail("oracle: " + r.reason);
      if (program_hash(pm.graph, pm.solution) != e.structural_hash) fail("structural hash mismatch");
      if (emit(pm.graph, pm.solution, catalog, {pm.program_id, pm.seed}).source != *source)
        fail("source differs from re-emission");
    } catch (const Error& ex) {
      fail(ex.what());
    }
  }
  return problems;
}

}  // namespace forge
