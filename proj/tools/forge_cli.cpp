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

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "forge/dataset.hpp"
#include "forge/error.hpp"
#include "forge/fragments.hpp"
#include "forge/oracle.hpp"
#include "forge/reward.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace forge;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kInternal = 3 };

// Bad input the user can fix: a missing file or unparseable JSON.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool json_out = false;
  uint64_t seed = 0;
  SolverConfig solver;
  int jobs = 1;
};

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

void print(const Globals& g, const json& j, const std::string& human) {
  if (g.json_out) std::cout << j.dump(2) << "\n";
  else std::cout << human;
}

Manifest load_manifest(const std::string& path) { return parse_manifest(read_text(path)); }

// Program source beside a manifest, re-emitted when absent.
EmittedProgram load_program(const std::string& path) {
  const Manifest m = load_manifest(path);
  return emit(m.graph, m.solution, Catalog::standard(), {m.program_id, m.seed});
}

GenerationOptions generation_options(const Globals& g) {
  GenerationOptions o;
  o.solver = g.solver;
  o.jobs = g.jobs;
  return o;
}

std::string summary(const DatasetManifest& m, const std::string& dir) {
  return m.name + ": " + std::to_string(m.entries.size()) + " programs in " + dir + " (digest " + m.digest() + ")\n";
}

json dataset_json(const DatasetManifest& m, const std::string& dir) {
  return {{"dataset", m.name}, {"dir", dir}, {"count", m.entries.size()}, {"digest", m.digest()}};
}

int cmd_generate(const Globals& g, int level, int count, const std::string& mode, const std::string& out,
                 const std::string& name) {
  GenerationOptions o = generation_options(g);
  o.out_dir = out;
  const SliceSpec slice{level, build_mode_from_string(mode), count, std::nullopt};
  const json spec = {{"kind", "generate"}, {"level", level}, {"mode", mode}, {"count", count}};
  try {
    const DatasetManifest m = build_dataset(name, {slice}, g.seed, o, spec);
    const std::string dir = (fs::path(out) / name).string();
    print(g, dataset_json(m, dir), summary(m, dir));
    return kOk;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GenerationExhausted) throw;
    std::cerr << e.what() << "\n";
    print(g, {{"status", "generation_exhausted"}, {"detail", e.what()}}, "");
    return kFailed;
  }
}

int cmd_verify(const Globals& g, const std::vector<std::string>& paths) {
  json results = json::array();
  std::string human;
  bool all_ok = true;
  for (const auto& path : paths) {
    if (!fs::exists(path)) throw UsageError("no such file: " + path);
    json r = {{"path", path}};
    std::vector<std::string> problems;
    if (fs::is_directory(path)) {
      for (const auto& p : verify_dataset(path)) problems.push_back(p.program_id + ": " + p.detail);
    } else {
      try {
        const Manifest m = load_manifest(path);
        const ConstraintSet cs = emit_constraints(m.graph, Catalog::standard(), g.solver);
        for (const auto& v : check(m.solution, cs)) {
          std::string where = v.node >= 0 ? "node " + std::to_string(v.node) : "edge " + std::to_string(v.edge);
          if (v.node < 0 && v.edge < 0) where = "global";
          problems.push_back(where + " " + v.constraint + ": " + v.detail);
        }
        const MatchReport o = verify_program(m.graph, m.solution, Catalog::standard());
        if (!o.ok) problems.push_back("oracle: " + o.reason);
        const fs::path source = fs::path(path).replace_extension(".py");
        if (fs::exists(source) && o.ok &&
            emit(m.graph, m.solution, Catalog::standard(), {m.program_id, m.seed}).source != read_text(source.string()))
          problems.push_back("source differs from re-emission");
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    }
    r["status"] = problems.empty() ? "ok" : "failed";
    r["violations"] = problems;
    all_ok = all_ok && problems.empty();
    human += path + ": " + (problems.empty() ? "ok" : "FAILED") + "\n";
    for (const auto& p : problems) human += "  " + p + "\n";
    results.push_back(r);
  }
  print(g, {{"status", all_ok ? "ok" : "failed"}, {"results", results}}, human);
  return all_ok ? kOk : kFailed;
}

int cmd_oracle(const Globals& g, const std::string& path) {
  const Manifest m = load_manifest(path);
  std::vector<Shape> creates;
  for (const auto& c : m.graph.create_statements) creates.push_back(m.solution.shapes.at(c.edge));
  const ShapeReport r = infer(m.graph, creates, m.solution.attrs, Catalog::standard());
  std::string human;
  for (size_t e = 0; e < r.shapes.size(); ++e)
    human += tensor_name(static_cast<EdgeId>(e)) + ": " + (r.shapes[e] ? to_string(*r.shapes[e]) : "?") + "\n";
  if (!r.ok) human += "shape error at node " + std::to_string(r.error_node) + ": " + r.reason + "\n";
  print(g, to_json(r), human);
  return r.ok ? kOk : kFailed;
}

int cmd_fragments(const Globals& g, int n, const std::string& program, int cap, int max_len) {
  if (!program.empty()) n = level_of(load_manifest(program).graph);
  if (n < 1) throw UsageError("give --n >= 1 or a program manifest");
  const FragmentPlan plan = extract(n, max_len, static_cast<size_t>(cap));
  std::string human = "fragments: " + std::to_string(plan.size()) + "\n";
  for (const auto& f : plan) human += "  start " + std::to_string(f.start) + " len " + std::to_string(f.len) + "\n";
  json j = to_json(plan);
  j["n"] = n;
  print(g, j, human);
  return kOk;
}

int cmd_search(const Globals& g, const std::string& program, const std::string& cost) {
  const Bench bench = cost_model(cost);
  const SearchResult r = run_search(load_program(program), passthrough_generator(), always_verifier(), bench);
  std::string human;
  if (r.none_verified) {
    human = "no verified candidate\n";
  } else {
    human = "best fragment: start " + std::to_string(r.best->fragment.start) + " len " +
            std::to_string(r.best->fragment.len) + " cost " + std::to_string(*r.best->measured_time) + " (" +
            std::to_string(r.log.size()) + " candidates)\n\n" + r.hybrid;
  }
  print(g, to_json(r), human);
  return r.none_verified ? kFailed : kOk;
}

struct RewardFlags {
  std::string file;
  std::string loss = "all";
  std::optional<double> tau, lambda, beta, delta, alpha, kl;
  std::optional<std::string> f;
  double eps = 0.2;
  double beta_kl = 0.0;
};

int cmd_reward(const Globals& g, const RewardFlags& fl) {
  json in = read_json(fl.file);
  if (!in.is_object()) throw UsageError(fl.file + ": expected a JSON object");
  json& p = in["params"];
  if (p.is_null()) p = json::object();
  if (fl.tau) p["tau"] = *fl.tau;
  if (fl.lambda) p["lambda"] = *fl.lambda;
  if (fl.beta) p["beta"] = *fl.beta;
  if (fl.delta) p["delta"] = *fl.delta;
  if (fl.f) p["f"] = *fl.f;
  if (fl.alpha) p["alpha"] = *fl.alpha;
  if (fl.kl) in["kl"] = *fl.kl;
  if (!in.contains("groups")) in["groups"] = json::array();

  json out;
  try {
    const RewardParams rp = reward_params_from_json(p);
    out["params"] = {{"tau", rp.tau}, {"lambda", rp.lambda}, {"beta", rp.beta}, {"delta", rp.delta},
                     {"f", rp.f.kind == SpeedKind::Log ? "log" : "power"}, {"alpha", rp.f.alpha}};
    out["kl"] = in.value("kl", 0.0);
    const json report = reward_report(in);
    json groups = json::array();
    for (size_t i = 0; i < report["groups"].size(); ++i) {
      const json& r = report["groups"][i];
      json e = {{"query_id", r["query_id"]}};
      if (fl.loss == "drpo" || fl.loss == "all") {
        e["drpo_loss"] = r["drpo_loss"];
        e["drpo_grad_s"] = r["drpo_grad_s"];
      }
      if (fl.loss == "grpo" || fl.loss == "all") {
        e["grpo_rewards"] = r["grpo_rewards"];
        e["grpo_advantages"] = r["grpo_advantages"];
        const json& gj = in["groups"][i];
        if (gj.contains("token_ratios") && !r["grpo_advantages"].is_null()) {
          std::vector<Eigen::ArrayXd> ratios;
          for (const auto& t : gj["token_ratios"]) ratios.push_back(to_array(t.get<std::vector<double>>()));
          e["grpo_surrogate"] = grpo_surrogate(ratios, to_array(r["grpo_advantages"].get<std::vector<double>>()),
                                               fl.eps, fl.beta_kl, in.value("kl", 0.0));
        }
      }
      if (fl.loss == "sft" || fl.loss == "all") e["sft_loss"] = r["sft_loss"];
      groups.push_back(e);
    }
    out["groups"] = groups;
    if (fl.loss == "all") out["metrics"] = report["metrics"];
  } catch (const json::exception& e) {
    throw UsageError(fl.file + ": " + e.what());
  }
  print(g, out, out.dump(2) + "\n");
  return kOk;
}

int cmd_metrics(const Globals& g, const std::string& file) {
  const json in = read_json(file);
  std::vector<EvalRecord> records;
  try {
    for (const auto& r : in.is_array() ? in : in.at("records")) {
      EvalRecord e;
      e.correct = r.at("correct").get<bool>();
      if (r.contains("speedup") && !r["speedup"].is_null()) e.speedup = r["speedup"].get<double>();
      records.push_back(e);
    }
  } catch (const json::exception& e) {
    throw UsageError(file + ": " + e.what());
  }
  const EvalMetrics m = eval_metrics(records);
  std::ostringstream h;
  h << "acc " << m.acc << "%\nfaster1 " << m.faster1 << "%\ngeomean speedup ";
  if (m.geomean_speedup) h << *m.geomean_speedup << "\n";
  else h << "n/a\n";
  print(g, to_json(m), h.str());
  return kOk;
}

int cmd_dataset(const Globals& g, const std::string& kind, int stage, double scale, const std::string& out,
                const std::vector<std::string>& exclude) {
  GenerationOptions o = generation_options(g);
  o.out_dir = out;
  for (const auto& dir : exclude) {
    try {
      const auto h = load_dataset(dir).hashes();
      o.exclude.insert(h.begin(), h.end());
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const DatasetManifest m = kind == "stage" ? build_stage(stage, scale, g.seed, o) : build_benchmark(g.seed, o);
  const std::string dir = (fs::path(out) / m.name).string();
  print(g, dataset_json(m, dir), summary(m, dir));
  return kOk;
}

int cmd_bench_solver(const Globals& g, int level, int trials, const std::string& mode) {
  const Catalog& cat = Catalog::standard();
  std::vector<double> times;
  int solved = 0, infeasible = 0, timed_out = 0, screened = 0;
  for (int t = 0; t < trials; ++t) {
    const uint64_t slot = derive_seed(g.seed, 0xbe7c4u, static_cast<uint64_t>(t));
    std::optional<ConstraintSet> cs;
    uint64_t graph_seed = slot;
    for (int d = 0; d < kOrderDraws && !cs; ++d) {
      graph_seed = derive_seed(slot, 0, static_cast<uint64_t>(d));
      ConstraintSet c = emit_constraints(build({level, build_mode_from_string(mode), std::nullopt, graph_seed}, cat),
                                         cat, g.solver);
      if (orders_feasible(c)) cs = std::move(c);
      else ++screened;
    }
    if (!cs) continue;
    Rng rng(derive_seed(graph_seed, 0x50u));
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = solve(*cs, g.solver, rng);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (r.ok()) ++solved;
    else if (r.status == SolveStatus::Infeasible) ++infeasible;
    else ++timed_out;
  }
  std::sort(times.begin(), times.end());
  auto quantile = [&](double q) {
    if (times.empty()) return 0.0;
    return times[std::min(times.size() - 1, static_cast<size_t>(q * static_cast<double>(times.size())))];
  };
  const double median = quantile(0.5), p95 = quantile(0.95), max = times.empty() ? 0.0 : times.back();
  const json j = {{"level", level},        {"mode", mode},           {"trials", trials},
                  {"solved", solved},      {"infeasible", infeasible}, {"timed_out", timed_out},
                  {"order_screened", screened}, {"median_s", median}, {"p95_s", p95}, {"max_s", max}};
  std::ostringstream h;
  h << "level " << level << " " << mode << ": " << trials << " solves, " << solved << " solved, " << infeasible
    << " infeasible, " << timed_out << " timed out\nmedian " << median << " s, p95 " << p95 << " s, max " << max
    << " s\n";
  print(g, j, h.str());
  return kOk;
}

int cmd_catalog(const Globals& g) {
  const json j = Catalog::standard().to_json();
  std::string human;
  for (const auto& op : j["operators"])
    human += op["name"].get<std::string>() + "  " + op["qualified_name"].get<std::string>() + "  " +
             op["constraint_kind"].get<std::string>() + "\n";
  print(g, j, human);
  return kOk;
}

uint64_t env_seed() {
  const char* s = std::getenv("FORGE_SEED");
  if (!s || !*s) return 0;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == std::string(s).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("FORGE_SEED must be an unsigned integer");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic tensor-program generator: build, solve, verify, emit, and search"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Key = value configuration file (flags take precedence)");

  Globals g;
  std::optional<uint64_t> seed;
  app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");
  app.add_option("--seed", seed, "Random seed (default: FORGE_SEED or 0)");
  app.add_option("--min-flops", g.solver.min_flops, "Lower FLOP bound")->capture_default_str();
  app.add_option("--max-flops", g.solver.max_flops, "Upper FLOP bound")->capture_default_str();
  app.add_option("--max-size", g.solver.max_size, "Upper bound on total tensor elements")->capture_default_str();
  app.add_option("--min-size-tensor", g.solver.min_size_tensor, "Lower bound on each tensor's elements")
      ->capture_default_str();
  app.add_option("--time-budget", g.solver.time_budget, "Solver wall-clock budget in seconds")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel generation workers")->check(CLI::PositiveNumber)->capture_default_str();

  int level = 1, count = 1, trials = 10, n = 0, cap = static_cast<int>(kMaxFragments), max_len = kMaxFragmentLength,
      stage = 1;
  std::string mode = "dag", out = "data", name = "generated", program, cost = "statements";
  double scale = 1.0;
  std::vector<std::string> paths, exclude;
  RewardFlags rf;
  std::string metrics_file;

  auto* gen = app.add_subcommand("generate", "Generate verified programs into OUT/NAME");
  gen->add_option("--level", level, "Compute operators per program")->check(CLI::PositiveNumber);
  gen->add_option("--count", count, "Number of programs")->check(CLI::PositiveNumber);
  gen->add_option("--mode", mode, "Graph mode")->check(CLI::IsMember({"dag", "chain"}));
  gen->add_option("--out", out, "Output directory");
  gen->add_option("--name", name, "Dataset name");

  auto* ver = app.add_subcommand("verify", "Re-check program manifests or dataset directories");
  ver->add_option("paths", paths, "Manifest files or dataset directories")->required();

  auto* orc = app.add_subcommand("oracle", "Infer every tensor shape of a program with the shape oracle");
  orc->add_option("manifest", program, "Program manifest")->required();

  auto* frag = app.add_subcommand("fragments", "Print the fragment plan");
  frag->add_option("--n", n, "Operator count")->check(CLI::PositiveNumber);
  frag->add_option("program", program, "Program manifest (instead of --n)");
  frag->add_option("--cap", cap, "Maximum fragments")->check(CLI::NonNegativeNumber);
  frag->add_option("--max-len", max_len, "Maximum fragment length")->check(CLI::PositiveNumber);

  auto* search = app.add_subcommand("search", "Fragment search with the pass-through generator");
  search->add_option("manifest", program, "Program manifest")->required();
  search->add_option("--cost", cost, "Cost model")->check(CLI::IsMember({"statements", "unit"}));

  auto* rew = app.add_subcommand("reward", "Evaluate training objectives on a rollout file");
  rew->add_option("--file", rf.file, "Rollout JSON")->required();
  rew->add_option("--loss", rf.loss, "Objective")->check(CLI::IsMember({"drpo", "grpo", "sft", "all"}));
  rew->add_option("--tau", rf.tau);
  rew->add_option("--lambda", rf.lambda);
  rew->add_option("--beta", rf.beta);
  rew->add_option("--delta", rf.delta);
  rew->add_option("--f", rf.f)->check(CLI::IsMember({"log", "power"}));
  rew->add_option("--alpha", rf.alpha);
  rew->add_option("--kl", rf.kl);
  rew->add_option("--eps", rf.eps, "Clip range for the GRPO surrogate");
  rew->add_option("--beta-kl", rf.beta_kl, "KL scale for the GRPO surrogate");

  auto* met = app.add_subcommand("metrics", "Accuracy, Faster1 and geometric-mean speedup");
  met->add_option("--file", metrics_file, "Records JSON")->required();

  auto* ds = app.add_subcommand("dataset", "Build curriculum stages or the benchmark");
  ds->require_subcommand(1);
  auto* ds_stage = ds->add_subcommand("stage", "One curriculum stage");
  ds_stage->add_option("--stage", stage, "Stage 1, 2 or 3")->check(CLI::Range(1, 3));
  ds_stage->add_option("--scale", scale, "Fraction of the full stage size")->check(CLI::Range(0.0, 1.0));
  ds_stage->add_option("--out", out, "Output directory");
  auto* ds_bench = ds->add_subcommand("benchmark", "Held-out benchmark");
  ds_bench->add_option("--out", out, "Output directory");
  ds_bench->add_option("--exclude", exclude, "Training dataset directories whose programs must not appear");

  auto* bench = app.add_subcommand("bench-solver", "Solver wall-time statistics");
  bench->add_option("--level", level, "Compute operators per program")->check(CLI::PositiveNumber);
  bench->add_option("--trials", trials, "Number of solves")->check(CLI::PositiveNumber);
  bench->add_option("--mode", mode, "Graph mode")->check(CLI::IsMember({"dag", "chain"}));

  auto* cat = app.add_subcommand("catalog", "Print the operator catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    g.seed = seed ? *seed : env_seed();
    g.solver.validate();
    if (*gen) return cmd_generate(g, level, count, mode, out, name);
    if (*ver) return cmd_verify(g, paths);
    if (*orc) return cmd_oracle(g, program);
    if (*frag) return cmd_fragments(g, n, program, cap, max_len);
    if (*search) return cmd_search(g, program, cost);
    if (*rew) return cmd_reward(g, rf);
    if (*met) return cmd_metrics(g, metrics_file);
    if (*ds_stage) return cmd_dataset(g, "stage", stage, scale, out, {});
    if (*ds_bench) return cmd_dataset(g, "benchmark", stage, scale, out, exclude);
    if (*bench) return cmd_bench_solver(g, level, trials, mode);
    if (*cat) return cmd_catalog(g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::MalformedManifest:
      case ErrorCode::MalformedSource:
      case ErrorCode::EmptySubset:
      case ErrorCode::NotFound:
        return kUsage;
      case ErrorCode::GenerationExhausted:
      case ErrorCode::CoverageUnreachable:
      case ErrorCode::UnverifiedSolution:
      case ErrorCode::NoneVerified:
        return kFailed;
      default:
        return kUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
