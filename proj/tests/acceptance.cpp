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
// One line per criterion; exit status is the number of failures.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "forge/catalog.hpp"
#include "forge/dataset.hpp"
#include "forge/emitter.hpp"
#include "forge/error.hpp"
#include "forge/fragments.hpp"
#include "forge/graph.hpp"
#include "forge/hash.hpp"
#include "forge/oracle.hpp"
#include "forge/reward.hpp"
#include "forge/solver.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("forge_acceptance_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tree_digest(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  Fnv1a h;
  for (const auto& [name, text] : files) h.str(name).str(text);
  return hex64(h.digest()) + " (" + std::to_string(files.size()) + " files)";
}

// Independent re-verification of one generated program.
std::string audit(const EmittedProgram& p, const SolverConfig& cfg) {
  const Catalog& catalog = Catalog::standard();
  const Manifest m = parse_manifest(serialize_manifest(p.manifest));
  const auto violations = check(m.solution, emit_constraints(m.graph, catalog, cfg));
  if (!violations.empty()) return "checker: " + violations[0].constraint + " " + violations[0].detail;
  const MatchReport oracle = verify_program(m.graph, m.solution, catalog);
  if (!oracle.ok) return "oracle: " + oracle.reason;
  for (const Shape& s : m.solution.shapes)
    for (int64_t d : s)
      if (d < 1 || d > 32768) return "dimension " + std::to_string(d) + " out of range";
  if (level_of(m.graph) != m.level) return "level mismatch";
  return {};
}

void validity() {
  const SolverConfig cfg;
  const struct {
    int level;
    BuildMode mode;
    int count;
  } runs[] = {{1, BuildMode::Chain, 1000}, {2, BuildMode::Chain, 1000}, {5, BuildMode::Chain, 1000}, {20, BuildMode::Dag, 200}};
  const auto t0 = std::chrono::steady_clock::now();
  int audited = 0, bad = 0, exhausted = 0;
  std::string first_problem, tally;
  for (const auto& run : runs) {
    const SliceSpec slice{run.level, run.mode, run.count, std::nullopt};
    int made = 0, first_try = 0;
    for (uint64_t slot = 0; made < run.count && slot < static_cast<uint64_t>(run.count) * 4; ++slot) {
      const auto g = generate_program(slice, derive_seed(2026, static_cast<uint64_t>(run.level), slot), cfg, {},
                                      "p" + std::to_string(slot));
      if (!g) {
        ++exhausted;
        continue;
      }
      ++made;
      if (g->attempts == 1) ++first_try;
      ++audited;
      const std::string problem = audit(g->program, cfg);
      if (!problem.empty()) {
        ++bad;
        if (first_problem.empty()) first_problem = g->program.manifest.program_id + " " + problem;
      }
    }
    if (made < run.count) {
      ++bad;
      if (first_problem.empty()) first_problem = "level " + std::to_string(run.level) + " produced only " + std::to_string(made);
    }
    tally += " L" + std::to_string(run.level) + "=" + std::to_string(made) + " (first-try " + std::to_string(first_try) + ")";
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d programs audited, %d invalid, %d exhausted slots, %.1f s;", audited, bad, exhausted,
                seconds_since(t0));
  report("validity", bad == 0, buf + tally + (first_problem.empty() ? "" : "; " + first_problem));
}

void solver_speed() {
  const Catalog& catalog = Catalog::standard();
  const SolverConfig cfg;
  std::vector<double> times;
  std::map<std::string, int> status;
  for (uint64_t seed = 0; times.size() < 50; ++seed) {
    const ProgramGraph g = build({20, BuildMode::Dag, std::nullopt, derive_seed(77, seed)}, catalog);
    const ConstraintSet cs = emit_constraints(g, catalog, cfg);
    if (!orders_feasible(cs)) continue;
    Rng rng(seed);
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = solve(cs, cfg, rng);
    times.push_back(seconds_since(t0));
    ++status[std::string(to_string(r.status))];
  }
  std::sort(times.begin(), times.end());
  const double median = (times[24] + times[25]) / 2;
  const double p95 = times[static_cast<size_t>(std::ceil(0.95 * 50)) - 1];
  std::string tally;
  for (const auto& [k, v] : status) tally += " " + k + "=" + std::to_string(v);
  char buf[160];
  std::snprintf(buf, sizeof buf, "median %.3f s, p95 %.3f s, max %.3f s over 50 level-20 solves;", median, p95,
                times.back());
  report("solver_speed", median <= 2.0 && p95 <= 5.0, buf + tally);
}

void coverage() {
  const fs::path dir = scratch("bench");
  GenerationOptions opts;
  opts.out_dir = dir.string();
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetManifest m = build_benchmark(2026, opts);
  std::map<std::string, int> per_op;
  for (const auto& op : Catalog::standard().compute_ops()) per_op[op.name] = 0;
  for (const auto& e : m.entries) {
    if (e.level != 1) continue;
    const Manifest man = parse_manifest(slurp(dir / "benchmark" / e.manifest_path));
    ++per_op[man.graph.nodes.at(0).op];
  }
  std::string missing;
  for (const auto& [op, n] : per_op)
    if (n < 2) missing += " " + op + "=" + std::to_string(n);
  const auto problems = verify_dataset((dir / "benchmark").string());
  fs::remove_all(dir);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu operators x 2 + 300 = %zu programs, %zu verify problems, %.1f s", per_op.size(),
                m.entries.size(), problems.size(), seconds_since(t0));
  report("operator_coverage", missing.empty() && problems.empty() && m.entries.size() == per_op.size() * 2 + 300,
         buf + (missing.empty() ? "" : std::string("; short:") + missing));
}

void fragments() {
  int mismatches = 0;
  bool ordered = true;
  for (int n = 1; n <= 2000; ++n) {
    size_t expected = 0;
    for (int l = 1; l <= std::min(5, n); ++l) expected += static_cast<size_t>(n - l + 1);
    expected = std::min<size_t>(expected, 1024);
    const FragmentPlan plan = extract(n);
    if (plan.size() != expected) ++mismatches;
    for (size_t i = 1; i < plan.size(); ++i)
      if (std::pair(plan[i - 1].len, plan[i - 1].start) >= std::pair(plan[i].len, plan[i].start)) ordered = false;
  }
  const FragmentPlan big = extract(300);
  const bool cap_ok = big.size() == 1024 && big[896] == Fragment{297, 3} && big[897] == Fragment{0, 4} &&
                      big.back() == Fragment{126, 4};
  const bool spots = extract(5).size() == 15 && extract(20).size() == 90;
  report("fragment_combinatorics", mismatches == 0 && ordered && cap_ok && spots,
         std::to_string(mismatches) + " mismatches over n in [1, 2000]; n=5->" + std::to_string(extract(5).size()) +
             ", n=20->" + std::to_string(extract(20).size()) + ", n=300->" + std::to_string(big.size()) +
             (cap_ok ? " (lengths 1-3 + 127 of length 4)" : " (cap order wrong)"));
}

void reward_math() {
  const RewardParams p;
  std::mt19937_64 gen(2026);
  std::uniform_real_distribution<double> score(-3, 0), time(0.8, 1.0);
  std::bernoulli_distribution coin(0.5);
  double worst = 0, weight_sum_err = 0;
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    RolloutGroup g{"q", {}};
    for (int i = 0; i < 8; ++i) g.outputs.push_back({score(gen), coin(gen), time(gen), time(gen)});
    const double kl = 0.02 * trial / 100.0;
    const auto grad = drpo_grad_s(g, kl, p);
    for (int i = 0; i < 8; ++i) {
      RolloutGroup up = g, down = g;
      up.outputs[i].s += h;
      down.outputs[i].s -= h;
      const double fd = (drpo_loss(up, kl, p) - drpo_loss(down, kl, p)) / (2 * h);
      const double scale = std::max(std::abs(fd), std::abs(grad[i]));
      if (scale > 0) worst = std::max(worst, std::abs(fd - grad[i]) / scale);
    }
    std::vector<double> rewards;
    for (const auto& o : g.outputs) rewards.push_back(speed_reward(o.t_torch, o.t_triton));
    weight_sum_err = std::max(weight_sum_err, std::abs(correct_weights(to_array(rewards), p.lambda).sum() - 1));
  }
  const auto adv = grpo_advantage(to_array({0, 0, 1, 1}));
  const bool adv_ok = adv.size() == 4 && adv[0] == -1 && adv[1] == -1 && adv[2] == 1 && adv[3] == 1;
  const RolloutGroup one{"q", {{-1, true, 1, 1}}};
  const double hinge = drpo_loss(one, p.delta, p) - drpo_loss(one, 0, p);
  char buf[200];
  std::snprintf(buf, sizeof buf, "fd max rel err %.2e, weight sum err %.1e, advantage (0,0,1,1)->(%g,%g,%g,%g), hinge at delta %g",
                worst, weight_sum_err, adv[0], adv[1], adv[2], adv[3], hinge);
  report("reward_math", worst <= 1e-6 && weight_sum_err <= 1e-12 && adv_ok && hinge == 0, buf);
}

void metrics() {
  const EvalMetrics m = eval_metrics({{true, 2.0}, {true, 0.5}});
  const bool ok = m.geomean_speedup && std::abs(*m.geomean_speedup - 1.0) <= 1e-12 && m.faster1 == 50.0;
  char buf[120];
  std::snprintf(buf, sizeof buf, "geomean %.15g, faster1 %g%%, acc %g%%", m.geomean_speedup.value_or(NAN), m.faster1,
                m.acc);
  report("metrics", ok, buf);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FORGE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism() {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "--seed 1234 generate --level 5 --count 25 --name det --out ";
  const int ca = run_cli(args + a.string());
  const int cb = run_cli(args + b.string());
  const std::string da = tree_digest(a), db = tree_digest(b);
  fs::remove_all(a);
  fs::remove_all(b);
  report("determinism", ca == 0 && cb == 0 && da == db,
         "exit " + std::to_string(ca) + "/" + std::to_string(cb) + ", trees " + da + " vs " + db);
}

void curriculum() {
  GenerationOptions opts;
  std::string detail;
  bool ok = true;
  const int expected[] = {200, 600, 200};
  for (int stage = 1; stage <= 3; ++stage) {
    const DatasetManifest m = build_stage(stage, 0.01, 2026, opts);
    const int want_level = stage_spec(stage).level;
    bool levels = true;
    for (const auto& e : m.entries) levels = levels && e.level == want_level;
    ok = ok && static_cast<int>(m.entries.size()) == expected[stage - 1] && levels &&
         m.hashes().size() == m.entries.size();
    detail += (stage > 1 ? " / " : "") + std::to_string(m.entries.size());
  }
  report("curriculum", ok, "stages 1/2/3 at scale 0.01: " + detail);
}

void broadcast_equivalence() {
  const Catalog& catalog = Catalog::standard();
  std::vector<Shape> shapes;
  for (int order = 1; order <= 3; ++order) {
    Shape s(static_cast<size_t>(order), 1);
    for (;;) {
      shapes.push_back(s);
      int i = order - 1;
      while (i >= 0 && s[i] == 3) s[i--] = 1;
      if (i < 0) break;
      ++s[i];
    }
  }
  std::vector<std::string> ops;
  for (const auto& op : catalog.compute_ops())
    if (op.category == OpCategory::ElementwiseBinary) ops.push_back(op.name);
  const SolverConfig cfg = SolverConfig::permissive();
  int cases = 0, mismatches = 0;
  std::string first;
  for (const auto& op : ops) {
    ProgramGraph g;
    g.create_statements = {{"Randn", 0}, {"Randn", 1}};
    Node n;
    n.op = op;
    n.inputs = {0, 1};
    n.output = 2;
    g.nodes.push_back(n);
    finalize(g, catalog);
    const ConstraintSet base = emit_constraints(g, catalog, cfg);
    for (const Shape& a : shapes)
      for (const Shape& b : shapes) {
        ConstraintSet cs = base;
        cs.pin_shape(0, a);
        cs.pin_shape(1, b);
        Rng rng(static_cast<uint64_t>(cases));
        const SolveResult r = solve(cs, cfg, rng);
        const auto expected = broadcast_shapes(a, b);
        bool agree = r.ok() == expected.has_value() && r.status != SolveStatus::TimedOut;
        if (agree && r.ok()) agree = r.solution->shapes[2] == *expected;
        ++cases;
        if (!agree) {
          ++mismatches;
          if (first.empty()) first = op + " " + to_string(a) + " " + to_string(b) + " solver " +
                                     std::string(to_string(r.status));
        }
      }
  }
  report("broadcast_equivalence", mismatches == 0 && !ops.empty(),
         std::to_string(cases) + " cases over " + std::to_string(ops.size()) + " binary elementwise ops, " +
             std::to_string(mismatches) + " mismatches" + (first.empty() ? "" : "; first: " + first));
}

}  // namespace

int main() {
  guarded("validity", validity);
  guarded("solver_speed", solver_speed);
  guarded("operator_coverage", coverage);
  guarded("fragment_combinatorics", fragments);
  guarded("reward_math", reward_math);
  guarded("metrics", metrics);
  guarded("determinism", determinism);
  guarded("curriculum", curriculum);
  guarded("broadcast_equivalence", broadcast_equivalence);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
