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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace forge {
namespace {

namespace fs = std::filesystem;
using testing::cat;
using testing::code_of;

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("forge_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

TEST(Dataset, StageComposition) {
  EXPECT_EQ(stage_spec(1).level, 1);
  EXPECT_EQ(stage_spec(1).count, 20000);
  EXPECT_EQ(stage_spec(2).level, 2);
  EXPECT_EQ(stage_spec(2).count, 60000);
  EXPECT_EQ(stage_spec(3).level, 5);
  EXPECT_EQ(stage_spec(3).count, 20000);
  EXPECT_EQ(code_of([] { stage_spec(4); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(scaled_count(20000, 0.01), 200);
  EXPECT_EQ(scaled_count(60000, 0.01), 600);
  EXPECT_EQ(scaled_count(20000, 0.001), 20);
  EXPECT_EQ(scaled_count(60000, 0.07), 4200);
  EXPECT_EQ(scaled_count(3, 0.5), 2);
  EXPECT_EQ(scaled_count(20000, 1.0), 20000);
  EXPECT_EQ(code_of([] { scaled_count(10, 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { scaled_count(10, 1.5); }), ErrorCode::InvalidArgument);
}

TEST(Dataset, StageWritesVerifiableTree) {
  TempDir dir;
  GenerationOptions opts;
  opts.out_dir = dir.path().string();
  const DatasetManifest m = build_stage(3, 0.001, 11, opts);
  ASSERT_EQ(m.entries.size(), 20u);
  EXPECT_EQ(m.hashes().size(), 20u);
  for (const auto& e : m.entries) {
    EXPECT_EQ(e.level, 5);
    EXPECT_TRUE(fs::exists(dir.path() / "stage3" / e.source_path));
    EXPECT_TRUE(fs::exists(dir.path() / "stage3" / e.manifest_path));
  }
  EXPECT_TRUE(verify_dataset((dir.path() / "stage3").string()).empty());
  EXPECT_EQ(load_dataset((dir.path() / "stage3").string()), m);
}

TEST(Dataset, DeterministicAcrossRunsAndJobs) {
  TempDir a, b;
  GenerationOptions opts;
  opts.out_dir = a.path().string();
  const DatasetManifest first = build_stage(2, 0.001, 5, opts);
  opts.out_dir = b.path().string();
  opts.jobs = 3;
  const DatasetManifest second = build_stage(2, 0.001, 5, opts);
  EXPECT_EQ(first, second);
  EXPECT_EQ(tree(a.path()), tree(b.path()));
  opts.out_dir.reset();
  EXPECT_NE(build_stage(2, 0.001, 6, opts).digest(), first.digest());
}

TEST(Dataset, ExclusionKeepsSetsDisjoint) {
  GenerationOptions opts;
  const std::vector<SliceSpec> slices{{1, BuildMode::Chain, 40, std::nullopt}};
  const DatasetManifest train = build_dataset("train", slices, 3, opts);
  opts.exclude = train.hashes();
  const DatasetManifest held = build_dataset("train", slices, 3, opts);
  ASSERT_EQ(held.entries.size(), 40u);
  for (const auto& h : held.hashes()) EXPECT_FALSE(train.hashes().count(h)) << h;
}

TEST(Dataset, BenchmarkSlicesCoverEveryOperator) {
  const auto slices = benchmark_slices();
  std::map<std::string, int> per_op;
  std::map<int, int> per_level;
  for (const auto& s : slices) {
    per_level[s.level] += s.count;
    EXPECT_EQ(s.mode, BuildMode::Dag);
    if (s.level == 1) {
      ASSERT_TRUE(s.op_subset);
      ASSERT_EQ(s.op_subset->size(), 1u);
      per_op[*s.op_subset->begin()] += s.count;
    }
  }
  EXPECT_EQ(per_op.size(), cat().compute_ops().size());
  for (const auto& [op, n] : per_op) EXPECT_EQ(n, 2) << op;
  EXPECT_EQ(per_level[2], 100);
  EXPECT_EQ(per_level[5], 100);
  EXPECT_EQ(per_level[20], 100);
}

TEST(Dataset, ExhaustionIsReported) {
  GenerationOptions opts;
  opts.solver = SolverConfig::permissive();
  opts.solver.max_size = 3;
  opts.solver.min_size_tensor = 1;
  EXPECT_EQ(code_of([&] { build_dataset("tiny", {{5, BuildMode::Chain, 4, std::nullopt}}, 1, opts); }),
            ErrorCode::GenerationExhausted);
  opts.solver.max_size = 2;
  EXPECT_EQ(code_of([&] { build_dataset("tiny", {{1, BuildMode::Dag, 1, std::set<std::string>{"Conv3d"}}}, 1, opts); }),
            ErrorCode::CoverageUnreachable);
}

TEST(Dataset, TamperingIsDetected) {
  TempDir dir;
  GenerationOptions opts;
  opts.out_dir = dir.path().string();
  const DatasetManifest m = build_dataset("t", {{2, BuildMode::Chain, 3, std::nullopt}}, 8, opts);
  const fs::path root = dir.path() / "t";
  ASSERT_TRUE(verify_dataset(root.string()).empty());

  const fs::path src = root / m.entries[0].source_path;
  const std::string original = slurp(src);
  std::ofstream(src, std::ios::binary) << original << "# edited\n";
  auto problems = verify_dataset(root.string());
  ASSERT_FALSE(problems.empty());
  for (const auto& p : problems) EXPECT_EQ(p.program_id, m.entries[0].program_id);
  std::ofstream(src, std::ios::binary) << original;

  const fs::path man = root / m.entries[1].manifest_path;
  auto j = nlohmann::json::parse(slurp(man));
  j["shapes"][0][0] = j["shapes"][0][0].get<int64_t>() + 1;
  std::ofstream(man, std::ios::binary) << j.dump(2) << "\n";
  problems = verify_dataset(root.string());
  ASSERT_FALSE(problems.empty());
  for (const auto& p : problems) EXPECT_EQ(p.program_id, m.entries[1].program_id);
}

TEST(Dataset, IndexRoundTrip) {
  GenerationOptions opts;
  const DatasetManifest m = build_dataset("r", {{1, BuildMode::Dag, 5, std::nullopt}}, 2, opts);
  EXPECT_EQ(dataset_from_json(to_json(m)), m);
  auto j = to_json(m);
  j["entries"][0]["seed"] = 12345;
  EXPECT_EQ(code_of([&] { dataset_from_json(j); }), ErrorCode::MalformedManifest);
}

}  // namespace
}  // namespace forge
