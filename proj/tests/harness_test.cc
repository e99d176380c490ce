// Copyright 2026 The dpaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "absl/strings/str_split.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "dpaudit/config.h"
#include "dpaudit/ensemble.h"
#include "dpaudit/experiment.h"
#include "dpaudit/model_io.h"

namespace dpaudit {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;

// Small enough to train in well under a second.
ExperimentConfig TinyConfig(const std::string& dir) {
  ExperimentConfig cfg;
  cfg.synthetic_dim = 8;
  cfg.synthetic_size = 24;
  cfg.iterations = 4;
  cfg.models_per_arm = 4;
  cfg.craft_steps = 5;
  cfg.output_dir = (fs::path(testing::TempDir()) / dir).string();
  fs::remove_all(cfg.output_dir);
  return cfg;
}

std::map<std::string, std::string> ReadTree(const std::string& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), root).string()] = *ReadFileBytes(e.path().string());
  }
  return out;
}

TEST(EnsembleTest, SplitAndNeighborMetadata) {
  ExperimentConfig cfg = TinyConfig("split");
  cfg.models_per_arm = 2;
  const EnsembleManifest m = *RunEnsemble(cfg);
  EXPECT_EQ(m.craft_per_arm, 1);
  EXPECT_EQ(m.neighbor_size, m.dataset_size + 1);
  for (Arm arm : {Arm::kWithout, Arm::kWith}) {
    EXPECT_EQ(SelectModels(m, arm, Split::kCraft).size(), 1u);
    EXPECT_EQ(SelectModels(m, arm, Split::kEval).size(), 1u);
  }
}

TEST(EnsembleTest, IndicesUniqueSeedsDistinctSplitsByIndex) {
  ExperimentConfig cfg = TinyConfig("unique");
  cfg.models_per_arm = 5;
  cfg.craft_fraction = 0.3;
  const EnsembleManifest m = *RunEnsemble(cfg);
  ASSERT_EQ(m.models.size(), 10u);
  EXPECT_EQ(m.craft_per_arm, CraftCount(5, 0.3));
  EXPECT_EQ(CraftCount(5, 0.3), 2);
  std::set<int64_t> indices;
  std::set<uint64_t> seeds;
  for (const ModelRecord& r : m.models) {
    indices.insert(r.index);
    seeds.insert(r.seed);
    EXPECT_EQ(r.split, r.arm_index < 2 ? Split::kCraft : Split::kEval);
    EXPECT_TRUE(r.ok);
  }
  EXPECT_EQ(indices.size(), 10u);
  EXPECT_EQ(seeds.size(), 10u);
}

TEST(EnsembleTest, ManifestRoundTrip) {
  const EnsembleManifest m = *RunEnsemble(TinyConfig("roundtrip"));
  const EnsembleManifest back = *ReadManifest(m.directory);
  EXPECT_EQ(FormatManifest(back), FormatManifest(m));
  EXPECT_FALSE(ParseManifest("models_per_arm = 2\n", "x").ok());
}

TEST(EnsembleTest, RerunsAndThreadCountsAreByteIdentical) {
  ExperimentConfig a = TinyConfig("det_a");
  ExperimentConfig b = TinyConfig("det_b");
  b.threads = 3;
  ASSERT_TRUE(RunEnsemble(a).ok());
  ASSERT_TRUE(RunEnsemble(b).ok());
  const auto tree_a = ReadTree(a.output_dir);
  EXPECT_EQ(tree_a, ReadTree(b.output_dir));
  ASSERT_TRUE(RunEnsemble(a).ok());
  EXPECT_EQ(tree_a, ReadTree(a.output_dir));
  EXPECT_EQ(tree_a.size(), 2u + 2 * 4);
}

TEST(RunAuditTest, CountsMatchEvalSplitAndOutputsExist) {
  ExperimentConfig cfg = TinyConfig("audit");
  cfg.models_per_arm = 6;
  const EnsembleManifest m = *RunEnsemble(cfg);
  for (const char* name : {"canary", "fisher"}) {
    const AuditOutcome o = *RunAudit(m, *SampleSource::Parse(name), cfg);
    EXPECT_EQ(o.report.n_without, 3);
    EXPECT_EQ(o.report.n_with, 3);
    EXPECT_EQ(o.craft.has_value(), std::string(name) != "canary");
    for (const char* prefix : {"audit_", "observations_", "histogram_", "sample_"}) {
      const std::string ext = std::string(prefix) == "audit_" ? ".txt"
                              : std::string(prefix) == "sample_" ? ".sample"
                                                                 : ".csv";
      EXPECT_TRUE(fs::exists(fs::path(m.directory) / (prefix + std::string(name) + ext)));
    }
    EXPECT_EQ(*ReadSampleFile((fs::path(m.directory) /
                               ("sample_" + std::string(name) + ".sample")).string()),
              o.sample);
  }
  cfg.eval_limit = 2;
  const AuditOutcome limited = *RunAudit(m, SampleSource::Canary(), cfg, false);
  EXPECT_EQ(limited.report.n_without, 2);
  EXPECT_EQ(limited.report.n_with, 2);
}

TEST(RunAuditTest, IdenticalArmsGiveZero) {
  ExperimentConfig cfg = TinyConfig("identical");
  EnsembleManifest m = *RunEnsemble(cfg);
  // Point every with-arm record at the matching without-arm model file.
  for (ModelRecord& r : m.models) {
    if (r.arm == Arm::kWith) {
      r.path = m.models[static_cast<size_t>(r.arm_index)].path;
    }
  }
  EXPECT_EQ(RunAudit(m, SampleSource::Canary(), cfg, false)->report.eps_emp, 0.0);
}

TEST(RunAuditTest, RefusesOverlappingOrEmptySplits) {
  ExperimentConfig cfg = TinyConfig("guards");
  const EnsembleManifest m = *RunEnsemble(cfg);
  EnsembleManifest overlap = m;
  ModelRecord dup = overlap.models[0];
  dup.split = Split::kEval;
  overlap.models.push_back(dup);
  EXPECT_EQ(RunAudit(overlap, SampleSource::Canary(), cfg, false).status().code(),
            absl::StatusCode::kInternal);

  EnsembleManifest failed = m;
  for (ModelRecord& r : failed.models) {
    if (r.arm == Arm::kWith && r.split == Split::kEval) r.ok = false;
  }
  EXPECT_EQ(RunAudit(failed, SampleSource::Canary(), cfg, false).status().code(),
            absl::StatusCode::kFailedPrecondition);
}

TEST(SampleSourceTest, Names) {
  for (const char* name : {"canary", "l2", "bhattacharyya", "fisher"}) {
    EXPECT_EQ(SampleSource::Parse(name)->Name(), name);
  }
  EXPECT_FALSE(SampleSource::Parse("blank").ok());
}

TEST(EmitReportTest, HeaderSortingSummariesAndHistograms) {
  std::vector<ReportRow> rows;
  for (uint64_t seed : {2, 0, 1}) {
    for (const char* obj : {"fisher", "canary"}) {
      ReportRow row{.objective = obj, .eps_target = 10, .seed = seed};
      row.report.n_without = 3;
      row.report.n_with = 2;
      row.report.eps_emp = static_cast<double>(seed);
      row.observations = {.without = {0.1, 0.5, 0.9}, .with = {0.2, 0.3}};
      rows.push_back(row);
    }
  }
  rows.push_back(ReportRow{.objective = "canary", .eps_target = 1, .seed = 0});
  const std::string dir = (fs::path(testing::TempDir()) / "emit").string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = dir + "/report.csv";
  ASSERT_TRUE(EmitReport(rows, path).ok());
  const std::vector<std::string> lines =
      absl::StrSplit(*ReadFileBytes(path), '\n', absl::SkipEmpty());
  EXPECT_EQ(lines[0],
            "objective,eps_target,N_eval,fpr_bar,fnr_bar,mu_emp,eps_emp,tau,"
            "direction,seed");
  EXPECT_THAT(lines[1], ::testing::StartsWith("canary,1,"));
  EXPECT_THAT(lines[2], ::testing::EndsWith(",0"));
  EXPECT_THAT(lines[3], ::testing::EndsWith(",1"));
  EXPECT_THAT(lines[4], ::testing::EndsWith(",2"));
  EXPECT_THAT(lines[5], ::testing::StartsWith("canary,10,5,"));
  EXPECT_THAT(lines[5], ::testing::EndsWith(",,mean"));
  EXPECT_THAT(lines[6], ::testing::EndsWith(",,std"));
  EXPECT_THAT(lines[7], ::testing::StartsWith("fisher,10,"));
  EXPECT_EQ(lines.size(), 12u);

  const std::string hist =
      *ReadFileBytes(dir + "/report_hist_fisher_eps10_seed1.csv");
  const std::vector<std::string> hlines = absl::StrSplit(hist, '\n', absl::SkipEmpty());
  EXPECT_EQ(hlines[0], "bin_lo,bin_hi,count_without,count_with");
  int64_t without = 0, with = 0;
  for (size_t i = 1; i < hlines.size(); ++i) {
    const std::vector<std::string> f = absl::StrSplit(hlines[i], ',');
    without += std::stoll(f[2]);
    with += std::stoll(f[3]);
  }
  EXPECT_EQ(without, 3);
  EXPECT_EQ(with, 2);

  EXPECT_FALSE(EmitReport(rows, "/nonexistent-dir/r.csv").ok());
  EXPECT_FALSE(EmitReport({}, path).ok());
}

TEST(RunExperimentTest, EndToEndIsReproducible) {
  ExperimentConfig cfg = TinyConfig("e2e_a");
  const std::vector<SampleSource> sources = {SampleSource::Canary(),
                                             SampleSource::Crafted(CraftObjective::kL2)};
  ASSERT_TRUE(RunExperiment(cfg, sources, 2).ok());
  ExperimentConfig again = TinyConfig("e2e_b");
  again.threads = 2;
  const std::vector<ReportRow> rows = *RunExperiment(again, sources, 2);
  EXPECT_EQ(rows.size(), 4u);
  EXPECT_EQ(ReadTree(cfg.output_dir), ReadTree(again.output_dir));
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(DPAUDIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(RunCli("calibrate --target_epsilon 10 --iterations 30"), 0);
  EXPECT_EQ(RunCli("calibrate --no_such_flag 1"), 1);
  EXPECT_EQ(RunCli("calibrate --delta 2"), 1);
  EXPECT_EQ(RunCli(""), 1);
  EXPECT_EQ(RunCli("audit --output_dir /nonexistent-dir/ens"), 2);
  const std::string dir = (fs::path(testing::TempDir()) / "cli").string();
  fs::remove_all(dir);
  const std::string flags = " --synthetic_dim 8 --synthetic_size 24 --iterations 3"
                            " --models_per_arm 4 --craft_steps 3 --output_dir " + dir;
  EXPECT_EQ(RunCli("train-ensemble" + flags), 0);
  EXPECT_EQ(RunCli("craft --objective fisher" + flags), 0);
  EXPECT_EQ(RunCli("audit --source fisher" + flags), 0);
  EXPECT_EQ(RunCli("audit --sample " + dir + "/sample_fisher.sample" + flags), 0);
  fs::copy_file(dir + "/sample_fisher.sample", dir + "/mine.sample");
  EXPECT_EQ(RunCli("audit --sample " + dir + "/mine.sample" + flags), 0);
  EXPECT_TRUE(fs::exists(dir + "/audit_mine.txt"));
  EXPECT_EQ(RunCli("report --inputs " + dir + " --out " + dir + "/r.csv"), 0);
  const std::string report = *ReadFileBytes(dir + "/r.csv");
  EXPECT_THAT(report, HasSubstr("\nfisher,"));
  EXPECT_THAT(report, HasSubstr("\nmine,"));
}

}  // namespace
}  // namespace dpaudit
