// Copyright 2026 The MASP Authors. All rights reserved.
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

#include "cli.h"

#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "test_util.h"

namespace masp {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kDesk = MASP_SOURCE_DIR "/configs/gridmaze_desk.toml";

std::vector<std::string> SmallTrain(const fs::path& out, const std::string& strategy,
                                    const std::string& seeds = "1") {
  return {"train", "--config", kDesk, "--strategy", strategy, "--seeds", seeds,
          "--total-episodes", "64", "--batch-size", "8", "--out", out.string(),
          "--quiet"};
}

TEST(CliTest, NoArgumentsIsUsageError) {
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"frobnicate"}).code, kExitUsage);
}

TEST(CliTest, MissingConfigWritesNothing) {
  const fs::path out = testing::TempDir("cli_missing");
  const Result r = Invoke({"train", "--config", "/nonexistent.toml", "--out",
                        out.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_TRUE(fs::is_empty(out));
}

TEST(CliTest, BadOverrideIsUsageError) {
  const fs::path out = testing::TempDir("cli_override");
  EXPECT_EQ(Invoke({"train", "--config", kDesk, "--set", "training.nope=1", "--out",
                 out.string()})
                .code,
            kExitUsage);
  EXPECT_EQ(Invoke({"train", "--config", kDesk, "--set", "training.lr=0", "--out",
                 out.string()})
                .code,
            kExitUsage);
  EXPECT_TRUE(fs::is_empty(out));
}

TEST(CliTest, SmokeTrainWithinBudget) {
  const fs::path out = testing::TempDir("cli_smoke");
  const auto start = std::chrono::steady_clock::now();
  const Result r = Invoke({"train", "--config", kDesk, "--strategy",
                        "memory_selfplay", "--seeds", "1", "--total-episodes",
                        "2000", "--batch-size", "8", "--out", out.string(),
                        "--quiet"});
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(secs, 60.0);
  const fs::path run = out / "gridmaze_memory_selfplay_seed1";
  for (const char* f : {"metrics.csv", "segments.csv", "checkpoint.ckpt",
                        "config.echo"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const std::string metrics = testing::ReadFile(run / "metrics.csv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 2001);
}

TEST(CliTest, ResumeFinishedAndCorrupt) {
  const fs::path out = testing::TempDir("cli_resume");
  ASSERT_EQ(Invoke(SmallTrain(out, "selfplay")).code, kExitOk);
  const fs::path ckpt = out / "gridmaze_selfplay_seed1" / "checkpoint.ckpt";
  const std::string before = testing::ReadFile(ckpt.parent_path() / "metrics.csv");
  EXPECT_EQ(Invoke({"resume", ckpt.string(), "--quiet"}).code, kExitOk);
  EXPECT_EQ(testing::ReadFile(ckpt.parent_path() / "metrics.csv"), before);

  std::string bytes = testing::ReadFile(ckpt);
  testing::WriteFile(ckpt, bytes.substr(0, bytes.size() / 2));
  const Result r = Invoke({"resume", ckpt.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("at byte"), std::string::npos) << r.err;
  EXPECT_EQ(Invoke({"resume", (out / "absent.ckpt").string()}).code, kExitUsage);
}

TEST(CliTest, AnalyzeEmptyDirectory) {
  const fs::path empty = testing::TempDir("cli_analyze_empty");
  EXPECT_EQ(Invoke({"analyze", "--kind", "curves", empty.string()}).code, kExitUsage);
  EXPECT_EQ(Invoke({"analyze", "--kind", "pca", empty.string()}).code, kExitUsage);
}

TEST(CliTest, AnalyzeCurvesAndPca) {
  const fs::path runs = testing::TempDir("cli_analyze_runs");
  ASSERT_EQ(Invoke(SmallTrain(runs, "selfplay", "1,2")).code, kExitOk);
  ASSERT_EQ(Invoke(SmallTrain(runs, "memory_selfplay", "1,2")).code, kExitOk);
  ASSERT_EQ(Invoke(SmallTrain(runs, "none", "1")).code, kExitOk);
  const fs::path analysis = testing::TempDir("cli_analysis_out");

  Result r = Invoke({"analyze", "--kind", "curves", runs.string(), "--out",
                  analysis.string(), "--table-every", "16"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("episodes,"), std::string::npos);
  const std::string agg = testing::ReadFile(analysis / "aggregate.csv");
  EXPECT_EQ(agg.rfind("episode,strategy,mean,std,n_seeds\n", 0), 0u);
  EXPECT_TRUE(fs::exists(analysis / "summary.csv"));

  r = Invoke({"analyze", "--kind", "pca", runs.string(), "--out",
           analysis.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("distance_ratio="), std::string::npos);
  EXPECT_EQ(testing::ReadFile(analysis / "pca_segments.csv")
                .rfind("x0,y0,x1,y1,strategy,seed\n", 0),
            0u);
  EXPECT_EQ(testing::ReadFile(analysis / "segment_distances.csv")
                .rfind("strategy,seed,mean_segment_distance\n", 0),
            0u);
}

TEST(CliTest, SameSeedTwiceGivesIdenticalMetrics) {
  const fs::path a = testing::TempDir("cli_det_a"), b = testing::TempDir("cli_det_b");
  ASSERT_EQ(Invoke(SmallTrain(a, "memory_selfplay", "7")).code, kExitOk);
  ASSERT_EQ(Invoke(SmallTrain(b, "memory_selfplay", "7")).code, kExitOk);
  const char* run = "gridmaze_memory_selfplay_seed7/metrics.csv";
  EXPECT_EQ(testing::ReadFile(a / run), testing::ReadFile(b / run));
}

TEST(CliTest, ParallelSeedsMatchSerial) {
  const fs::path a = testing::TempDir("cli_par_a"), b = testing::TempDir("cli_par_b");
  auto args = SmallTrain(a, "selfplay", "1,2,3");
  ASSERT_EQ(Invoke(args).code, kExitOk);
  args = SmallTrain(b, "selfplay", "1,2,3");
  args.push_back("--parallel-seeds");
  args.push_back("3");
  ASSERT_EQ(Invoke(args).code, kExitOk);
  for (int s = 1; s <= 3; ++s) {
    const std::string run =
        "gridmaze_selfplay_seed" + std::to_string(s) + "/metrics.csv";
    EXPECT_EQ(testing::ReadFile(a / run), testing::ReadFile(b / run)) << run;
  }
}

}  // namespace
}  // namespace masp
