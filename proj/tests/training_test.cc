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

#include "masp/training.h"

#include <gtest/gtest.h>

#include <cmath>

#include "masp/errors.h"
#include "masp/rng.h"
#include "test_util.h"

namespace masp {
namespace {

using testing::RandomVec;
using testing::ReadFile;

EnvConfig SmallMaze() {
  EnvConfig cfg = EnvConfig::GridMazeDefaults();
  cfg.width = 4;
  cfg.height = 4;
  cfg.max_steps_target = 6;
  cfg.max_steps_selfplay = 8;
  return cfg;
}

TrainConfig SmallRun(Strategy strategy) {
  TrainConfig c = TrainConfig::Defaults(EnvKind::kGridMaze);
  c.env = SmallMaze();
  c.env.width = 5;
  c.env.height = 5;
  c.env.max_steps_target = 20;
  c.env.max_steps_selfplay = 30;
  c.strategy = strategy;
  c.alice_feature_dim = 8;
  c.alice_memory_feature_dim = 8;
  c.bob_feature_dim = 8;
  c.memory.memory_dim = 6;
  c.batch_size = 4;
  c.interleave_n = 2;
  c.total_episodes = 40;
  c.avg_window = 5;
  c.entropy_coef = 0.01;
  return c;
}

// Trajectories with random rewards so that every loss term is active.
std::vector<Trajectory> BobBatch(const Agent& bob, Rng& rng) {
  auto env = MakeEnvironment(SmallMaze());
  std::vector<Trajectory> batch;
  for (int i = 0; i < 3; ++i) {
    Trajectory t = RunTargetEpisode(bob, *env, rng, i);
    t.rewards = RandomVec(rng, t.size());
    batch.push_back(std::move(t));
  }
  return batch;
}

std::vector<Trajectory> AliceBatch(const Agent& alice, const Agent& bob,
                                   EpisodeMemory* memory, Rng& rng) {
  auto env = MakeEnvironment(SmallMaze());
  std::vector<Trajectory> batch;
  for (int i = 0; i < 4; ++i) {
    SelfPlayEpisode ep =
        RunSelfPlayEpisode(alice, bob, *env, memory, rng, {8, 0.1}, i);
    ep.alice.rewards = RandomVec(rng, ep.alice.size());
    batch.push_back(std::move(ep.alice));
  }
  return batch;
}

double LossGradError(Agent& agent, const std::vector<Trajectory>& batch) {
  const LossConfig cfg{0.5, 0.05};
  const std::vector<Vec> adv = ComputeAdvantages(agent, batch);
  Agent grads = agent.ZeroLike();
  ReinforceLoss(agent, batch, cfg, &adv, &grads);
  auto loss = [&] { return ReinforceLoss(agent, batch, cfg, &adv, nullptr); };
  return GradCheck(loss, agent.Parameters("p"), grads.Parameters("p"));
}

TEST(ReturnsTest, RewardToGo) {
  EXPECT_EQ(EpisodeReturns(std::vector<double>{1, 2, 3}), (Vec{6, 5, 3}));
  const Vec g = EpisodeReturns(std::vector<double>{-0.1, -0.1, 0.9});
  EXPECT_NEAR(g[0], 0.7, 1e-12);
  EXPECT_NEAR(g[1], 0.8, 1e-12);
  EXPECT_NEAR(g[2], 0.9, 1e-12);
  EXPECT_THROW(EpisodeReturns(std::vector<double>{}), ContractViolation);
}

TEST(LossTest, GradientMatchesFiniteDifferencesForBob) {
  Rng rng(11);
  Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  bob.InitUniform(rng);
  EXPECT_LT(LossGradError(bob, BobBatch(bob, rng)), 1e-6);
}

TEST(LossTest, GradientMatchesFiniteDifferencesForAlice) {
  Rng rng(12);
  Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  bob.InitUniform(rng);
  Agent alice = Agent::Create({48, 6, 4, true, false, 0}, std::nullopt);
  alice.InitUniform(rng);
  EXPECT_LT(LossGradError(alice, AliceBatch(alice, bob, nullptr, rng)), 1e-6);
}

TEST(LossTest, GradientMatchesFiniteDifferencesForMemoryAlice) {
  for (MemoryVariant v : {MemoryVariant::kLastEpisode, MemoryVariant::kLastK,
                          MemoryVariant::kLstm}) {
    Rng rng(13);
    const MemoryConfig mem_cfg{v, 3, 5};
    Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
    bob.InitUniform(rng);
    Agent alice = Agent::Create({48, 6, 4, true, true, 5}, mem_cfg);
    alice.InitUniform(rng);
    alice.memory_net->extractor.bias = RandomVec(rng, 5, 0.05, 0.3);
    EpisodeMemory memory(mem_cfg);
    AliceBatch(alice, bob, &memory, rng);  // warm the memory
    const auto batch = AliceBatch(alice, bob, &memory, rng);
    EXPECT_LT(LossGradError(alice, batch), 1e-6) << MemoryVariantName(v);
  }
}

TEST(LossTest, TwoStepTrajectoryByHand) {
  // Zero weights: uniform policy over 4 actions, zero value.
  Agent bob = Agent::Create({2, 2, 4, false, false, 0}, std::nullopt);
  Trajectory t;
  t.inputs = {Vec{1, 0, 0, 0}, Vec{0, 1, 0, 0}};
  t.actions = {0, 3};
  t.rewards = {-0.1, 0.9};
  UpdateDiagnostics d;
  const double loss =
      ReinforceLoss(bob, std::span(&t, 1), {0.5, 0.0}, nullptr, nullptr, &d);
  // G = [0.8, 0.9]; A = G; -A log(1/4) averaged, plus 0.5 G^2 averaged.
  const double want = (0.8 + 0.9) * std::log(4.0) / 2 +
                      0.5 * (0.64 + 0.81) / 2;
  EXPECT_NEAR(loss, want, 1e-12);
  EXPECT_NEAR(d.entropy, std::log(4.0), 1e-12);
  EXPECT_EQ(d.steps, 2);
}

TEST(LossTest, ZeroAdvantageGivesNoActorGradient) {
  Rng rng(14);
  Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  bob.InitUniform(rng);
  const auto batch = BobBatch(bob, rng);
  std::vector<Vec> zero;
  for (const auto& t : batch) zero.push_back(Vec(t.size(), 0.0));
  Agent grads = bob.ZeroLike();
  ReinforceLoss(bob, batch, {0.0, 0.0}, &zero, &grads);
  for (const ParamRef& p : grads.Parameters("g")) {
    for (double v : p.values) ASSERT_EQ(v, 0.0) << p.name;
  }
}

TEST(LossTest, ActorGradientIsLinearInAdvantage) {
  Rng rng(15);
  Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  bob.InitUniform(rng);
  const auto batch = BobBatch(bob, rng);
  std::vector<Vec> adv, twice;
  for (const auto& t : batch) {
    adv.push_back(RandomVec(rng, t.size()));
    twice.push_back(adv.back());
    for (double& v : twice.back()) v *= 2.0;
  }
  Agent g1 = bob.ZeroLike(), g2 = bob.ZeroLike();
  ReinforceLoss(bob, batch, {0.0, 0.0}, &adv, &g1);
  ReinforceLoss(bob, batch, {0.0, 0.0}, &twice, &g2);
  const ParamList a = g1.Parameters("g"), b = g2.Parameters("g");
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].values.size(); ++j) {
      ASSERT_NEAR(b[i].values[j], 2.0 * a[i].values[j], 1e-14);
    }
  }
}

TEST(LossTest, EmptyBatchIsRejected) {
  Agent bob = Agent::Create({2, 2, 4, false, false, 0}, std::nullopt);
  std::vector<Trajectory> none(2);
  EXPECT_THROW(ReinforceLoss(bob, none, {}, nullptr, nullptr), ContractViolation);
}

TEST(LossTest, NonFiniteRewardRaisesNumericFault) {
  Agent bob = Agent::Create({2, 2, 4, false, false, 0}, std::nullopt);
  Adam opt(AdamConfig{});
  Trajectory t;
  t.episode_index = 17;
  t.inputs = {Vec(4, 0.0)};
  t.actions = {1};
  t.rewards = {std::nan("")};
  try {
    ReinforceUpdate(bob, opt, std::span(&t, 1), {}, 5.0);
    ADD_FAILURE();
  } catch (const NumericFault& e) {
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos) << e.what();
  }
}

TEST(UpdateTest, IdenticalInputsGiveIdenticalResults) {
  Rng rng(16);
  Agent a = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  a.InitUniform(rng);
  Agent b = a;
  const auto batch = BobBatch(a, rng);
  Adam oa(AdamConfig{}), ob(AdamConfig{});
  for (int step = 0; step < 3; ++step) {
    const UpdateDiagnostics da = ReinforceUpdate(a, oa, batch, {}, 5.0);
    const UpdateDiagnostics db = ReinforceUpdate(b, ob, batch, {}, 5.0);
    EXPECT_EQ(da.loss, db.loss);
    EXPECT_EQ(da.grad_norm, db.grad_norm);
    EXPECT_EQ(da.entropy, db.entropy);
  }
  const ParamList pa = a.Parameters("x"), pb = b.Parameters("x");
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i].values.begin(), pa[i].values.end(),
                           pb[i].values.begin()));
  }
}

TEST(ScheduleTest, SelfPlayEveryNthTargetBatch) {
  std::vector<bool> got;
  for (int j = 0; j < 6; ++j) got.push_back(SelfPlayBeforeTargetBatch(j, 4));
  EXPECT_EQ(got, (std::vector<bool>{true, false, false, false, true, false}));
  for (int n = 1; n <= 7; ++n) {
    for (int m = 1; m <= 30; ++m) {
      int count = 0;
      for (int j = 0; j < m; ++j) count += SelfPlayBeforeTargetBatch(j, n);
      ASSERT_EQ(count, (m + n - 1) / n);
    }
  }
}

TEST(ScheduleTest, TrainerInterleaves) {
  TrainConfig c = SmallRun(Strategy::kSelfPlay);
  c.interleave_n = 4;
  c.total_episodes = 6 * 4 - 1;  // last target batch is partial
  Trainer t(c, 1, testing::TempDir("schedule"));
  ASSERT_TRUE(t.Run());
  using K = BatchKind;
  EXPECT_EQ(t.schedule_log(),
            (std::vector<K>{K::kSelfPlay, K::kTarget, K::kTarget, K::kTarget,
                            K::kTarget, K::kSelfPlay, K::kTarget, K::kTarget}));
  EXPECT_EQ(t.target_episodes(), 23);
  EXPECT_EQ(t.selfplay_batches(), 2);
  EXPECT_EQ(t.selfplay_episodes(), 8);
}

TEST(RunningAverageTest, ConstantAndWindow) {
  RunningAverage avg(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(avg.Add(2.5), 2.5);
  RunningAverage w(2);
  EXPECT_EQ(w.Add(1), 1.0);
  EXPECT_EQ(w.Add(2), 1.5);
  EXPECT_EQ(w.Add(3), 2.5);
  EXPECT_EQ(w.values().size(), 2u);
  RunningAverage r(2);
  const std::vector<double> saved(w.values().begin(), w.values().end());
  r.Restore(saved);
  EXPECT_EQ(r.Add(5), w.Add(5));
}

TEST(EpisodeTest, LengthsRespectLimits) {
  Rng rng(17);
  auto maze = MakeEnvironment(EnvConfig::GridMazeDefaults());
  auto acro = MakeEnvironment(EnvConfig::AcrobotDefaults());
  Agent mb = Agent::Create({192, 8, 4, false, false, 0}, std::nullopt);
  Agent ab = Agent::Create({6, 4, 3, false, false, 0}, std::nullopt);
  mb.InitUniform(rng);
  ab.InitUniform(rng);
  for (int i = 0; i < 20; ++i) {
    EXPECT_LE(RunTargetEpisode(mb, *maze, rng).size(), 50u);
  }
  EXPECT_LE(RunTargetEpisode(ab, *acro, rng).size(), 1000u);
}

TEST(CollectTest, TargetBatchIsThreadCountInvariant) {
  Rng rng(18);
  Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  bob.InitUniform(rng);
  auto env = MakeEnvironment(SmallMaze());
  const auto a = CollectTargetBatch(bob, *env, 8, 5, 100, 1);
  const auto b = CollectTargetBatch(bob, *env, 8, 5, 100, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].episode_index, 100 + static_cast<std::int64_t>(i));
    EXPECT_EQ(a[i].actions, b[i].actions);
    EXPECT_EQ(a[i].rewards, b[i].rewards);
  }
}

TEST(CollectTest, SelfPlayBatchUpdatesMemoryOncePerEpisode) {
  Rng rng(19);
  const MemoryConfig mem_cfg{MemoryVariant::kLstm, 5, 5};
  Agent bob = Agent::Create({48, 6, 4, false, false, 0}, std::nullopt);
  Agent alice = Agent::Create({48, 6, 4, true, true, 5}, mem_cfg);
  bob.InitUniform(rng);
  alice.InitUniform(rng);
  EpisodeMemory memory(mem_cfg);
  auto env = MakeEnvironment(SmallMaze());
  const SelfPlayBatch batch = CollectSelfPlayBatch(
      alice, bob, *env, 7, &memory, {8, 0.1}, 3, 0, 4);
  EXPECT_EQ(memory.update_count(), 7);
  EXPECT_EQ(batch.records.size(), 7u);
  EXPECT_EQ(batch.alice.size(), 7u);
  EXPECT_LE(batch.bob.size(), 7u);
  for (const auto& t : batch.bob) EXPECT_FALSE(t.empty());
}

TEST(TrainerTest, MemoryRunUpdatesMemoryPerSelfPlayEpisode) {
  const TrainConfig c = SmallRun(Strategy::kMemorySelfPlay);
  Trainer t(c, 2, testing::TempDir("memory_run"));
  t.Run();
  EXPECT_EQ(t.memory()->update_count(), t.selfplay_episodes());
  EXPECT_EQ(t.selfplay_batches(), 5);  // ceil(10 / 2)
}

TEST(TrainerTest, OutputsAndHeaders) {
  const TrainConfig c = SmallRun(Strategy::kSelfPlay);
  const auto dir = testing::TempDir("outputs");
  Trainer t(c, 3, dir);
  t.Run();
  const std::string metrics = ReadFile(dir / RunFiles::kMetrics);
  EXPECT_EQ(metrics.rfind(
                "episode,task,strategy,seed,reward,running_avg,wall_time_ms\n"
                "1,target,selfplay,3,", 0),
            0u);
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 41);
  const std::string segments = ReadFile(dir / RunFiles::kSegments);
  EXPECT_EQ(segments.rfind("episode,seed,strategy,s0_0,", 0), 0u);
  EXPECT_NE(segments.find(",sa_74\n"), std::string::npos);
  EXPECT_EQ(ReadFile(dir / RunFiles::kConfigEcho), SerializeConfig(c));
  EXPECT_EQ(ParseConfigText(ReadFile(dir / RunFiles::kConfigEcho)), c);
  EXPECT_TRUE(std::filesystem::exists(dir / RunFiles::kCheckpoint));

  const auto none_dir = testing::TempDir("outputs_none");
  Trainer n(SmallRun(Strategy::kNone), 3, none_dir);
  n.Run();
  EXPECT_FALSE(std::filesystem::exists(none_dir / RunFiles::kSegments));
  EXPECT_TRUE(n.schedule_log().size() == 10u);
}

TEST(TrainerTest, SameSeedIsBitIdentical) {
  for (Strategy s : {Strategy::kNone, Strategy::kMemorySelfPlay}) {
    TrainConfig c = SmallRun(s);
    c.parallelism = 2;
    const auto a = testing::TempDir("same_a"), b = testing::TempDir("same_b");
    Trainer(c, 7, a).Run();
    Trainer(c, 7, b).Run();
    EXPECT_EQ(ReadFile(a / RunFiles::kMetrics), ReadFile(b / RunFiles::kMetrics));
    if (s != Strategy::kNone) {
      EXPECT_EQ(ReadFile(a / RunFiles::kSegments),
                ReadFile(b / RunFiles::kSegments));
    }
    EXPECT_EQ(ReadFile(a / RunFiles::kCheckpoint),
              ReadFile(b / RunFiles::kCheckpoint));
  }
}

TEST(TrainerTest, DifferentSeedsDiffer) {
  const TrainConfig c = SmallRun(Strategy::kNone);
  const auto a = testing::TempDir("seed_a"), b = testing::TempDir("seed_b");
  Trainer(c, 1, a).Run();
  Trainer(c, 2, b).Run();
  EXPECT_NE(ReadFile(a / RunFiles::kMetrics), ReadFile(b / RunFiles::kMetrics));
}

TEST(TrainerTest, ResumeMatchesUninterruptedRun) {
  for (Strategy s : {Strategy::kSelfPlay, Strategy::kMemorySelfPlay}) {
    TrainConfig c = SmallRun(s);
    c.checkpoint_every = 2;
    const auto whole = testing::TempDir("whole"), split = testing::TempDir("split");
    Trainer(c, 9, whole).Run();
    {
      // Stops after 7 batches; the last checkpoint covers 6 of them, so the
      // resumed run has to discard one batch of rows.
      Trainer first(c, 9, split);
      EXPECT_FALSE(first.Run(28));
    }
    auto resumed = Trainer::Resume(split / RunFiles::kCheckpoint);
    EXPECT_EQ(resumed->target_episodes(), 24);
    EXPECT_TRUE(resumed->Run());
    for (const char* f : {RunFiles::kMetrics, RunFiles::kSegments,
                          RunFiles::kCheckpoint, RunFiles::kConfigEcho}) {
      EXPECT_EQ(ReadFile(whole / f), ReadFile(split / f))
          << f << " " << StrategyName(s);
    }
  }
}

TEST(TrainerTest, ResumeOfFinishedRunIsANoOp) {
  const TrainConfig c = SmallRun(Strategy::kNone);
  const auto dir = testing::TempDir("finished");
  Trainer(c, 4, dir).Run();
  const std::string before = ReadFile(dir / RunFiles::kMetrics);
  auto t = Trainer::Resume(dir / RunFiles::kCheckpoint);
  EXPECT_TRUE(t->finished());
  EXPECT_TRUE(t->Run());
  EXPECT_EQ(ReadFile(dir / RunFiles::kMetrics), before);
}

TEST(TrainerTest, RunDirectoryName) {
  TrainConfig c = SmallRun(Strategy::kMemorySelfPlay);
  EXPECT_EQ(RunDirectory("out", c, 3),
            std::filesystem::path("out") / "gridmaze_memory_selfplay_seed3");
}

}  // namespace
}  // namespace masp
