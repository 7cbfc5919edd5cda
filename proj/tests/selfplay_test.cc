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

#include "masp/selfplay.h"

#include <gtest/gtest.h>

#include "masp/errors.h"
#include "masp/rng.h"
#include "oracles.h"
#include "test_util.h"

namespace masp {
namespace {

constexpr int kRight = GridMaze::kRight;
constexpr int kLeft = GridMaze::kLeft;

Agent MakeAlice(int obs_dim, int actions, int feature_dim = 8) {
  return Agent::Create({obs_dim, feature_dim, actions, true, false, 0},
                       std::nullopt);
}
Agent MakeBob(int obs_dim, int actions, int feature_dim = 8) {
  return Agent::Create({obs_dim, feature_dim, actions, false, false, 0},
                       std::nullopt);
}

// An agent whose policy is (almost surely) the given action everywhere.
void Favor(Agent& agent, int action) {
  agent.policy.SetZero();
  agent.policy.actor.bias[action] = 60.0;
}

// 1-row open corridor whose first reset puts the agent in column 0.
std::unique_ptr<Environment> Corridor(int width, std::uint64_t& seed) {
  EnvConfig cfg = EnvConfig::GridMazeDefaults();
  cfg.width = width;
  cfg.height = 1;
  cfg.wall_fraction = 0.0;
  auto env = MakeEnvironment(cfg);
  for (seed = 1;; ++seed) {
    Rng rng(seed);
    const Observation o = env->Reset(rng);
    if (o[width] == 1.0) return env;
  }
}

TEST(RewardTest, Examples) {
  const SelfPlayConfig cfg{80, 0.1};
  SelfPlayRewards r = ComputeSelfPlayRewards(10, 5, true, cfg);
  EXPECT_DOUBLE_EQ(r.alice, 0.0);
  EXPECT_DOUBLE_EQ(r.bob, -0.5);

  r = ComputeSelfPlayRewards(10, 10, true, cfg);
  EXPECT_DOUBLE_EQ(r.alice, 0.0);

  EXPECT_EQ(EffectiveBobSteps(10, 70, false, 80), 70);
  r = ComputeSelfPlayRewards(10, 70, false, cfg);
  EXPECT_NEAR(r.alice, 6.0, 1e-12);
  EXPECT_NEAR(r.bob, -7.0, 1e-12);
}

TEST(RewardTest, MonotoneInBobSteps) {
  const SelfPlayConfig cfg{80, 0.1};
  for (int t_a = 1; t_a < 80; ++t_a) {
    double prev_a = -1.0, prev_b = 1.0;
    for (int t_b = 0; t_b <= 80 - t_a; ++t_b) {
      const SelfPlayRewards r = ComputeSelfPlayRewards(t_a, t_b, true, cfg);
      EXPECT_GE(r.alice, prev_a);
      EXPECT_LT(r.bob, prev_b);
      prev_a = r.alice;
      prev_b = r.bob;
    }
  }
}

TEST(AliceTest, AlwaysStopEndsAtStart) {
  auto env = MakeEnvironment(EnvConfig::GridMazeDefaults());
  Agent alice = MakeAlice(192, 4);
  Favor(alice, alice.config.stop_action());
  Rng rng(3);
  const AliceRollout r = RunAlice(alice, *env, nullptr, rng, {80, 0.1});
  EXPECT_EQ(r.t_a, 1);
  EXPECT_EQ(r.s_a, r.s0);
  EXPECT_EQ(r.trajectory.actions, std::vector<int>{4});
}

TEST(AliceTest, ForcedStopLeavesBobAStep) {
  auto env = MakeEnvironment(EnvConfig::AcrobotDefaults());
  Agent alice = MakeAlice(6, 3);
  Favor(alice, 2);
  Rng rng(4);
  const AliceRollout r = RunAlice(alice, *env, nullptr, rng, {30, 0.1});
  EXPECT_EQ(r.t_a, 29);
  EXPECT_EQ(r.trajectory.size(), 29u);
}

TEST(AliceTest, ZeroMemoryColumnsMatchPlainAlice) {
  const MemoryConfig mem_cfg{MemoryVariant::kLstm, 5, 6};
  Rng init(5);
  Agent plain = MakeAlice(6, 3, 6);
  plain.InitUniform(init);
  Agent with_mem =
      Agent::Create({6, 6, 3, true, true, 6}, mem_cfg);
  with_mem.InitUniform(init);
  with_mem.policy.feature = plain.policy.feature;
  for (DenseLayer* head : {&with_mem.policy.actor, &with_mem.policy.critic}) {
    const DenseLayer& src =
        head == &with_mem.policy.actor ? plain.policy.actor : plain.policy.critic;
    head->bias = src.bias;
    for (int r = 0; r < head->out_dim; ++r) {
      for (int c = 0; c < 12; ++c) head->w(r, c) = c < 6 ? src.w(r, c) : 0.0;
    }
  }
  auto env_a = MakeEnvironment(EnvConfig::AcrobotDefaults());
  auto env_b = MakeEnvironment(EnvConfig::AcrobotDefaults());
  EpisodeMemory memory(mem_cfg);
  for (int episode = 0; episode < 5; ++episode) {
    Rng ra(100 + episode), rb(100 + episode);
    const AliceRollout a = RunAlice(plain, *env_a, nullptr, ra, {60, 0.1});
    const AliceRollout b = RunAlice(with_mem, *env_b, &memory, rb, {60, 0.1});
    memory.EndEpisode(*with_mem.memory_net, {b.s0, b.s_a});
    EXPECT_EQ(a.trajectory.actions, b.trajectory.actions);
    EXPECT_EQ(a.trajectory.inputs, b.trajectory.inputs);
    EXPECT_EQ(a.s_a, b.s_a);
  }
}

TEST(BobTest, AlreadyCloseSucceedsImmediately) {
  auto env = MakeEnvironment(EnvConfig::GridMazeDefaults());
  Rng rng(6);
  const Observation s0 = env->Reset(rng);
  Agent bob = MakeBob(192, 4);
  const BobRollout r = RunBob(bob, *env, s0, s0, 10, rng, 0.1);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.t_b, 0);
  EXPECT_TRUE(r.trajectory.empty());
}

TEST(BobTest, ZeroBudgetFails) {
  std::uint64_t seed = 0;
  auto env = Corridor(4, seed);
  Rng rng(seed);
  const Observation s0 = env->Reset(rng);
  env->Step(kRight);
  const Observation s_a = env->Observe();
  Agent bob = MakeBob(12, 4);
  const BobRollout r = RunBob(bob, *env, s0, s_a, 0, rng, 0.1);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.t_b, 0);
  EXPECT_EQ(ComputeSelfPlayRewards(80, 0, false, {80, 0.1}).bob, 0.0);
}

TEST(BobTest, ShortestPathBobNeedsTwoSteps) {
  EnvConfig cfg = EnvConfig::GridMazeDefaults();
  GridMaze maze(cfg);
  std::vector<bool> walls(64, false);
  walls[3 * 8 + 2] = true;  // a wall just above the path
  maze.SetLayout(walls, {1, 4}, {6, 6});
  const Observation s0 = maze.Observe();
  maze.Step(kRight);
  maze.Step(kRight);
  const Observation s_a = maze.Observe();
  const int from = 4 * 8 + 1, to = 4 * 8 + 3;
  ASSERT_EQ(oracle::ShortestPath(walls, 8, 8, from, to), 2);
  ASSERT_EQ(oracle::ShortestPathMove(walls, 8, 8, from, to), kRight);

  Agent bob = MakeBob(192, 4);
  Favor(bob, oracle::ShortestPathMove(walls, 8, 8, from, to));
  Rng rng(7);
  const BobRollout r = RunBob(bob, maze, s0, s_a, 78, rng, 0.1);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.t_b, 2);
  EXPECT_EQ(r.trajectory.rewards, (std::vector<double>{-0.1, -0.1}));
}

// Alice: right while in column 0, STOP in column 1.
Agent ScriptedAlice() {
  Agent alice = MakeAlice(12, 4, 1);
  alice.policy.SetZero();
  alice.policy.feature.w(0, 4 + 1) = 1.0;  // current agent plane, column 1
  alice.policy.actor.bias[kRight] = 50.0;
  alice.policy.actor.w(4, 0) = 100.0;  // STOP
  return alice;
}

TEST(EpisodeTest, ScriptedRewardsMatchHandComputation) {
  std::uint64_t seed = 0;
  auto env = Corridor(4, seed);
  const SelfPlayConfig cfg{10, 0.1};
  const Agent alice = ScriptedAlice();

  Agent lost_bob = MakeBob(12, 4, 1);
  Favor(lost_bob, kLeft);
  Rng rng(seed);
  SelfPlayEpisode ep = RunSelfPlayEpisode(alice, lost_bob, *env, nullptr, rng, cfg);
  EXPECT_EQ(ep.alice.actions, (std::vector<int>{kRight, 4}));
  EXPECT_EQ(ep.record.t_a, 2);
  EXPECT_FALSE(ep.record.bob_success);
  EXPECT_EQ(ep.record.t_b, 8);
  EXPECT_NEAR(ep.record.reward_alice, 0.6, 1e-12);
  EXPECT_NEAR(ep.record.reward_bob, -0.8, 1e-12);
  EXPECT_EQ(ep.alice.rewards, (std::vector<double>{0.0, ep.record.reward_alice}));
  double bob_total = 0.0;
  for (double r : ep.bob.rewards) bob_total += r;
  EXPECT_NEAR(bob_total, ep.record.reward_bob, 1e-12);

  Agent good_bob = MakeBob(12, 4, 1);
  Favor(good_bob, kRight);
  Rng rng2(seed);
  ep = RunSelfPlayEpisode(alice, good_bob, *env, nullptr, rng2, cfg);
  EXPECT_TRUE(ep.record.bob_success);
  EXPECT_EQ(ep.record.t_b, 1);
  EXPECT_DOUBLE_EQ(ep.record.reward_alice, 0.0);
  EXPECT_NEAR(ep.record.reward_bob, -0.1, 1e-12);
}

void CheckInvariants(EnvConfig env_cfg, bool with_memory) {
  auto env = MakeEnvironment(env_cfg);
  const int obs = env->spec().obs_dim, actions = env->spec().action_count;
  const MemoryConfig mem_cfg{MemoryVariant::kLstm, 5, 8};
  Rng init(9);
  Agent alice = with_memory
                    ? Agent::Create({obs, 8, actions, true, true, 8}, mem_cfg)
                    : MakeAlice(obs, actions);
  alice.InitUniform(init);
  Agent bob = MakeBob(obs, actions);
  bob.InitUniform(init);
  EpisodeMemory memory(mem_cfg);
  const SelfPlayConfig cfg{env->spec().max_steps_selfplay, 0.1};
  for (int i = 0; i < 1000; ++i) {
    Rng rng = Rng::ForStream(1, StreamKind::kSelfPlay, i);
    const std::int64_t before = memory.update_count();
    const SelfPlayEpisode ep = RunSelfPlayEpisode(
        alice, bob, *env, with_memory ? &memory : nullptr, rng, cfg, i);
    const SelfPlayRecord& r = ep.record;
    ASSERT_LE(r.t_a + r.t_b, cfg.t_max);
    ASSERT_GE(r.t_a, 1);
    if (!r.bob_success) ASSERT_EQ(r.t_b, cfg.t_max - r.t_a);
    if (r.bob_success) ASSERT_TRUE(env->StateClose(r.s_b, r.s_a));
    if (with_memory) ASSERT_EQ(memory.update_count(), before + 1);
    for (int a : ep.bob.actions) ASSERT_LT(a, actions);
  }
}

TEST(EpisodeTest, InvariantsOnRandomMazeEpisodes) {
  EnvConfig cfg = EnvConfig::GridMazeDefaults();
  cfg.width = 5;
  cfg.height = 5;
  cfg.max_steps_target = 30;
  cfg.max_steps_selfplay = 30;
  CheckInvariants(cfg, false);
  CheckInvariants(cfg, true);
}

TEST(EpisodeTest, InvariantsOnRandomAcrobotEpisodes) {
  EnvConfig cfg = EnvConfig::AcrobotDefaults();
  cfg.max_steps_target = 40;
  cfg.max_steps_selfplay = 40;
  cfg.success_epsilon = 0.3;
  CheckInvariants(cfg, false);
}

TEST(EpisodeTest, MemoryAgentNeedsMemory) {
  auto env = MakeEnvironment(EnvConfig::AcrobotDefaults());
  Agent alice = Agent::Create({6, 4, 3, true, true, 4},
                              MemoryConfig{MemoryVariant::kLastEpisode, 5, 4});
  Rng rng(1);
  EXPECT_THROW(RunAlice(alice, *env, nullptr, rng, {20, 0.1}),
               ContractViolation);
}

}  // namespace
}  // namespace masp
