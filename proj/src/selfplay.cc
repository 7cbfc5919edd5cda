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

#include <algorithm>
#include <cmath>

#include "masp/errors.h"
#include "masp/rng.h"

namespace masp {

AliceRollout RunAlice(const Agent& alice, Environment& env,
                      EpisodeMemory* memory, Rng& rng,
                      const SelfPlayConfig& config) {
  MASP_CHECK(alice.config.has_stop_action, "Alice needs a STOP action");
  MASP_CHECK((memory != nullptr) == alice.config.uses_memory,
             "memory must be supplied exactly for memory agents");
  MASP_CHECK(config.t_max >= 2, "t_max must leave room for one Alice step");

  AliceRollout out;
  Vec memory_read;
  if (memory != nullptr) {
    out.trajectory.memory = memory->BeginEpisode(*alice.memory_net);
    memory_read = memory->Read();
  }
  const auto memory_view =
      memory != nullptr ? std::optional<std::span<const double>>(memory_read)
                        : std::nullopt;

  env.set_mode(EpisodeMode::kSelfPlay);
  out.s0 = env.Reset(rng);
  Observation current = out.s0;
  const int stop = alice.config.stop_action();
  while (out.t_a < config.t_max - 1) {
    Vec tuple = EpisodicTuple(current, out.s0);
    const PolicyOutput po =
        PolicyForward(alice.config, alice.policy, tuple, memory_view);
    const int action = SampleAction(po.probs, rng);
    out.trajectory.inputs.push_back(std::move(tuple));
    out.trajectory.actions.push_back(action);
    out.trajectory.rewards.push_back(0.0);
    out.trajectory.log_probs.push_back(std::log(po.probs[action]));
    ++out.t_a;
    if (action == stop) break;
    current = env.Step(action).observation;
  }
  out.s_a = std::move(current);
  return out;
}

BobRollout RunBob(const Agent& bob, Environment& env,
                  std::span<const double> s0, std::span<const double> s_a,
                  int budget, Rng& rng, double reward_scale) {
  MASP_CHECK(!bob.config.has_stop_action, "Bob has no STOP action");
  MASP_CHECK(budget >= 0, "negative Bob budget");
  MASP_CHECK(bob.config.action_count == env.spec().action_count,
             "Bob action count differs from the environment");

  BobRollout out;
  env.set_mode(EpisodeMode::kSelfPlay);
  env.PlaceAgent(s0);
  Observation current = env.Observe();
  if (env.StateClose(current, s_a)) {
    out.success = true;
    out.s_b = std::move(current);
    return out;
  }
  while (out.t_b < budget) {
    Vec tuple = EpisodicTuple(current, s_a);
    const PolicyOutput po =
        PolicyForward(bob.config, bob.policy, tuple, std::nullopt);
    const int action = SampleAction(po.probs, rng);
    out.trajectory.inputs.push_back(std::move(tuple));
    out.trajectory.actions.push_back(action);
    out.trajectory.rewards.push_back(-reward_scale);
    out.trajectory.log_probs.push_back(std::log(po.probs[action]));
    ++out.t_b;
    current = env.Step(action).observation;
    if (env.StateClose(current, s_a)) {
      out.success = true;
      break;
    }
  }
  out.s_b = std::move(current);
  return out;
}

int EffectiveBobSteps(int t_a, int t_b, bool bob_success, int t_max) {
  return bob_success ? t_b : t_max - t_a;
}

SelfPlayRewards ComputeSelfPlayRewards(int t_a, int t_b, bool bob_success,
                                       const SelfPlayConfig& config) {
  MASP_CHECK(t_a >= 1, "t_A must be at least 1");
  MASP_CHECK(t_b >= 0, "t_B must be non-negative");
  MASP_CHECK(config.reward_scale > 0.0, "reward scale must be positive");
  const int t_b_eff = EffectiveBobSteps(t_a, t_b, bob_success, config.t_max);
  return {config.reward_scale * std::max(0, t_b_eff - t_a),
          -config.reward_scale * t_b_eff};
}

SelfPlayEpisode RunSelfPlayEpisode(const Agent& alice, const Agent& bob,
                                   Environment& env, EpisodeMemory* memory,
                                   Rng& rng, const SelfPlayConfig& config,
                                   std::int64_t episode_index) {
  AliceRollout a = RunAlice(alice, env, memory, rng, config);
  const int budget = config.t_max - a.t_a;
  BobRollout b = RunBob(bob, env, a.s0, a.s_a, budget, rng, config.reward_scale);

  SelfPlayEpisode ep;
  ep.record.t_a = a.t_a;
  ep.record.t_b = b.t_b;
  ep.record.bob_success = b.success;
  const SelfPlayRewards r =
      ComputeSelfPlayRewards(a.t_a, b.t_b, b.success, config);
  ep.record.reward_alice = r.alice;
  ep.record.reward_bob = r.bob;

  a.trajectory.rewards.back() = r.alice;
  a.trajectory.episode_index = episode_index;
  b.trajectory.episode_index = episode_index;

  if (memory != nullptr) {
    memory->EndEpisode(*alice.memory_net, {a.s0, a.s_a});
  }
  ep.record.s0 = std::move(a.s0);
  ep.record.s_a = std::move(a.s_a);
  ep.record.s_b = std::move(b.s_b);
  ep.alice = std::move(a.trajectory);
  ep.bob = std::move(b.trajectory);
  return ep;
}

}  // namespace masp
