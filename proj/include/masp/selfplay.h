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

#ifndef MASP_SELFPLAY_H_
#define MASP_SELFPLAY_H_

// Repeat-mode asymmetric self-play. Alice starts from a random state, acts
// until she emits STOP (or is forced to stop), and her final state becomes
// Bob's target. Bob restarts from Alice's start state and must reach her final
// state within the remaining step budget.
//
// Rewards, with t_B_eff = t_B on success and t_max - t_A on failure:
//   R_A = scale * max(0, t_B_eff - t_A)
//   R_B = -scale * t_B_eff
// Bob receives -scale per step taken, Alice receives R_A on her last step.

#include <cstdint>
#include <span>

#include "masp/agents.h"
#include "masp/environment.h"
#include "masp/memory.h"

namespace masp {

class Rng;

struct SelfPlayConfig {
  int t_max = 80;
  double reward_scale = 0.1;
};

struct SelfPlayRecord {
  Observation s0;
  Observation s_a;
  Observation s_b;
  int t_a = 0;
  int t_b = 0;
  bool bob_success = false;
  double reward_alice = 0.0;
  double reward_bob = 0.0;
};

struct AliceRollout {
  Trajectory trajectory;
  Observation s0;
  Observation s_a;
  int t_a = 0;
};

struct BobRollout {
  Trajectory trajectory;
  Observation s_b;
  int t_b = 0;
  bool success = false;
};

struct SelfPlayRewards {
  double alice = 0.0;
  double bob = 0.0;
};

// `memory` must be non-null iff alice uses memory. The memory is read (and
// refreshed against the current network) but not updated here.
AliceRollout RunAlice(const Agent& alice, Environment& env,
                      EpisodeMemory* memory, Rng& rng,
                      const SelfPlayConfig& config);

BobRollout RunBob(const Agent& bob, Environment& env,
                  std::span<const double> s0, std::span<const double> s_a,
                  int budget, Rng& rng, double reward_scale);

// Effective Bob time used by the reward formulas.
int EffectiveBobSteps(int t_a, int t_b, bool bob_success, int t_max);

SelfPlayRewards ComputeSelfPlayRewards(int t_a, int t_b, bool bob_success,
                                       const SelfPlayConfig& config);

struct SelfPlayEpisode {
  SelfPlayRecord record;
  Trajectory alice;
  Trajectory bob;  // empty when Bob takes no step
};

// Runs Alice then Bob, assigns rewards and, for memory agents, updates the
// memory exactly once with (s0, s_a).
SelfPlayEpisode RunSelfPlayEpisode(const Agent& alice, const Agent& bob,
                                   Environment& env, EpisodeMemory* memory,
                                   Rng& rng, const SelfPlayConfig& config,
                                   std::int64_t episode_index = 0);

}  // namespace masp

#endif  // MASP_SELFPLAY_H_
