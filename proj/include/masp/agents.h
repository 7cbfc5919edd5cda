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

#ifndef MASP_AGENTS_H_
#define MASP_AGENTS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "masp/memory.h"
#include "masp/neuralcore.h"

namespace masp {

class Rng;

struct AgentConfig {
  int obs_dim = 0;
  int feature_dim = 0;
  int action_count = 0;
  bool has_stop_action = false;
  bool uses_memory = false;
  int memory_dim = 0;

  int actor_outputs() const { return action_count + (has_stop_action ? 1 : 0); }
  int head_input_dim() const {
    return feature_dim + (uses_memory ? memory_dim : 0);
  }
  // Index of the STOP action; only meaningful when has_stop_action.
  int stop_action() const { return action_count; }
  void Validate() const;
};

// Feature extractor over the episodic tuple followed by actor and critic
// heads, each a single dense layer.
struct PolicyParams {
  DenseLayer feature;
  DenseLayer actor;
  DenseLayer critic;

  static PolicyParams Create(const AgentConfig& config);
  void InitUniform(Rng& rng);
  void SetZero();
  void AppendParams(const std::string& prefix, ParamList& out);
};

// current ++ conditioning.
Vec EpisodicTuple(std::span<const double> current,
                  std::span<const double> conditioning);

struct PolicyOutput {
  Vec probs;
  double value = 0.0;
};

struct PolicyRecord {
  DenseRecord feature;
  DenseRecord actor;
  DenseRecord critic;
};

// `memory_feature` must be present iff config.uses_memory.
PolicyOutput PolicyForward(const AgentConfig& config, const PolicyParams& params,
                           std::span<const double> tuple,
                           std::optional<std::span<const double>> memory_feature,
                           PolicyRecord* record = nullptr);

// Accumulates gradients for dL/dlogits and dL/dvalue. Returns dL/d(memory
// feature), empty when the agent has no memory.
Vec PolicyBackward(const AgentConfig& config, const PolicyParams& params,
                   const PolicyRecord& record, std::span<const double> grad_logits,
                   double grad_value, PolicyParams& grads);

int SampleAction(std::span<const double> probs, Rng& rng);
// Lowest index among the maxima.
int ArgMax(std::span<const double> probs);
int ActGreedy(const AgentConfig& config, const PolicyParams& params,
              std::span<const double> tuple,
              std::optional<std::span<const double>> memory_feature);

// One learner: policy network plus, for memory agents, the memory network.
struct Agent {
  AgentConfig config;
  PolicyParams policy;
  std::optional<MemoryNet> memory_net;

  static Agent Create(const AgentConfig& config,
                      const std::optional<MemoryConfig>& memory);
  // Same shapes, all zeros. Used as a gradient accumulator.
  Agent ZeroLike() const;
  void InitUniform(Rng& rng);
  ParamList Parameters(const std::string& prefix);
};

// Per-episode record needed to rebuild the policy-gradient tape.
struct Trajectory {
  std::int64_t episode_index = 0;
  std::vector<Vec> inputs;  // episodic tuples
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> log_probs;
  std::optional<MemoryReplay> memory;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  double total_reward() const;
};

}  // namespace masp

#endif  // MASP_AGENTS_H_
