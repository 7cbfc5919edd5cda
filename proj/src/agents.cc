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

#include "masp/agents.h"

#include <numeric>

#include "masp/errors.h"
#include "masp/rng.h"

namespace masp {

void AgentConfig::Validate() const {
  MASP_CHECK(obs_dim >= 1, "obs_dim must be positive");
  MASP_CHECK(feature_dim >= 1, "feature_dim must be positive");
  MASP_CHECK(action_count >= 1, "action_count must be positive");
  MASP_CHECK(!uses_memory || memory_dim >= 1,
             "memory agents need a positive memory_dim");
}

PolicyParams PolicyParams::Create(const AgentConfig& config) {
  config.Validate();
  PolicyParams p;
  p.feature = DenseLayer(2 * config.obs_dim, config.feature_dim);
  p.actor = DenseLayer(config.head_input_dim(), config.actor_outputs());
  p.critic = DenseLayer(config.head_input_dim(), 1);
  return p;
}

void PolicyParams::InitUniform(Rng& rng) {
  feature.InitUniform(rng);
  actor.InitUniform(rng);
  critic.InitUniform(rng);
}

void PolicyParams::SetZero() {
  feature.SetZero();
  actor.SetZero();
  critic.SetZero();
}

void PolicyParams::AppendParams(const std::string& prefix, ParamList& out) {
  feature.AppendParams(prefix + ".feature", out);
  actor.AppendParams(prefix + ".actor", out);
  critic.AppendParams(prefix + ".critic", out);
}

Vec EpisodicTuple(std::span<const double> current,
                  std::span<const double> conditioning) {
  MASP_CHECK_EQ(current.size(), conditioning.size(), "episodic tuple halves");
  Vec out(current.begin(), current.end());
  out.insert(out.end(), conditioning.begin(), conditioning.end());
  return out;
}

PolicyOutput PolicyForward(const AgentConfig& config, const PolicyParams& params,
                           std::span<const double> tuple,
                           std::optional<std::span<const double>> memory_feature,
                           PolicyRecord* record) {
  MASP_CHECK(memory_feature.has_value() == config.uses_memory,
             config.uses_memory ? "memory agent called without memory feature"
                                : "memory feature passed to a memory-less agent");
  Vec head = DenseForward(params.feature, tuple, Activation::kRelu,
                          record ? &record->feature : nullptr);
  if (memory_feature) {
    MASP_CHECK_EQ(static_cast<int>(memory_feature->size()), config.memory_dim,
                  "memory feature dim");
    head.insert(head.end(), memory_feature->begin(), memory_feature->end());
  }
  const Vec logits = DenseForward(params.actor, head, Activation::kNone,
                                  record ? &record->actor : nullptr);
  const Vec value = DenseForward(params.critic, head, Activation::kNone,
                                 record ? &record->critic : nullptr);
  return {Softmax(logits), value[0]};
}

Vec PolicyBackward(const AgentConfig& config, const PolicyParams& params,
                   const PolicyRecord& record, std::span<const double> grad_logits,
                   double grad_value, PolicyParams& grads) {
  Vec d_head = DenseBackward(params.actor, record.actor, grad_logits, grads.actor);
  const double dv[1] = {grad_value};
  const Vec d_head_critic =
      DenseBackward(params.critic, record.critic, dv, grads.critic);
  for (std::size_t i = 0; i < d_head.size(); ++i) d_head[i] += d_head_critic[i];

  const std::span<const double> d_feature(d_head.data(), config.feature_dim);
  DenseBackward(params.feature, record.feature, d_feature, grads.feature);
  if (!config.uses_memory) return {};
  return Vec(d_head.begin() + config.feature_dim, d_head.end());
}

int SampleAction(std::span<const double> probs, Rng& rng) {
  MASP_CHECK(!probs.empty(), "empty distribution");
  const double u = rng.Uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the running sum: fall back to the last action with
  // positive mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int ArgMax(std::span<const double> probs) {
  MASP_CHECK(!probs.empty(), "empty distribution");
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  }
  return best;
}

int ActGreedy(const AgentConfig& config, const PolicyParams& params,
              std::span<const double> tuple,
              std::optional<std::span<const double>> memory_feature) {
  return ArgMax(PolicyForward(config, params, tuple, memory_feature).probs);
}

Agent Agent::Create(const AgentConfig& config,
                    const std::optional<MemoryConfig>& memory) {
  MASP_CHECK(memory.has_value() == config.uses_memory,
             "memory config must be given exactly for memory agents");
  Agent agent;
  agent.config = config;
  agent.policy = PolicyParams::Create(config);
  if (memory) {
    MASP_CHECK_EQ(memory->memory_dim, config.memory_dim, "memory_dim");
    agent.memory_net = MemoryNet::Create(config.obs_dim, *memory);
  }
  return agent;
}

Agent Agent::ZeroLike() const {
  Agent z = *this;
  z.policy.SetZero();
  if (z.memory_net) z.memory_net->SetZero();
  return z;
}

void Agent::InitUniform(Rng& rng) {
  policy.InitUniform(rng);
  if (memory_net) memory_net->InitUniform(rng);
}

ParamList Agent::Parameters(const std::string& prefix) {
  ParamList out;
  policy.AppendParams(prefix, out);
  if (memory_net) memory_net->AppendParams(prefix + ".memory", out);
  return out;
}

double Trajectory::total_reward() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

}  // namespace masp
