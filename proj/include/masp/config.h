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

#ifndef MASP_CONFIG_H_
#define MASP_CONFIG_H_

// Training configuration and its text form. The text form is a flat, typed
// key/value format with one section per module:
//
//   # comment
//   [training]
//   strategy = "memory_selfplay"
//   seeds = [1, 2, 3]
//   lr = 0.001
//
// Unknown sections or keys and badly typed values are rejected with the line
// number. Serialization is canonical: every key, fixed order, shortest
// round-trip number formatting.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "masp/environment.h"
#include "masp/memory.h"

namespace masp {

enum class Strategy { kNone, kSelfPlay, kMemorySelfPlay };

std::string StrategyName(Strategy s);
Strategy ParseStrategy(const std::string& name);

struct TrainConfig {
  EnvConfig env;
  Strategy strategy = Strategy::kMemorySelfPlay;
  MemoryConfig memory;

  int alice_feature_dim = 50;
  // Episodic feature width of the memory-augmented Alice. Her heads see
  // alice_memory_feature_dim + memory.memory_dim inputs.
  int alice_memory_feature_dim = 50;
  int bob_feature_dim = 50;

  double reward_scale = 0.1;

  int batch_size = 256;
  int interleave_n = 4;
  std::int64_t total_episodes = 700000;
  double lr = 0.001;
  std::vector<std::int64_t> seeds = {1, 2, 3, 4, 5};
  int avg_window = 10000;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double grad_clip = 5.0;

  // Target batches between checkpoints; 0 writes one only at the end.
  int checkpoint_every = 0;
  // Worker threads for memory-free rollouts.
  int parallelism = 1;
  // Record wall-clock milliseconds in the metrics CSV. Off by default so
  // that metrics are bit-reproducible.
  bool wall_clock = false;

  std::string out_dir = "runs";
  int parallel_seeds = 1;

  static TrainConfig Defaults(EnvKind kind);
  // Throws ContractViolation on inconsistent settings.
  void Validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&);
};

// Parses config text. Defaults are taken for `env_override` if given, else
// for the file's env.name, else for gridmaze. When `env_override` is set, a
// differing env.name in the file is ignored.
TrainConfig ParseConfigText(const std::string& text,
                            std::optional<EnvKind> env_override = {});
TrainConfig LoadConfigFile(const std::string& path,
                           std::optional<EnvKind> env_override = {});

std::string SerializeConfig(const TrainConfig& config);

// Applies one "section.key=value" style override (value in file syntax).
void ApplyConfigOverride(TrainConfig& config, const std::string& dotted_key,
                         const std::string& value);

std::string FormatDouble(double value);

}  // namespace masp

#endif  // MASP_CONFIG_H_
