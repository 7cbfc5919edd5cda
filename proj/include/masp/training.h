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

#ifndef MASP_TRAINING_H_
#define MASP_TRAINING_H_

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "masp/agents.h"
#include "masp/checkpoint.h"
#include "masp/config.h"
#include "masp/environment.h"
#include "masp/memory.h"
#include "masp/neuralcore.h"
#include "masp/selfplay.h"

namespace masp {

// Undiscounted reward-to-go: G_t = sum_{t' >= t} r_t'.
Vec EpisodeReturns(std::span<const double> rewards);

struct LossConfig {
  double value_coef = 0.5;
  double entropy_coef = 0.0;
};

struct UpdateDiagnostics {
  double loss = 0.0;
  double actor_loss = 0.0;  // mean of -A * log pi(a)
  double value_loss = 0.0;  // mean of (G - V)^2
  double entropy = 0.0;     // mean policy entropy
  double grad_norm = 0.0;   // before clipping
  std::int64_t steps = 0;
};

// Per-episode, per-step advantages G_t - V(s_t) under the current params.
std::vector<Vec> ComputeAdvantages(const Agent& agent,
                                   std::span<const Trajectory> batch);

// REINFORCE-with-baseline surrogate, averaged over every step in the batch:
//   -A_t log pi(a_t) + value_coef (G_t - V_t)^2 - entropy_coef H(pi_t)
// A_t is a constant in the actor term. When `frozen_advantages` is given it
// replaces G_t - V_t in the actor term, which makes the returned value a
// function whose exact gradient is what gets accumulated into `grads`.
double ReinforceLoss(const Agent& agent, std::span<const Trajectory> batch,
                     const LossConfig& config,
                     const std::vector<Vec>* frozen_advantages, Agent* grads,
                     UpdateDiagnostics* diagnostics = nullptr);

// One clipped Adam step on the batch loss. Throws NumericFault naming the
// episode when the loss is not finite.
UpdateDiagnostics ReinforceUpdate(Agent& agent, Adam& optimizer,
                                  std::span<const Trajectory> batch,
                                  const LossConfig& config, double grad_clip);

// Bob on the target task with a zero conditioning vector.
Trajectory RunTargetEpisode(const Agent& bob, Environment& env, Rng& rng,
                            std::int64_t episode_index = 0);

// Runs `fn(i)` for i in [0, count) on up to `threads` threads.
void ParallelFor(int count, int threads, const std::function<void(int)>& fn);

// Target episodes first_index .. first_index + count - 1, each on its own
// RNG stream.
std::vector<Trajectory> CollectTargetBatch(const Agent& bob,
                                           const Environment& prototype,
                                           int count, std::int64_t seed,
                                           std::int64_t first_index,
                                           int threads);

struct SelfPlayBatch {
  std::vector<SelfPlayRecord> records;
  std::vector<Trajectory> alice;
  std::vector<Trajectory> bob;  // only episodes where Bob acted
};

// Memory episodes run serially in index order; memory-free ones may run in
// parallel.
SelfPlayBatch CollectSelfPlayBatch(const Agent& alice, const Agent& bob,
                                   const Environment& prototype, int count,
                                   EpisodeMemory* memory,
                                   const SelfPlayConfig& config,
                                   std::int64_t seed, std::int64_t first_index,
                                   int threads);

// Mean of the most recent `window` values.
class RunningAverage {
 public:
  explicit RunningAverage(int window);
  double Add(double value);
  double Mean() const;
  const std::deque<double>& values() const { return values_; }
  void Restore(std::span<const double> values);

 private:
  int window_;
  std::deque<double> values_;
};

struct MetricsRow {
  std::int64_t episode = 0;
  double reward = 0.0;
  double running_avg = 0.0;
};

// File names inside a run directory.
struct RunFiles {
  static constexpr const char* kMetrics = "metrics.csv";
  static constexpr const char* kSegments = "segments.csv";
  static constexpr const char* kCheckpoint = "checkpoint.ckpt";
  static constexpr const char* kConfigEcho = "config.echo";
};

std::filesystem::path RunDirectory(const std::filesystem::path& out_root,
                                   const TrainConfig& config,
                                   std::int64_t seed);

enum class BatchKind { kTarget, kSelfPlay };

// Whether a self-play batch runs right before the given (0-based) target
// batch.
bool SelfPlayBeforeTargetBatch(std::int64_t target_batch, int interleave_n);

class Trainer {
 public:
  using Clock = std::chrono::steady_clock;

  // Starts a fresh run in `run_dir`, truncating any previous outputs there.
  Trainer(const TrainConfig& config, std::int64_t seed,
          std::filesystem::path run_dir);
  // Continues the run that wrote `checkpoint_path`; outputs go to the
  // checkpoint's directory and are trimmed back to the checkpointed length.
  static std::unique_ptr<Trainer> Resume(
      const std::filesystem::path& checkpoint_path);

  // Trains until total_episodes target episodes are done, or until at least
  // `stop_after` target episodes are done (used to simulate interruptions).
  // Returns true when the run is complete.
  bool Run(std::optional<std::int64_t> stop_after = std::nullopt);

  Checkpoint MakeCheckpoint() const;

  const TrainConfig& config() const { return config_; }
  std::int64_t seed() const { return seed_; }
  std::int64_t target_episodes() const { return target_episodes_; }
  std::int64_t target_batches() const { return target_batches_; }
  std::int64_t selfplay_episodes() const { return selfplay_episodes_; }
  std::int64_t selfplay_batches() const { return selfplay_batches_; }
  bool finished() const { return target_episodes_ >= config_.total_episodes; }
  const Agent& bob() const { return bob_; }
  const std::optional<Agent>& alice() const { return alice_; }
  const std::optional<EpisodeMemory>& memory() const { return memory_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  // Batch kinds executed by this process, in order.
  const std::vector<BatchKind>& schedule_log() const { return schedule_log_; }
  const std::vector<UpdateDiagnostics>& last_diagnostics() const {
    return last_diagnostics_;
  }

  void set_progress(std::function<void(const Trainer&)> fn) {
    progress_ = std::move(fn);
  }

 private:
  struct ResumeTag {};
  Trainer(const TrainConfig& config, std::int64_t seed,
          std::filesystem::path run_dir, ResumeTag);

  void Build();
  void OpenOutputs(bool fresh);
  void RunTargetBatch(int count);
  void RunSelfPlayBatch();
  void WriteCheckpoint();
  void Write(std::ofstream& out, const std::string& text,
             std::uint64_t& bytes, const char* what);
  void Restore(const Checkpoint& ckpt);

  TrainConfig config_;
  std::int64_t seed_;
  std::filesystem::path run_dir_;
  std::unique_ptr<Environment> prototype_;
  Agent bob_;
  std::optional<Agent> alice_;
  Adam bob_opt_;
  Adam alice_opt_;
  std::optional<EpisodeMemory> memory_;
  SelfPlayConfig selfplay_;
  LossConfig loss_;

  std::int64_t target_episodes_ = 0;
  std::int64_t target_batches_ = 0;
  std::int64_t selfplay_episodes_ = 0;
  std::int64_t selfplay_batches_ = 0;
  RunningAverage average_;

  std::ofstream metrics_;
  std::ofstream segments_;
  std::uint64_t metrics_bytes_ = 0;
  std::uint64_t segments_bytes_ = 0;
  std::uint64_t rows_since_flush_ = 0;
  Clock::time_point start_;

  std::vector<BatchKind> schedule_log_;
  std::vector<UpdateDiagnostics> last_diagnostics_;
  std::function<void(const Trainer&)> progress_;
};

}  // namespace masp

#endif  // MASP_TRAINING_H_
