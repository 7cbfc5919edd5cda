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

#ifndef MASP_MEMORY_H_
#define MASP_MEMORY_H_

// Episode memory for the task-proposing agent. After each self-play episode
// the (start, end) state pair is embedded by a memory feature extractor and
// folded into one of three memory variants; the memory read is concatenated
// with the policy features of the next episode.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "masp/environment.h"
#include "masp/neuralcore.h"

namespace masp {

enum class MemoryVariant { kLastEpisode, kLastK, kLstm };

std::string MemoryVariantName(MemoryVariant v);
MemoryVariant ParseMemoryVariant(const std::string& name);

struct MemoryConfig {
  MemoryVariant variant = MemoryVariant::kLstm;
  int k = 5;
  int memory_dim = 50;
};

struct LastEpisodeState {
  std::optional<Vec> feature;
  friend bool operator==(const LastEpisodeState&,
                         const LastEpisodeState&) = default;
};

struct LastKState {
  int k = 1;
  std::deque<Vec> features;  // oldest first, at most k entries
  friend bool operator==(const LastKState&, const LastKState&) = default;
};

struct LstmState {
  Vec h;
  Vec c;
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

struct MemoryState {
  int dim = 0;
  std::variant<LastEpisodeState, LastKState, LstmState> data;

  static MemoryState Empty(const MemoryConfig& config);
  MemoryVariant variant() const;
  friend bool operator==(const MemoryState&, const MemoryState&) = default;
};

struct EpisodeSummary {
  Observation start_state;
  Observation end_state;
};

// Trainable part of the memory: the summary extractor and, for the LSTM
// variant, the recurrent cell.
struct MemoryNet {
  DenseLayer extractor;
  std::optional<LstmCellParams> lstm;

  static MemoryNet Create(int obs_dim, const MemoryConfig& config);
  void InitUniform(Rng& rng);
  void SetZero();
  void AppendParams(const std::string& prefix, ParamList& out);
  const LstmCellParams* lstm_params() const {
    return lstm ? &*lstm : nullptr;
  }
};

// ReLU(extractor(start ++ end)).
Vec SummarizeEpisode(const DenseLayer& extractor, const EpisodeSummary& summary,
                     DenseRecord* record = nullptr);

// `lstm` must be non-null exactly for the LSTM variant.
MemoryState MemoryUpdate(const MemoryState& state, std::span<const double> feature,
                         const LstmCellParams* lstm,
                         LstmRecord* record = nullptr);

// Last feature, mean of the buffer, or h. Zero vector before any update.
Vec MemoryRead(const MemoryState& state);

// The newest memory update, kept in a form that can be re-run with the
// current network. Older state is a constant: gradients reach the memory
// network only through this one update (truncation horizon 1).
struct MemoryReplay {
  MemoryState base;                 // state before the newest update
  std::optional<Vec> summary_input; // start ++ end of the previous episode
};

struct MemoryReplayRecord {
  bool active = false;
  DenseRecord extractor;
  LstmRecord lstm;
  int buffer_size = 0;
};

Vec ReplayForward(const MemoryNet& net, const MemoryReplay& replay,
                  MemoryReplayRecord* record = nullptr);

// Backpropagates dL/d(read) into `grads`.
void ReplayBackward(const MemoryNet& net, const MemoryReplayRecord& record,
                    std::span<const double> grad_read, MemoryNet& grads);

// Owns the memory of one training run. Updated serially, once per self-play
// episode.
class EpisodeMemory {
 public:
  explicit EpisodeMemory(const MemoryConfig& config);

  // Re-runs the newest update with `net` so that Read() equals what the
  // policy sees, and returns the replay context for gradient computation.
  MemoryReplay BeginEpisode(const MemoryNet& net);
  void EndEpisode(const MemoryNet& net, const EpisodeSummary& summary);

  Vec Read() const { return MemoryRead(state_); }
  const MemoryConfig& config() const { return config_; }
  const MemoryState& state() const { return state_; }
  const MemoryReplay& replay() const { return replay_; }
  std::int64_t update_count() const { return update_count_; }

  void Restore(MemoryState state, MemoryReplay replay,
               std::int64_t update_count);

 private:
  MemoryConfig config_;
  MemoryState state_;
  MemoryReplay replay_;
  std::int64_t update_count_ = 0;
};

}  // namespace masp

#endif  // MASP_MEMORY_H_
