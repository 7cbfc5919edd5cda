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

#include "masp/memory.h"

#include "masp/errors.h"
#include "masp/rng.h"

namespace masp {

std::string MemoryVariantName(MemoryVariant v) {
  switch (v) {
    case MemoryVariant::kLastEpisode:
      return "last_episode";
    case MemoryVariant::kLastK:
      return "last_k";
    case MemoryVariant::kLstm:
      return "lstm";
  }
  return "unknown";
}

MemoryVariant ParseMemoryVariant(const std::string& name) {
  if (name == "last_episode") return MemoryVariant::kLastEpisode;
  if (name == "last_k") return MemoryVariant::kLastK;
  if (name == "lstm") return MemoryVariant::kLstm;
  throw ParseError("unknown memory variant '" + name +
                   "' (expected last_episode, last_k or lstm)");
}

MemoryState MemoryState::Empty(const MemoryConfig& config) {
  MASP_CHECK(config.memory_dim >= 1, "memory_dim must be positive");
  MemoryState s;
  s.dim = config.memory_dim;
  switch (config.variant) {
    case MemoryVariant::kLastEpisode:
      s.data = LastEpisodeState{};
      break;
    case MemoryVariant::kLastK:
      MASP_CHECK(config.k >= 1, "last_k memory needs k >= 1");
      s.data = LastKState{config.k, {}};
      break;
    case MemoryVariant::kLstm:
      s.data = LstmState{Vec(config.memory_dim, 0.0),
                         Vec(config.memory_dim, 0.0)};
      break;
  }
  return s;
}

MemoryVariant MemoryState::variant() const {
  switch (data.index()) {
    case 0:
      return MemoryVariant::kLastEpisode;
    case 1:
      return MemoryVariant::kLastK;
    default:
      return MemoryVariant::kLstm;
  }
}

MemoryNet MemoryNet::Create(int obs_dim, const MemoryConfig& config) {
  MemoryNet net;
  net.extractor = DenseLayer(2 * obs_dim, config.memory_dim);
  if (config.variant == MemoryVariant::kLstm) {
    net.lstm = LstmCellParams(config.memory_dim, config.memory_dim);
  }
  return net;
}

void MemoryNet::InitUniform(Rng& rng) {
  extractor.InitUniform(rng);
  if (lstm) lstm->InitUniform(rng);
}

void MemoryNet::SetZero() {
  extractor.SetZero();
  if (lstm) lstm->SetZero();
}

void MemoryNet::AppendParams(const std::string& prefix, ParamList& out) {
  extractor.AppendParams(prefix + ".extractor", out);
  if (lstm) lstm->AppendParams(prefix + ".lstm", out);
}

Vec SummarizeEpisode(const DenseLayer& extractor, const EpisodeSummary& summary,
                     DenseRecord* record) {
  MASP_CHECK_EQ(summary.start_state.size(), summary.end_state.size(),
                "summary state dims");
  Vec input = summary.start_state;
  input.insert(input.end(), summary.end_state.begin(), summary.end_state.end());
  return DenseForward(extractor, input, Activation::kRelu, record);
}

MemoryState MemoryUpdate(const MemoryState& state, std::span<const double> feature,
                         const LstmCellParams* lstm, LstmRecord* record) {
  MASP_CHECK_EQ(static_cast<int>(feature.size()), state.dim, "memory feature dim");
  MASP_CHECK((lstm != nullptr) == (state.variant() == MemoryVariant::kLstm),
             "LSTM params must be supplied exactly for the lstm variant");
  MemoryState next = state;
  if (auto* last = std::get_if<LastEpisodeState>(&next.data)) {
    last->feature = Vec(feature.begin(), feature.end());
  } else if (auto* buf = std::get_if<LastKState>(&next.data)) {
    buf->features.emplace_back(feature.begin(), feature.end());
    while (static_cast<int>(buf->features.size()) > buf->k) {
      buf->features.pop_front();
    }
  } else {
    auto& cell = std::get<LstmState>(next.data);
    LstmOutput out = LstmCell(*lstm, feature, cell.h, cell.c, record);
    cell.h = std::move(out.h);
    cell.c = std::move(out.c);
  }
  return next;
}

Vec MemoryRead(const MemoryState& state) {
  if (const auto* last = std::get_if<LastEpisodeState>(&state.data)) {
    return last->feature ? *last->feature : Vec(state.dim, 0.0);
  }
  if (const auto* buf = std::get_if<LastKState>(&state.data)) {
    Vec mean(state.dim, 0.0);
    if (buf->features.empty()) return mean;
    for (const Vec& f : buf->features) {
      for (int i = 0; i < state.dim; ++i) mean[i] += f[i];
    }
    for (double& v : mean) v /= static_cast<double>(buf->features.size());
    return mean;
  }
  return std::get<LstmState>(state.data).h;
}

Vec ReplayForward(const MemoryNet& net, const MemoryReplay& replay,
                  MemoryReplayRecord* record) {
  if (!replay.summary_input) {
    if (record != nullptr) record->active = false;
    return MemoryRead(replay.base);
  }
  DenseRecord* ext_rec = record ? &record->extractor : nullptr;
  LstmRecord* lstm_rec = record ? &record->lstm : nullptr;
  const Vec feature = DenseForward(net.extractor, *replay.summary_input,
                                   Activation::kRelu, ext_rec);
  const MemoryState updated =
      MemoryUpdate(replay.base, feature, net.lstm_params(), lstm_rec);
  if (record != nullptr) {
    record->active = true;
    if (const auto* buf = std::get_if<LastKState>(&updated.data)) {
      record->buffer_size = static_cast<int>(buf->features.size());
    } else {
      record->buffer_size = 1;
    }
  }
  return MemoryRead(updated);
}

void ReplayBackward(const MemoryNet& net, const MemoryReplayRecord& record,
                    std::span<const double> grad_read, MemoryNet& grads) {
  if (!record.active) return;
  Vec grad_feature;
  if (net.lstm) {
    const Vec zero(net.lstm->h_dim, 0.0);
    LstmInputGrads in =
        LstmBackward(*net.lstm, record.lstm, grad_read, zero, *grads.lstm);
    grad_feature = std::move(in.x);
  } else {
    // The newest feature enters the mean with weight 1/n (n = 1 for the
    // last-episode variant).
    grad_feature.assign(grad_read.begin(), grad_read.end());
    for (double& g : grad_feature) g /= record.buffer_size;
  }
  DenseBackward(net.extractor, record.extractor, grad_feature, grads.extractor);
}

EpisodeMemory::EpisodeMemory(const MemoryConfig& config)
    : config_(config), state_(MemoryState::Empty(config)) {
  replay_.base = state_;
}

MemoryReplay EpisodeMemory::BeginEpisode(const MemoryNet& net) {
  if (replay_.summary_input) {
    const Vec feature = DenseForward(net.extractor, *replay_.summary_input,
                                     Activation::kRelu);
    state_ = MemoryUpdate(replay_.base, feature, net.lstm_params());
  }
  return replay_;
}

void EpisodeMemory::EndEpisode(const MemoryNet& net,
                               const EpisodeSummary& summary) {
  const Vec feature = SummarizeEpisode(net.extractor, summary);
  replay_.base = state_;
  Vec input = summary.start_state;
  input.insert(input.end(), summary.end_state.begin(), summary.end_state.end());
  replay_.summary_input = std::move(input);
  state_ = MemoryUpdate(state_, feature, net.lstm_params());
  ++update_count_;
}

void EpisodeMemory::Restore(MemoryState state, MemoryReplay replay,
                            std::int64_t update_count) {
  MASP_CHECK(state.variant() == config_.variant, "memory variant mismatch");
  MASP_CHECK_EQ(state.dim, config_.memory_dim, "memory dim");
  state_ = std::move(state);
  replay_ = std::move(replay);
  update_count_ = update_count;
}

}  // namespace masp
