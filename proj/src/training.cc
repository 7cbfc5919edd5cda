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

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "masp/errors.h"
#include "masp/rng.h"

namespace masp {

Vec EpisodeReturns(std::span<const double> rewards) {
  MASP_CHECK(!rewards.empty(), "empty reward sequence");
  Vec g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc += rewards[t];
    g[t] = acc;
  }
  return g;
}

namespace {

std::optional<std::span<const double>> MemoryView(const Vec& read,
                                                  bool uses_memory) {
  if (!uses_memory) return std::nullopt;
  return std::span<const double>(read);
}

}  // namespace

std::vector<Vec> ComputeAdvantages(const Agent& agent,
                                   std::span<const Trajectory> batch) {
  std::vector<Vec> out;
  out.reserve(batch.size());
  for (const Trajectory& traj : batch) {
    Vec adv(traj.size());
    if (traj.empty()) {
      out.push_back(std::move(adv));
      continue;
    }
    Vec read;
    if (agent.config.uses_memory) {
      MASP_CHECK(traj.memory.has_value(), "memory trajectory lacks replay");
      read = ReplayForward(*agent.memory_net, *traj.memory);
    }
    const Vec g = EpisodeReturns(traj.rewards);
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const PolicyOutput po =
          PolicyForward(agent.config, agent.policy, traj.inputs[t],
                        MemoryView(read, agent.config.uses_memory));
      adv[t] = g[t] - po.value;
    }
    out.push_back(std::move(adv));
  }
  return out;
}

double ReinforceLoss(const Agent& agent, std::span<const Trajectory> batch,
                     const LossConfig& config,
                     const std::vector<Vec>* frozen_advantages, Agent* grads,
                     UpdateDiagnostics* diagnostics) {
  std::int64_t total_steps = 0;
  for (const Trajectory& traj : batch) total_steps += traj.size();
  MASP_CHECK(total_steps > 0, "batch has no steps");
  if (frozen_advantages != nullptr) {
    MASP_CHECK_EQ(frozen_advantages->size(), batch.size(), "advantage batch");
  }
  const double inv_n = 1.0 / static_cast<double>(total_steps);
  const AgentConfig& cfg = agent.config;

  double loss = 0.0, actor_loss = 0.0, value_loss = 0.0, entropy_sum = 0.0;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const Trajectory& traj = batch[e];
    if (traj.empty()) continue;

    Vec read;
    MemoryReplayRecord replay_record;
    if (cfg.uses_memory) {
      MASP_CHECK(traj.memory.has_value(), "memory trajectory lacks replay");
      read = ReplayForward(*agent.memory_net, *traj.memory, &replay_record);
    }
    Vec grad_read(cfg.uses_memory ? cfg.memory_dim : 0, 0.0);

    const Vec g = EpisodeReturns(traj.rewards);
    double episode_loss = 0.0;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      PolicyRecord record;
      const PolicyOutput po =
          PolicyForward(cfg, agent.policy, traj.inputs[t],
                        MemoryView(read, cfg.uses_memory),
                        grads != nullptr ? &record : nullptr);
      const int a = traj.actions[t];
      MASP_CHECK(a >= 0 && a < static_cast<int>(po.probs.size()),
                 "recorded action out of range");
      const double log_p = std::log(po.probs[a]);
      const double delta = g[t] - po.value;
      const double adv =
          frozen_advantages != nullptr ? (*frozen_advantages)[e][t] : delta;

      double entropy = 0.0;
      for (double p : po.probs) {
        if (p > 0.0) entropy -= p * std::log(p);
      }
      const double step_loss = -adv * log_p + config.value_coef * delta * delta -
                               config.entropy_coef * entropy;
      episode_loss += step_loss;
      actor_loss += -adv * log_p;
      value_loss += delta * delta;
      entropy_sum += entropy;

      if (grads != nullptr) {
        Vec d_logits(po.probs.size());
        for (std::size_t j = 0; j < po.probs.size(); ++j) {
          const double p = po.probs[j];
          const double onehot = static_cast<int>(j) == a ? 1.0 : 0.0;
          double d = -adv * (onehot - p);
          if (config.entropy_coef != 0.0 && p > 0.0) {
            d += config.entropy_coef * p * (std::log(p) + entropy);
          }
          d_logits[j] = d * inv_n;
        }
        const double d_value = -2.0 * config.value_coef * delta * inv_n;
        const Vec d_mem = PolicyBackward(cfg, agent.policy, record, d_logits,
                                         d_value, grads->policy);
        for (std::size_t k = 0; k < d_mem.size(); ++k) grad_read[k] += d_mem[k];
      }
    }
    if (!std::isfinite(episode_loss)) {
      throw NumericFault("non-finite loss in episode " +
                         std::to_string(traj.episode_index));
    }
    loss += episode_loss;
    if (grads != nullptr && cfg.uses_memory) {
      ReplayBackward(*agent.memory_net, replay_record, grad_read,
                     *grads->memory_net);
    }
  }
  if (diagnostics != nullptr) {
    diagnostics->loss = loss * inv_n;
    diagnostics->actor_loss = actor_loss * inv_n;
    diagnostics->value_loss = value_loss * inv_n;
    diagnostics->entropy = entropy_sum * inv_n;
    diagnostics->steps = total_steps;
  }
  return loss * inv_n;
}

UpdateDiagnostics ReinforceUpdate(Agent& agent, Adam& optimizer,
                                  std::span<const Trajectory> batch,
                                  const LossConfig& config, double grad_clip) {
  Agent grads = agent.ZeroLike();
  UpdateDiagnostics diag;
  ReinforceLoss(agent, batch, config, nullptr, &grads, &diag);
  const ParamList grad_list = grads.Parameters("grad");
  diag.grad_norm = ClipGlobalNorm(grad_list, grad_clip);
  if (!std::isfinite(diag.grad_norm)) {
    const std::int64_t first = batch.empty() ? 0 : batch.front().episode_index;
    throw NumericFault("non-finite gradient norm in batch starting at episode " +
                       std::to_string(first));
  }
  optimizer.Step(agent.Parameters("param"), grad_list);
  return diag;
}

Trajectory RunTargetEpisode(const Agent& bob, Environment& env, Rng& rng,
                            std::int64_t episode_index) {
  MASP_CHECK(!bob.config.uses_memory && !bob.config.has_stop_action,
             "target episodes are played by Bob");
  Trajectory traj;
  traj.episode_index = episode_index;
  env.set_mode(EpisodeMode::kTarget);
  Observation current = env.Reset(rng);
  const Vec zero_target(current.size(), 0.0);
  while (true) {
    Vec tuple = EpisodicTuple(current, zero_target);
    const PolicyOutput po =
        PolicyForward(bob.config, bob.policy, tuple, std::nullopt);
    const int action = SampleAction(po.probs, rng);
    StepResult step = env.Step(action);
    traj.inputs.push_back(std::move(tuple));
    traj.actions.push_back(action);
    traj.rewards.push_back(step.reward);
    traj.log_probs.push_back(std::log(po.probs[action]));
    current = std::move(step.observation);
    if (step.done) break;
  }
  return traj;
}

void ParallelFor(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Trajectory> CollectTargetBatch(const Agent& bob,
                                           const Environment& prototype,
                                           int count, std::int64_t seed,
                                           std::int64_t first_index,
                                           int threads) {
  MASP_CHECK(count >= 1, "batch needs at least one episode");
  std::vector<Trajectory> out(count);
  ParallelFor(count, threads, [&](int i) {
    const std::int64_t index = first_index + i;
    Rng rng = Rng::ForStream(seed, StreamKind::kTarget, index);
    auto env = prototype.Clone();
    out[i] = RunTargetEpisode(bob, *env, rng, index);
  });
  return out;
}

SelfPlayBatch CollectSelfPlayBatch(const Agent& alice, const Agent& bob,
                                   const Environment& prototype, int count,
                                   EpisodeMemory* memory,
                                   const SelfPlayConfig& config,
                                   std::int64_t seed, std::int64_t first_index,
                                   int threads) {
  MASP_CHECK(count >= 1, "batch needs at least one episode");
  std::vector<SelfPlayEpisode> episodes(count);
  auto run_one = [&](int i) {
    const std::int64_t index = first_index + i;
    Rng rng = Rng::ForStream(seed, StreamKind::kSelfPlay, index);
    auto env = prototype.Clone();
    episodes[i] =
        RunSelfPlayEpisode(alice, bob, *env, memory, rng, config, index);
  };
  if (memory != nullptr) {
    for (int i = 0; i < count; ++i) run_one(i);
  } else {
    ParallelFor(count, threads, run_one);
  }
  SelfPlayBatch batch;
  for (auto& ep : episodes) {
    batch.records.push_back(std::move(ep.record));
    batch.alice.push_back(std::move(ep.alice));
    if (!ep.bob.empty()) batch.bob.push_back(std::move(ep.bob));
  }
  return batch;
}

RunningAverage::RunningAverage(int window) : window_(window) {
  MASP_CHECK(window >= 1, "running average window must be positive");
}

double RunningAverage::Add(double value) {
  values_.push_back(value);
  while (static_cast<int>(values_.size()) > window_) values_.pop_front();
  return Mean();
}

double RunningAverage::Mean() const {
  if (values_.empty()) return 0.0;
  // Summed from scratch so the result depends only on the window contents.
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum / static_cast<double>(values_.size());
}

void RunningAverage::Restore(std::span<const double> values) {
  MASP_CHECK(static_cast<int>(values.size()) <= window_,
             "restored window larger than the configured window");
  values_.assign(values.begin(), values.end());
}

std::filesystem::path RunDirectory(const std::filesystem::path& out_root,
                                   const TrainConfig& config,
                                   std::int64_t seed) {
  return out_root / (EnvKindName(config.env.kind) + "_" +
                     StrategyName(config.strategy) + "_seed" +
                     std::to_string(seed));
}

bool SelfPlayBeforeTargetBatch(std::int64_t target_batch, int interleave_n) {
  return target_batch % interleave_n == 0;
}

// ------------------------------------------------------------------ Trainer

namespace {

void EncodeMemoryState(Checkpoint& ckpt, const std::string& prefix,
                       const MemoryState& s) {
  std::vector<std::uint64_t> meta = {
      static_cast<std::uint64_t>(s.variant()),
      static_cast<std::uint64_t>(s.dim), 0};
  Vec flat;
  if (const auto* last = std::get_if<LastEpisodeState>(&s.data)) {
    if (last->feature) {
      meta[2] = 1;
      flat = *last->feature;
    }
  } else if (const auto* buf = std::get_if<LastKState>(&s.data)) {
    meta[2] = buf->features.size();
    meta.push_back(static_cast<std::uint64_t>(buf->k));
    for (const Vec& f : buf->features) flat.insert(flat.end(), f.begin(), f.end());
  } else {
    const auto& cell = std::get<LstmState>(s.data);
    meta[2] = 2;
    flat = cell.h;
    flat.insert(flat.end(), cell.c.begin(), cell.c.end());
  }
  ckpt.PutWords(prefix + ".meta", meta);
  ckpt.PutReals(prefix + ".values", flat);
}

MemoryState DecodeMemoryState(const Checkpoint& ckpt, const std::string& prefix) {
  const auto& meta = ckpt.Words(prefix + ".meta");
  const auto& flat = ckpt.Reals(prefix + ".values");
  if (meta.size() < 3) throw ParseError("memory block '" + prefix + "' is short");
  const int dim = static_cast<int>(meta[1]);
  const std::uint64_t n = meta[2];
  if (flat.size() != n * dim) {
    throw ParseError("memory block '" + prefix + "' has inconsistent size");
  }
  MemoryState s;
  s.dim = dim;
  switch (static_cast<MemoryVariant>(meta[0])) {
    case MemoryVariant::kLastEpisode: {
      LastEpisodeState last;
      if (n == 1) last.feature = flat;
      s.data = std::move(last);
      break;
    }
    case MemoryVariant::kLastK: {
      if (meta.size() < 4) throw ParseError("last_k memory block lacks k");
      LastKState buf;
      buf.k = static_cast<int>(meta[3]);
      for (std::uint64_t i = 0; i < n; ++i) {
        buf.features.emplace_back(flat.begin() + i * dim,
                                  flat.begin() + (i + 1) * dim);
      }
      s.data = std::move(buf);
      break;
    }
    case MemoryVariant::kLstm:
      s.data = LstmState{Vec(flat.begin(), flat.begin() + dim),
                         Vec(flat.begin() + dim, flat.end())};
      break;
    default:
      throw ParseError("memory block '" + prefix + "' has unknown variant");
  }
  return s;
}

void EncodeAgent(Checkpoint& ckpt, const std::string& prefix, Agent agent) {
  for (const ParamRef& p : agent.Parameters(prefix)) {
    ckpt.PutReals(p.name, p.values);
  }
}

void DecodeAgent(const Checkpoint& ckpt, const std::string& prefix,
                 Agent& agent) {
  for (const ParamRef& p : agent.Parameters(prefix)) {
    const auto& v = ckpt.Reals(p.name);
    if (v.size() != p.values.size()) {
      throw ParseError("parameter block '" + p.name + "' has size " +
                       std::to_string(v.size()) + ", expected " +
                       std::to_string(p.values.size()));
    }
    std::copy(v.begin(), v.end(), p.values.begin());
  }
}

void EncodeAdam(Checkpoint& ckpt, const std::string& prefix, const Adam& opt) {
  const std::uint64_t meta[2] = {
      static_cast<std::uint64_t>(opt.step_count()),
      static_cast<std::uint64_t>(opt.first_moment().size())};
  ckpt.PutWords(prefix + ".meta", meta);
  for (std::size_t i = 0; i < opt.first_moment().size(); ++i) {
    ckpt.PutReals(prefix + ".m." + std::to_string(i), opt.first_moment()[i]);
    ckpt.PutReals(prefix + ".v." + std::to_string(i), opt.second_moment()[i]);
  }
}

void DecodeAdam(const Checkpoint& ckpt, const std::string& prefix, Adam& opt) {
  const auto& meta = ckpt.Words(prefix + ".meta");
  if (meta.size() != 2) throw ParseError("adam block '" + prefix + "' malformed");
  std::vector<Vec> m, v;
  for (std::uint64_t i = 0; i < meta[1]; ++i) {
    m.push_back(ckpt.Reals(prefix + ".m." + std::to_string(i)));
    v.push_back(ckpt.Reals(prefix + ".v." + std::to_string(i)));
  }
  opt.Restore(static_cast<std::int64_t>(meta[0]), std::move(m), std::move(v));
}

std::string CsvNumber(double v) { return FormatDouble(v); }

}  // namespace

Trainer::Trainer(const TrainConfig& config, std::int64_t seed,
                 std::filesystem::path run_dir, ResumeTag)
    : config_(config),
      seed_(seed),
      run_dir_(std::move(run_dir)),
      average_(config.avg_window) {
  config_.Validate();
  Build();
}

Trainer::Trainer(const TrainConfig& config, std::int64_t seed,
                 std::filesystem::path run_dir)
    : Trainer(config, seed, std::move(run_dir), ResumeTag{}) {
  OpenOutputs(/*fresh=*/true);
}

void Trainer::Build() {
  prototype_ = MakeEnvironment(config_.env);
  const EnvSpec& spec = prototype_->spec();
  selfplay_ = {spec.max_steps_selfplay, config_.reward_scale};
  loss_ = {config_.value_coef, config_.entropy_coef};
  const AdamConfig adam{config_.lr, 0.9, 0.999, 1e-8};
  bob_opt_ = Adam(adam);
  alice_opt_ = Adam(adam);

  AgentConfig bob_cfg{spec.obs_dim, config_.bob_feature_dim, spec.action_count,
                      false, false, 0};
  bob_ = Agent::Create(bob_cfg, std::nullopt);
  Rng init = Rng::ForStream(seed_, StreamKind::kInit, 0);
  bob_.InitUniform(init);

  if (config_.strategy == Strategy::kSelfPlay) {
    AgentConfig a{spec.obs_dim, config_.alice_feature_dim, spec.action_count,
                  true, false, 0};
    alice_ = Agent::Create(a, std::nullopt);
    alice_->InitUniform(init);
  } else if (config_.strategy == Strategy::kMemorySelfPlay) {
    AgentConfig a{spec.obs_dim, config_.alice_memory_feature_dim,
                  spec.action_count, true, true, config_.memory.memory_dim};
    alice_ = Agent::Create(a, config_.memory);
    alice_->InitUniform(init);
    memory_.emplace(config_.memory);
  }
}

void Trainer::OpenOutputs(bool fresh) {
  std::error_code ec;
  std::filesystem::create_directories(run_dir_, ec);
  if (ec) {
    throw IoError("cannot create run directory '" + run_dir_.string() +
                  "': " + ec.message());
  }
  {
    std::ofstream echo(run_dir_ / RunFiles::kConfigEcho,
                       std::ios::binary | std::ios::trunc);
    echo << SerializeConfig(config_);
    if (!echo) {
      throw IoError("cannot write config echo in '" + run_dir_.string() + "'");
    }
  }
  const auto metrics_path = run_dir_ / RunFiles::kMetrics;
  const auto segments_path = run_dir_ / RunFiles::kSegments;
  const bool has_segments = config_.strategy != Strategy::kNone;
  if (fresh) {
    metrics_.open(metrics_path, std::ios::binary | std::ios::trunc);
    metrics_bytes_ = 0;
    Write(metrics_, "episode,task,strategy,seed,reward,running_avg,wall_time_ms\n",
          metrics_bytes_, "metrics");
    if (has_segments) {
      segments_.open(segments_path, std::ios::binary | std::ios::trunc);
      segments_bytes_ = 0;
      std::string header = "episode,seed,strategy";
      const int d = prototype_->spec().obs_dim;
      for (int i = 0; i < d; ++i) header += ",s0_" + std::to_string(i);
      for (int i = 0; i < d; ++i) header += ",sa_" + std::to_string(i);
      Write(segments_, header + "\n", segments_bytes_, "segments");
    } else {
      std::filesystem::remove(segments_path, ec);
    }
  } else {
    // Drop anything written after the checkpoint was taken.
    auto trim = [&](const std::filesystem::path& p, std::uint64_t bytes) {
      if (std::filesystem::file_size(p, ec) < bytes || ec) {
        throw IoError("'" + p.string() +
                      "' is shorter than the checkpoint records");
      }
      std::filesystem::resize_file(p, bytes, ec);
      if (ec) throw IoError("cannot trim '" + p.string() + "': " + ec.message());
    };
    trim(metrics_path, metrics_bytes_);
    metrics_.open(metrics_path, std::ios::binary | std::ios::app);
    if (has_segments) {
      trim(segments_path, segments_bytes_);
      segments_.open(segments_path, std::ios::binary | std::ios::app);
    }
  }
  if (!metrics_ || (has_segments && !segments_)) {
    throw IoError("cannot open outputs in '" + run_dir_.string() + "'");
  }
  start_ = Clock::now();
}

void Trainer::Write(std::ofstream& out, const std::string& text,
                    std::uint64_t& bytes, const char* what) {
  out << text;
  if (!out) {
    throw IoError(std::string("failed writing ") + what + " output; partial "
                  "results are in '" + run_dir_.string() + "'");
  }
  bytes += text.size();
}

bool Trainer::Run(std::optional<std::int64_t> stop_after) {
  while (!finished()) {
    if (stop_after && target_episodes_ >= *stop_after) break;
    if (config_.strategy != Strategy::kNone &&
        SelfPlayBeforeTargetBatch(target_batches_, config_.interleave_n)) {
      RunSelfPlayBatch();
    }
    const int count = static_cast<int>(std::min<std::int64_t>(
        config_.batch_size, config_.total_episodes - target_episodes_));
    RunTargetBatch(count);
    if (config_.checkpoint_every > 0 &&
        target_batches_ % config_.checkpoint_every == 0) {
      WriteCheckpoint();
    }
    if (progress_) progress_(*this);
  }
  metrics_.flush();
  if (segments_.is_open()) segments_.flush();
  if (finished()) WriteCheckpoint();
  return finished();
}

void Trainer::RunTargetBatch(int count) {
  schedule_log_.push_back(BatchKind::kTarget);
  const std::vector<Trajectory> batch =
      CollectTargetBatch(bob_, *prototype_, count, seed_, target_episodes_,
                         config_.parallelism);
  last_diagnostics_ = {
      ReinforceUpdate(bob_, bob_opt_, batch, loss_, config_.grad_clip)};

  const std::string prefix = ",target," + StrategyName(config_.strategy) + "," +
                             std::to_string(seed_) + ",";
  std::string rows;
  for (const Trajectory& traj : batch) {
    ++target_episodes_;
    const double reward = traj.total_reward();
    const double avg = average_.Add(reward);
    const std::int64_t ms =
        config_.wall_clock
            ? std::chrono::duration_cast<std::chrono::milliseconds>(
                  Clock::now() - start_)
                  .count()
            : 0;
    rows += std::to_string(target_episodes_) + prefix + CsvNumber(reward) +
            "," + CsvNumber(avg) + "," + std::to_string(ms) + "\n";
  }
  Write(metrics_, rows, metrics_bytes_, "metrics");
  rows_since_flush_ += batch.size();
  if (rows_since_flush_ >= 1000) {
    metrics_.flush();
    rows_since_flush_ = 0;
  }
  ++target_batches_;
}

void Trainer::RunSelfPlayBatch() {
  schedule_log_.push_back(BatchKind::kSelfPlay);
  EpisodeMemory* memory = memory_ ? &*memory_ : nullptr;
  SelfPlayBatch batch = CollectSelfPlayBatch(
      *alice_, bob_, *prototype_, config_.batch_size, memory, selfplay_, seed_,
      selfplay_episodes_, config_.parallelism);
  last_diagnostics_.clear();
  last_diagnostics_.push_back(ReinforceUpdate(*alice_, alice_opt_, batch.alice,
                                              loss_, config_.grad_clip));
  if (!batch.bob.empty()) {
    last_diagnostics_.push_back(
        ReinforceUpdate(bob_, bob_opt_, batch.bob, loss_, config_.grad_clip));
  }

  const std::string tag =
      "," + std::to_string(seed_) + "," + StrategyName(config_.strategy);
  std::string rows;
  for (const SelfPlayRecord& r : batch.records) {
    ++selfplay_episodes_;
    rows += std::to_string(selfplay_episodes_) + tag;
    for (double v : r.s0) rows += "," + CsvNumber(v);
    for (double v : r.s_a) rows += "," + CsvNumber(v);
    rows += "\n";
  }
  Write(segments_, rows, segments_bytes_, "segments");
  ++selfplay_batches_;
}

Checkpoint Trainer::MakeCheckpoint() const {
  Checkpoint ckpt;
  ckpt.PutText("config", SerializeConfig(config_));
  const std::uint64_t meta[] = {
      static_cast<std::uint64_t>(seed_),
      static_cast<std::uint64_t>(target_episodes_),
      static_cast<std::uint64_t>(target_batches_),
      static_cast<std::uint64_t>(selfplay_episodes_),
      static_cast<std::uint64_t>(selfplay_batches_),
      metrics_bytes_,
      segments_bytes_};
  ckpt.PutWords("run.meta", meta);
  const Rng init = Rng::ForStream(seed_, StreamKind::kInit, 0);
  ckpt.PutWords("rng.init", init.state());

  EncodeAgent(ckpt, "bob", bob_);
  EncodeAdam(ckpt, "bob.adam", bob_opt_);
  if (alice_) {
    EncodeAgent(ckpt, "alice", *alice_);
    EncodeAdam(ckpt, "alice.adam", alice_opt_);
  }
  if (memory_) {
    EncodeMemoryState(ckpt, "memory.state", memory_->state());
    EncodeMemoryState(ckpt, "memory.replay.base", memory_->replay().base);
    const std::uint64_t mem_meta[] = {
        static_cast<std::uint64_t>(memory_->update_count()),
        memory_->replay().summary_input ? 1u : 0u};
    ckpt.PutWords("memory.meta", mem_meta);
    ckpt.PutReals("memory.replay.summary",
                  memory_->replay().summary_input.value_or(Vec{}));
  }
  const Vec window(average_.values().begin(), average_.values().end());
  ckpt.PutReals("metrics.window", window);
  return ckpt;
}

void Trainer::Restore(const Checkpoint& ckpt) {
  const auto& meta = ckpt.Words("run.meta");
  if (meta.size() != 7) throw ParseError("run.meta block malformed");
  target_episodes_ = static_cast<std::int64_t>(meta[1]);
  target_batches_ = static_cast<std::int64_t>(meta[2]);
  selfplay_episodes_ = static_cast<std::int64_t>(meta[3]);
  selfplay_batches_ = static_cast<std::int64_t>(meta[4]);
  metrics_bytes_ = meta[5];
  segments_bytes_ = meta[6];

  DecodeAgent(ckpt, "bob", bob_);
  DecodeAdam(ckpt, "bob.adam", bob_opt_);
  if (alice_) {
    DecodeAgent(ckpt, "alice", *alice_);
    DecodeAdam(ckpt, "alice.adam", alice_opt_);
  }
  if (memory_) {
    const auto& mem_meta = ckpt.Words("memory.meta");
    if (mem_meta.size() != 2) throw ParseError("memory.meta block malformed");
    MemoryReplay replay;
    replay.base = DecodeMemoryState(ckpt, "memory.replay.base");
    if (mem_meta[1] == 1) replay.summary_input = ckpt.Reals("memory.replay.summary");
    memory_->Restore(DecodeMemoryState(ckpt, "memory.state"), std::move(replay),
                     static_cast<std::int64_t>(mem_meta[0]));
  }
  average_.Restore(ckpt.Reals("metrics.window"));
}

std::unique_ptr<Trainer> Trainer::Resume(
    const std::filesystem::path& checkpoint_path) {
  const Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  const TrainConfig config = ParseConfigText(ckpt.Text("config"));
  const auto& meta = ckpt.Words("run.meta");
  if (meta.empty()) throw ParseError("run.meta block malformed");
  const auto seed = static_cast<std::int64_t>(meta[0]);
  std::unique_ptr<Trainer> trainer(new Trainer(
      config, seed, checkpoint_path.parent_path(), ResumeTag{}));
  trainer->Restore(ckpt);
  trainer->OpenOutputs(/*fresh=*/false);
  return trainer;
}

void Trainer::WriteCheckpoint() {
  metrics_.flush();
  if (segments_.is_open()) segments_.flush();
  if (!metrics_ || (segments_.is_open() && !segments_)) {
    throw IoError("failed flushing outputs; partial results are in '" +
                  run_dir_.string() + "'");
  }
  try {
    SaveCheckpoint(run_dir_ / RunFiles::kCheckpoint, MakeCheckpoint());
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + "; partial results are in '" +
                  run_dir_.string() + "'");
  }
}

}  // namespace masp
