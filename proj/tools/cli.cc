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

#include "cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>

#include "masp/analysis.h"
#include "masp/config.h"
#include "masp/errors.h"
#include "masp/training.h"

namespace masp {
namespace {

namespace fs = std::filesystem;

struct TrainOptions {
  std::string config_path;
  std::string env;
  std::string strategy;
  std::string memory_variant;
  std::vector<std::int64_t> seeds;
  std::optional<std::int64_t> total_episodes;
  std::optional<int> batch_size;
  std::optional<int> interleave_n;
  std::string out;
  std::optional<int> parallel_seeds;
  std::optional<int> checkpoint_every;
  std::vector<std::string> overrides;
  bool quiet = false;
};

struct AnalyzeOptions {
  std::string kind = "curves";
  std::vector<std::string> run_dirs;
  std::string out = "analysis";
  std::int64_t table_every = 100000;
  std::optional<std::int64_t> max_episodes;
  bool per_strategy_pca = false;
};

TrainConfig ResolveConfig(const TrainOptions& o) {
  std::optional<EnvKind> env;
  if (!o.env.empty()) env = ParseEnvKind(o.env);
  TrainConfig cfg;
  if (!o.config_path.empty()) {
    // An unreadable config is a usage error, not an output failure.
    try {
      cfg = LoadConfigFile(o.config_path, env);
    } catch (const IoError& e) {
      throw ParseError(e.what());
    }
  } else {
    cfg = TrainConfig::Defaults(env.value_or(EnvKind::kGridMaze));
  }
  const std::string default_out = TrainConfig{}.out_dir;
  if (const char* root = std::getenv("SELFPLAY_OUT");
      root != nullptr && *root != '\0' && cfg.out_dir == default_out) {
    cfg.out_dir = root;
  }
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ParseError("--set expects section.key=value, got '" + kv + "'");
    }
    ApplyConfigOverride(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.strategy.empty()) cfg.strategy = ParseStrategy(o.strategy);
  if (!o.memory_variant.empty()) {
    cfg.memory.variant = ParseMemoryVariant(o.memory_variant);
  }
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.total_episodes) cfg.total_episodes = *o.total_episodes;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.interleave_n) cfg.interleave_n = *o.interleave_n;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.parallel_seeds) cfg.parallel_seeds = *o.parallel_seeds;
  if (o.checkpoint_every) cfg.checkpoint_every = *o.checkpoint_every;
  cfg.Validate();
  return cfg;
}

void ReportProgress(const Trainer& t, std::ostream& err, std::mutex& mu) {
  const std::int64_t total = t.config().total_episodes;
  const std::int64_t step = std::max<std::int64_t>(1, total / 10);
  const std::int64_t done = t.target_episodes();
  const std::int64_t batch = t.config().batch_size;
  if (done / step != (done - batch) / step || done == total) {
    std::lock_guard<std::mutex> lock(mu);
    err << "seed " << t.seed() << ": " << done << "/" << total
        << " target episodes\n";
  }
}

int Train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = ResolveConfig(o);
  std::mutex mu;
  std::vector<fs::path> dirs(cfg.seeds.size());
  ParallelFor(static_cast<int>(cfg.seeds.size()), cfg.parallel_seeds,
              [&](int i) {
                const std::int64_t seed = cfg.seeds[i];
                dirs[i] = RunDirectory(cfg.out_dir, cfg, seed);
                Trainer trainer(cfg, seed, dirs[i]);
                if (!o.quiet) {
                  trainer.set_progress(
                      [&](const Trainer& t) { ReportProgress(t, err, mu); });
                }
                trainer.Run();
              });
  for (const fs::path& d : dirs) out << d.string() << "\n";
  return kExitOk;
}

int Resume(const std::string& path, bool quiet, std::ostream& out,
           std::ostream& err) {
  if (!fs::is_regular_file(path)) {
    err << "error: checkpoint '" << path << "' does not exist\n";
    return kExitUsage;
  }
  auto trainer = Trainer::Resume(path);
  std::mutex mu;
  if (!quiet) {
    trainer->set_progress(
        [&](const Trainer& t) { ReportProgress(t, err, mu); });
  }
  trainer->Run();
  out << trainer->run_dir().string() << "\n";
  return kExitOk;
}

// Run directories holding `file`, either given directly or one level below.
std::vector<fs::path> FindRunFiles(const std::vector<std::string>& roots,
                                   const char* file) {
  std::vector<fs::path> found;
  for (const std::string& root : roots) {
    if (fs::is_regular_file(fs::path(root) / file)) {
      found.push_back(fs::path(root) / file);
      continue;
    }
    if (!fs::is_directory(root)) continue;
    std::vector<fs::path> sub;
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::is_regular_file(entry.path() / file)) {
        sub.push_back(entry.path() / file);
      }
    }
    std::sort(sub.begin(), sub.end());
    found.insert(found.end(), sub.begin(), sub.end());
  }
  return found;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw IoError("cannot write '" + path.string() + "'");
}

int Analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream& err) {
  const bool curves = o.kind == "curves";
  const auto files =
      FindRunFiles(o.run_dirs, curves ? RunFiles::kMetrics : RunFiles::kSegments);
  if (files.empty()) {
    err << "error: no " << (curves ? RunFiles::kMetrics : RunFiles::kSegments)
        << " found under the given run directories\n";
    return kExitUsage;
  }
  fs::create_directories(o.out);
  if (curves) {
    const auto rows = AggregateSeeds(files);
    WriteText(fs::path(o.out) / "aggregate.csv", AggregateCsv(rows));
    const std::string table = SummaryTable(rows, o.table_every);
    WriteText(fs::path(o.out) / "summary.csv", table);
    out << table;
    return kExitOk;
  }
  std::vector<SegmentLog> logs;
  for (const fs::path& f : files) logs.push_back(ReadSegmentsCsv(f, o.max_episodes));
  const SegmentAnalysis a = AnalyzeSegments(
      logs, o.per_strategy_pca ? PcaFit::kPerStrategy : PcaFit::kJoint);
  WriteText(fs::path(o.out) / "pca_segments.csv", a.segments_csv);
  std::string table = "strategy,seed,mean_segment_distance\n";
  for (const auto& [strategy, per_seed] : a.distances) {
    for (const auto& [seed, d] : per_seed) {
      table += strategy + "," + std::to_string(seed) + "," + FormatDouble(d) + "\n";
    }
  }
  const auto ratio = DistanceRatio(a);
  const std::string ratio_line =
      "distance_ratio=" + (ratio ? FormatDouble(*ratio) : std::string("nan"));
  WriteText(fs::path(o.out) / "segment_distances.csv", table);
  out << table << ratio_line << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Memory-augmented asymmetric self-play"};
  app.require_subcommand(1);

  TrainOptions train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one run per seed");
  train_cmd->add_option("--config", train.config_path, "Config file");
  train_cmd->add_option("--env", train.env, "gridmaze or acrobot");
  train_cmd->add_option("--strategy", train.strategy,
                        "none, selfplay or memory_selfplay");
  train_cmd->add_option("--memory-variant", train.memory_variant,
                        "last_episode, last_k or lstm");
  train_cmd->add_option("--seeds", train.seeds, "Seeds, comma separated")
      ->delimiter(',');
  train_cmd->add_option("--total-episodes", train.total_episodes,
                        "Target-task episodes per seed");
  train_cmd->add_option("--batch-size", train.batch_size, "Episodes per batch");
  train_cmd->add_option("--interleave-n", train.interleave_n,
                        "Target batches per self-play batch");
  train_cmd->add_option("--out", train.out, "Output root");
  train_cmd->add_option("--parallel-seeds", train.parallel_seeds,
                        "Seeds trained concurrently");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every,
                        "Target batches between checkpoints");
  train_cmd->add_option("--set", train.overrides,
                        "Config override, section.key=value");
  train_cmd->add_flag("--quiet", train.quiet, "No progress output");

  std::string resume_path;
  bool resume_quiet = false;
  CLI::App* resume_cmd =
      app.add_subcommand("resume", "Continue a run from its checkpoint");
  resume_cmd->add_option("checkpoint", resume_path, "Checkpoint file")
      ->required();
  resume_cmd->add_flag("--quiet", resume_quiet, "No progress output");

  AnalyzeOptions analyze;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Aggregate curves or segment statistics");
  analyze_cmd->add_option("--kind", analyze.kind, "curves or pca")
      ->check(CLI::IsMember({"curves", "pca"}));
  analyze_cmd->add_option("runs", analyze.run_dirs,
                          "Run directories or output roots")
      ->required();
  analyze_cmd->add_option("--out", analyze.out, "Directory for results");
  analyze_cmd->add_option("--table-every", analyze.table_every,
                          "Episode spacing of the summary table")
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--max-episodes", analyze.max_episodes,
                          "Segments used per run");
  analyze_cmd->add_flag("--per-strategy-pca", analyze.per_strategy_pca,
                        "Fit one PCA per strategy");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return Train(train, out, err);
    if (*resume_cmd) return Resume(resume_path, resume_quiet, out, err);
    return Analyze(analyze, out, err);
  } catch (const NumericFault& e) {
    err << "numeric fault: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace masp
