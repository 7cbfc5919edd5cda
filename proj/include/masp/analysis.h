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

#ifndef MASP_ANALYSIS_H_
#define MASP_ANALYSIS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "masp/neuralcore.h"

namespace masp {

struct PcaModel {
  Vec mean;
  std::vector<Vec> axes;  // orthonormal, one per output dimension
  Vec variances;          // descending, non-negative

  Vec Project(std::span<const double> point) const;
};

// Sample covariance (divisor n - 1). Each axis is signed so that its first
// component with magnitude above 1e-12 is positive.
PcaModel FitPca(const std::vector<Vec>& points, int dims = 2);

struct SegmentRecord {
  std::int64_t episode = 0;
  std::int64_t seed = 0;
  std::string strategy;
  Vec s0;
  Vec s_a;
};
using SegmentLog = std::vector<SegmentRecord>;

// Every s0 and s_a of the log, in order.
std::vector<Vec> SegmentPoints(const SegmentLog& log);

// Mean over records of |project(s_a) - project(s0)|. Zero for an empty log.
double MeanSegmentDistance(const SegmentLog& log, const PcaModel& model);

// Element i is the mean of values[max(0, i - k + 1) .. i].
Vec RunningAverageSeries(std::span<const double> values, int k);

struct MetricsRecord {
  std::int64_t episode = 0;
  std::string task;
  std::string strategy;
  std::int64_t seed = 0;
  double reward = 0.0;
  double running_avg = 0.0;
  std::int64_t wall_time_ms = 0;
};

// Throw ParseError naming the file and line for malformed content, IoError
// when the file cannot be read.
std::vector<MetricsRecord> ReadMetricsCsv(const std::filesystem::path& path);
// Keeps at most `max_episodes` records (the earliest) when given.
SegmentLog ReadSegmentsCsv(const std::filesystem::path& path,
                           std::optional<std::int64_t> max_episodes =
                               std::nullopt);

struct AggregateRow {
  std::int64_t episode = 0;
  std::string strategy;
  double mean = 0.0;
  double std = 0.0;  // population
  int n_seeds = 0;
};

// Per strategy, per episode mean and population std of the running_avg
// column across files. Files of one strategy must list identical episode
// indices; otherwise ContractViolation names the offending file.
std::vector<AggregateRow> AggregateSeeds(
    const std::vector<std::filesystem::path>& metrics_files);
std::string AggregateCsv(const std::vector<AggregateRow>& rows);

// Rows at episodes that are multiples of `every` (plus the last episode),
// one column per strategy in first-seen order.
std::string SummaryTable(const std::vector<AggregateRow>& rows,
                         std::int64_t every);

enum class PcaFit { kJoint, kPerStrategy };

struct SegmentAnalysis {
  // strategy -> seed -> mean segment distance
  std::map<std::string, std::map<std::int64_t, double>> distances;
  // x0,y0,x1,y1,strategy,seed rows
  std::string segments_csv;
};

// Logs may mix strategies and seeds. With kJoint a single PCA is fitted on
// the points of every log.
SegmentAnalysis AnalyzeSegments(const std::vector<SegmentLog>& logs,
                                PcaFit fit = PcaFit::kJoint);

double Median(std::vector<double> values);

// Median over seeds of memory_selfplay distances divided by the same for
// selfplay. Nullopt when either strategy is absent or the denominator is 0.
std::optional<double> DistanceRatio(const SegmentAnalysis& analysis);

}  // namespace masp

#endif  // MASP_ANALYSIS_H_
