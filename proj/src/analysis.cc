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

#include "masp/analysis.h"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "masp/config.h"
#include "masp/errors.h"

namespace masp {

Vec PcaModel::Project(std::span<const double> point) const {
  MASP_CHECK_EQ(point.size(), mean.size(), "point dimension");
  Vec out(axes.size(), 0.0);
  for (std::size_t a = 0; a < axes.size(); ++a) {
    for (std::size_t i = 0; i < point.size(); ++i) {
      out[a] += axes[a][i] * (point[i] - mean[i]);
    }
  }
  return out;
}

PcaModel FitPca(const std::vector<Vec>& points, int dims) {
  MASP_CHECK(points.size() >= 2, "PCA needs at least two points");
  MASP_CHECK(dims >= 1, "PCA needs at least one output dimension");
  const std::size_t d = points.front().size();
  MASP_CHECK(static_cast<std::size_t>(dims) <= d,
             "PCA output dimension exceeds input dimension");
  const std::size_t n = points.size();

  Eigen::MatrixXd x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    MASP_CHECK_EQ(points[r].size(), d, "point dimension");
    for (std::size_t c = 0; c < d; ++c) x(r, c) = points[r][c];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov =
      (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericFault("PCA eigendecomposition did not converge");
  }

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  // Eigenvalues come back ascending.
  for (int k = 0; k < dims; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - k;
    Vec axis(solver.eigenvectors().col(col).data(),
             solver.eigenvectors().col(col).data() + d);
    for (double v : axis) {
      if (std::abs(v) > 1e-12) {
        if (v < 0) {
          for (double& a : axis) a = -a;
        }
        break;
      }
    }
    model.axes.push_back(std::move(axis));
    model.variances.push_back(std::max(0.0, solver.eigenvalues()(col)));
  }
  return model;
}

std::vector<Vec> SegmentPoints(const SegmentLog& log) {
  std::vector<Vec> pts;
  pts.reserve(2 * log.size());
  for (const SegmentRecord& r : log) {
    pts.push_back(r.s0);
    pts.push_back(r.s_a);
  }
  return pts;
}

double MeanSegmentDistance(const SegmentLog& log, const PcaModel& model) {
  if (log.empty()) return 0.0;
  double total = 0.0;
  for (const SegmentRecord& r : log) {
    MASP_CHECK_EQ(r.s0.size(), r.s_a.size(), "segment endpoint dimension");
    const Vec a = model.Project(r.s0);
    const Vec b = model.Project(r.s_a);
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (b[i] - a[i]) * (b[i] - a[i]);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(log.size());
}

Vec RunningAverageSeries(std::span<const double> values, int k) {
  MASP_CHECK(k >= 1, "window must be positive");
  Vec out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(k) ? i + 1 - k : 0;
    double sum = 0.0;
    for (std::size_t j = lo; j <= i; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(i - lo + 1);
  }
  return out;
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path.string() + "'");
    std::string header;
    if (!std::getline(in_, header)) Fail("missing header");
    header_ = SplitCsv(header);
  }

  const std::vector<std::string>& header() const { return header_; }

  bool Next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      fields = SplitCsv(line);
      if (fields.size() != header_.size()) {
        Fail("expected " + std::to_string(header_.size()) + " fields, got " +
             std::to_string(fields.size()));
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void Fail(const std::string& msg) const {
    throw ParseError(path_.string() + ":" + std::to_string(line_) + ": " + msg);
  }

  template <typename T>
  T Number(const std::string& s) const {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      Fail("bad number '" + s + "'");
    }
    return v;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::int64_t line_ = 1;
};

}  // namespace

std::vector<MetricsRecord> ReadMetricsCsv(const std::filesystem::path& path) {
  CsvFile csv(path);
  const std::vector<std::string> expected = {
      "episode", "task", "strategy", "seed", "reward", "running_avg",
      "wall_time_ms"};
  if (csv.header() != expected) csv.Fail("unexpected metrics header");
  std::vector<MetricsRecord> out;
  std::vector<std::string> f;
  while (csv.Next(f)) {
    MetricsRecord r;
    r.episode = csv.Number<std::int64_t>(f[0]);
    r.task = f[1];
    r.strategy = f[2];
    r.seed = csv.Number<std::int64_t>(f[3]);
    r.reward = csv.Number<double>(f[4]);
    r.running_avg = csv.Number<double>(f[5]);
    r.wall_time_ms = csv.Number<std::int64_t>(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

SegmentLog ReadSegmentsCsv(const std::filesystem::path& path,
                           std::optional<std::int64_t> max_episodes) {
  CsvFile csv(path);
  const auto& h = csv.header();
  if (h.size() < 5 || (h.size() - 3) % 2 != 0 || h[0] != "episode" ||
      h[1] != "seed" || h[2] != "strategy") {
    csv.Fail("unexpected segments header");
  }
  const std::size_t dim = (h.size() - 3) / 2;
  for (std::size_t i = 0; i < dim; ++i) {
    if (h[3 + i] != "s0_" + std::to_string(i) ||
        h[3 + dim + i] != "sa_" + std::to_string(i)) {
      csv.Fail("unexpected segments header");
    }
  }
  SegmentLog out;
  std::vector<std::string> f;
  while (csv.Next(f)) {
    if (max_episodes && static_cast<std::int64_t>(out.size()) >= *max_episodes) {
      break;
    }
    SegmentRecord r;
    r.episode = csv.Number<std::int64_t>(f[0]);
    r.seed = csv.Number<std::int64_t>(f[1]);
    r.strategy = f[2];
    r.s0.resize(dim);
    r.s_a.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      r.s0[i] = csv.Number<double>(f[3 + i]);
      r.s_a[i] = csv.Number<double>(f[3 + dim + i]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AggregateRow> AggregateSeeds(
    const std::vector<std::filesystem::path>& metrics_files) {
  MASP_CHECK(!metrics_files.empty(), "no metrics files to aggregate");
  struct Group {
    std::filesystem::path first;
    std::vector<std::int64_t> episodes;
    std::vector<Vec> series;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  for (const auto& path : metrics_files) {
    const std::vector<MetricsRecord> rows = ReadMetricsCsv(path);
    if (rows.empty()) {
      throw ContractViolation("metrics file '" + path.string() +
                              "' has no rows");
    }
    const std::string& strategy = rows.front().strategy;
    std::vector<std::int64_t> episodes;
    Vec values;
    for (const MetricsRecord& r : rows) {
      if (r.strategy != strategy) {
        throw ContractViolation("metrics file '" + path.string() +
                                "' mixes strategies");
      }
      episodes.push_back(r.episode);
      values.push_back(r.running_avg);
    }
    auto [it, inserted] = groups.try_emplace(strategy);
    Group& g = it->second;
    if (inserted) {
      order.push_back(strategy);
      g.first = path;
      g.episodes = episodes;
    } else if (episodes != g.episodes) {
      throw ContractViolation("episode indices of '" + path.string() +
                              "' do not align with '" + g.first.string() + "'");
    }
    g.series.push_back(std::move(values));
  }

  std::vector<AggregateRow> out;
  for (const std::string& strategy : order) {
    const Group& g = groups.at(strategy);
    const double n = static_cast<double>(g.series.size());
    for (std::size_t i = 0; i < g.episodes.size(); ++i) {
      double sum = 0.0;
      for (const Vec& s : g.series) sum += s[i];
      const double mean = sum / n;
      double sq = 0.0;
      for (const Vec& s : g.series) sq += (s[i] - mean) * (s[i] - mean);
      out.push_back({g.episodes[i], strategy, mean, std::sqrt(sq / n),
                     static_cast<int>(g.series.size())});
    }
  }
  return out;
}

std::string AggregateCsv(const std::vector<AggregateRow>& rows) {
  std::string out = "episode,strategy,mean,std,n_seeds\n";
  for (const AggregateRow& r : rows) {
    out += std::to_string(r.episode) + "," + r.strategy + "," +
           FormatDouble(r.mean) + "," + FormatDouble(r.std) + "," +
           std::to_string(r.n_seeds) + "\n";
  }
  return out;
}

std::string SummaryTable(const std::vector<AggregateRow>& rows,
                         std::int64_t every) {
  MASP_CHECK(every >= 1, "table interval must be positive");
  std::vector<std::string> strategies;
  std::map<std::pair<std::int64_t, std::string>, const AggregateRow*> cell;
  std::int64_t last = 0;
  for (const AggregateRow& r : rows) {
    if (std::find(strategies.begin(), strategies.end(), r.strategy) ==
        strategies.end()) {
      strategies.push_back(r.strategy);
    }
    cell[{r.episode, r.strategy}] = &r;
    last = std::max(last, r.episode);
  }
  std::set<std::int64_t> sampled;
  for (std::int64_t e = every; e <= last; e += every) sampled.insert(e);
  if (last > 0) sampled.insert(last);

  std::string out = "episodes";
  for (const auto& s : strategies) out += "," + s + "," + s + "_std";
  out += "\n";
  for (std::int64_t e : sampled) {
    out += std::to_string(e);
    for (const auto& s : strategies) {
      auto it = cell.find({e, s});
      if (it == cell.end()) {
        out += ",,";
      } else {
        out += "," + FormatDouble(it->second->mean) + "," +
               FormatDouble(it->second->std);
      }
    }
    out += "\n";
  }
  return out;
}

SegmentAnalysis AnalyzeSegments(const std::vector<SegmentLog>& logs,
                                PcaFit fit) {
  std::map<std::string, SegmentLog> by_strategy;
  std::vector<std::string> order;
  for (const SegmentLog& log : logs) {
    for (const SegmentRecord& r : log) {
      auto [it, inserted] = by_strategy.try_emplace(r.strategy);
      if (inserted) order.push_back(r.strategy);
      it->second.push_back(r);
    }
  }
  MASP_CHECK(!by_strategy.empty(), "no segments to analyze");

  std::map<std::string, PcaModel> models;
  if (fit == PcaFit::kJoint) {
    std::vector<Vec> all;
    for (const auto& [s, log] : by_strategy) {
      const auto pts = SegmentPoints(log);
      all.insert(all.end(), pts.begin(), pts.end());
    }
    const PcaModel joint = FitPca(all);
    for (const auto& [s, log] : by_strategy) models.emplace(s, joint);
  } else {
    for (const auto& [s, log] : by_strategy) {
      models.emplace(s, FitPca(SegmentPoints(log)));
    }
  }

  SegmentAnalysis out;
  out.segments_csv = "x0,y0,x1,y1,strategy,seed\n";
  for (const std::string& s : order) {
    const SegmentLog& log = by_strategy.at(s);
    const PcaModel& model = models.at(s);
    std::map<std::int64_t, SegmentLog> by_seed;
    for (const SegmentRecord& r : log) {
      by_seed[r.seed].push_back(r);
      const Vec a = model.Project(r.s0);
      const Vec b = model.Project(r.s_a);
      out.segments_csv += FormatDouble(a[0]) + "," + FormatDouble(a[1]) + "," +
                          FormatDouble(b[0]) + "," + FormatDouble(b[1]) + "," +
                          s + "," + std::to_string(r.seed) + "\n";
    }
    for (const auto& [seed, seed_log] : by_seed) {
      out.distances[s][seed] = MeanSegmentDistance(seed_log, model);
    }
  }
  return out;
}

double Median(std::vector<double> values) {
  MASP_CHECK(!values.empty(), "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<double> DistanceRatio(const SegmentAnalysis& analysis) {
  auto median_of = [&](const std::string& s) -> std::optional<double> {
    auto it = analysis.distances.find(s);
    if (it == analysis.distances.end() || it->second.empty()) return std::nullopt;
    std::vector<double> v;
    for (const auto& [seed, d] : it->second) v.push_back(d);
    return Median(std::move(v));
  };
  const auto memory = median_of(StrategyName(Strategy::kMemorySelfPlay));
  const auto plain = median_of(StrategyName(Strategy::kSelfPlay));
  if (!memory || !plain || *plain == 0.0) return std::nullopt;
  return *memory / *plain;
}

}  // namespace masp
