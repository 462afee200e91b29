// Copyright 2026 The chunkval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Measurements over a valuation: retraining after removing the lowest-valued
// units, local outlier factors, recall of planted corruption, and speedup.
// A "unit" is a chunk or, with singleton_partition, a single row.

#ifndef CHUNKVAL_EVALUATION_H_
#define CHUNKVAL_EVALUATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chunkval/corruption.h"
#include "chunkval/dataset.h"
#include "chunkval/model.h"

namespace chunkval {

// Rows of the units left after dropping the floor(lambda * units) lowest
// valued ones (ties: lower unit id removed first). Ascending.
std::vector<std::size_t> retained_rows(const ChunkPartition& units, std::span<const double> values,
                                       double lambda);
std::vector<std::size_t> removed_rows(const ChunkPartition& units, std::span<const double> values,
                                      double lambda);

struct RemovalCurve {
  std::vector<double> lambdas;
  std::vector<double> mean_scores;  // oriented
  std::vector<double> std_scores;   // sample std over repeats (0 for one repeat)
  int repeats = 0;
};

struct RemovalConfig {
  Architecture arch;
  TrainConfig train;  // seed is replaced by the per-repeat seed
  MetricSpec metric;
  int repeats = 5;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Seed of retraining repeat r; identical for every lambda.
std::uint64_t repeat_seed(std::uint64_t master, int repeat);

RemovalCurve removal_curve(const Dataset& ds_train, const Dataset& ds_val,
                           const ChunkPartition& units, std::span<const double> values,
                           std::span<const double> lambdas, const RemovalConfig& cfg);

// Local outlier factor with Euclidean distance and exact neighbourhoods
// (every point within the k-distance counts). A mean reachability distance of
// 0 (duplicate clusters larger than k) is offset by 1e-10, which gives such
// clusters LOF 1.
std::vector<double> lof_scores(const Eigen::MatrixXd& points, int k_neighbors);

// Mean |LOF| of the retained rows after removing the bottom lambda units,
// with LOF recomputed on the remainder.
double lof_average_after_removal(const Eigen::MatrixXd& points, const ChunkPartition& units,
                                 std::span<const double> values, double lambda, int k_neighbors);

// Share of corrupted rows inside the removed bottom-lambda set. `affected`
// holds row indices in the units' row space.
double detection_recall(std::span<const double> values, std::span<const std::size_t> affected,
                        const ChunkPartition& units, double lambda);

struct SpeedupReport {
  double t_baseline = 0.0;   // seconds
  double t_candidate = 0.0;  // seconds
  double speedup = 0.0;      // t_baseline / t_candidate
};

// A runner failed; carries the baseline time when the baseline finished.
class SpeedupError : public RuntimeError {
 public:
  SpeedupError(const std::string& what, std::optional<double> t_baseline)
      : RuntimeError(what), t_baseline_(t_baseline) {}
  std::optional<double> t_baseline() const { return t_baseline_; }

 private:
  std::optional<double> t_baseline_;
};

// Times fn once on a monotonic clock, after an optional untimed warm-up run.
double time_runner(const std::function<void()>& fn, bool warmup);

// Runs baseline then candidate, strictly one after the other.
SpeedupReport measure_speedup(const std::function<void()>& baseline,
                              const std::function<void()>& candidate, bool warmup = true);

SpeedupReport make_speedup_report(double t_baseline, double t_candidate);

// Host, core count, and compiler, for benchmark reports.
std::string machine_fingerprint();

}  // namespace chunkval

#endif  // CHUNKVAL_EVALUATION_H_
