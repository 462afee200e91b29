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

// Reference valuations: exact enumeration over coalitions, truncated
// Monte-Carlo permutation sampling, gradient-based permutation sampling, and
// averaging of per-tuple values into chunk values.

#ifndef CHUNKVAL_BASELINES_H_
#define CHUNKVAL_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "chunkval/dataset.h"
#include "chunkval/model.h"

namespace chunkval {

// Oriented score of a coalition, given as ascending player indices.
using Utility = std::function<double(std::span<const std::size_t> players)>;

struct PlayerSet {
  std::vector<std::vector<std::size_t>> units;  // rows owned by each player
  Utility utility;

  std::size_t size() const { return units.size(); }
};

inline constexpr std::size_t kMaxExactPlayers = 12;

// Enumerates all 2^p coalitions; each utility is evaluated once.
std::vector<double> exact_shapley(const PlayerSet& ps);

struct TupleValuationResult {
  std::vector<double> values;
  int iterations = 0;  // permutations folded into the means
  std::vector<std::vector<double>> history;
  bool converged = false;
  double wall_time = 0.0;
};

struct TmcConfig {
  double tolerance = 0.01;      // truncate a walk once |v(N) - v(prefix)| <= tolerance
  int max_permutations = 50;
  int epochs_per_fit = 1;       // full-batch steps per prefix refit
  double eta = 0.001;
  double eps = 1e-3;            // stabilisation of running means
  std::uint64_t seed = 0;
  std::size_t budget = 100'000'000;  // players * max_permutations
  int threads = 1;
};

TupleValuationResult tmc_shapley(const PlayerSet& ps, const TmcConfig& cfg);
// Players are the training tuples; each prefix is refit from a fixed init.
TupleValuationResult tmc_shapley(const Dataset& ds_train, const Dataset& ds_val,
                                 const Architecture& arch, const MetricSpec& m,
                                 const TmcConfig& cfg);

struct GShapleyConfig {
  double eta = 0.001;
  int max_permutations = 50;
  double eps = 1e-3;
  std::uint64_t seed = 0;
  std::size_t budget = 100'000'000;
  int threads = 1;
};

TupleValuationResult g_shapley(const Dataset& ds_train, const Dataset& ds_val,
                               const Architecture& arch, const MetricSpec& m,
                               const GShapleyConfig& cfg);

// Per-chunk mean of the member tuples' values.
std::vector<double> chunk_average(std::span<const double> tuple_values,
                                  const ChunkPartition& partition);

// ---------------------------------------------------------------------------
// Games

// Accuracy on `eval` of a 1-nearest-neighbour classifier over the
// coalition's rows (ties go to the lower row index); 0 for the empty set.
PlayerSet nearest_neighbor_game(const Dataset& train, const Dataset& eval,
                                const ChunkPartition& units);

// Negated rmse on `eval` of the minimum-norm least-squares fit (with
// intercept) on the coalition's rows; the empty set predicts 0.
PlayerSet least_squares_game(const Dataset& train, const Dataset& eval,
                             const ChunkPartition& units);

// Validation score of an MLP refit from init_params(arch, seed) with
// `epochs` full-batch SGD steps on the coalition's rows.
PlayerSet mlp_game(const Dataset& train, const Dataset& val, const ChunkPartition& units,
                   const Architecture& arch, const MetricSpec& m, double eta, int epochs,
                   std::uint64_t seed);

}  // namespace chunkval

#endif  // CHUNKVAL_BASELINES_H_
