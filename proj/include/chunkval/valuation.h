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

// Chunk-level Shapley valuation.
//
// The training set is split into chunks. Every outer iteration draws a pool
// of k chunk subsets (each chunk may appear in at most floor(k/4) of them,
// and every subset must pass a quality gate), then walks the chunks in
// order. For chunk j, each pooled subset Z that does not contain j is scored
// twice from the running checkpoint w_{j-1}: after one SGD step on Z, and
// after a further step on chunk j. The weighted difference of the two scores
// is j's marginal. The checkpoint then advances with one step on the union of
// those subsets. Values are averaged over iterations until the running means
// stabilise.

#ifndef CHUNKVAL_VALUATION_H_
#define CHUNKVAL_VALUATION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chunkval/dataset.h"
#include "chunkval/model.h"

namespace chunkval {

struct CdashConfig {
  std::size_t chunk_size = 256;
  std::size_t subset_count = 50;       // k
  std::size_t chunks_per_subset = 0;   // s; 0 selects max(2, ceil(c/10))
  double threshold = 0.5;              // accuracy floor, or rmse ceiling
  double eta = 0.001;
  double scale_constant = 1.0;         // C
  double eps = 1e-3;
  int max_iters = 50;
  int max_resampling_attempts = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  bool record_trace = false;
};

// 0.5 accuracy for classification, rmse 25 for regression.
double default_threshold(Task task);

// Resolves the s = 0 default for c chunks.
std::size_t resolve_chunks_per_subset(const CdashConfig& cfg, std::size_t num_chunks);

// Throws UsageError when the configuration cannot be satisfied for c chunks.
void validate_config(const CdashConfig& cfg, std::size_t num_chunks);

// Per-chunk membership cap: floor(k / 4).
std::size_t membership_cap(std::size_t subset_count);

bool meets_threshold(double oriented_score, const MetricSpec& m, double threshold);

struct SubsetPool {
  std::vector<std::vector<std::size_t>> subsets;  // ascending chunk ids
  std::vector<std::size_t> membership_count;      // per chunk
  std::size_t cap = 0;
  double threshold = 0.0;
  std::vector<int> attempts;         // draws used per subset
  std::vector<double> gate_scores;   // oriented gate metric per subset
  std::vector<bool> gate_violation;  // kept best-so-far without passing
  std::vector<bool> cap_violation;   // drawn with too few eligible chunks

  std::size_t size() const { return subsets.size(); }
  bool contains(std::size_t subset, std::size_t chunk) const;
};

struct IterationTrace {
  SubsetPool pool;
  // For each chunk j, the pool indices whose marginals were summed.
  std::vector<std::vector<std::size_t>> used_subsets;
  std::vector<double> values;  // this iteration's ds_j
};

struct ValuationResult {
  std::vector<double> values;               // running mean of ds_j
  int iterations_run = 0;
  std::vector<std::vector<double>> history; // running means after each iteration
  bool converged = false;                   // stopped by the stability rule
  double wall_time = 0.0;                   // seconds
  std::vector<IterationTrace> trace;        // filled when record_trace is set
};

// Seed of the random initial checkpoint of outer iteration `iteration` (1-based).
std::uint64_t iteration_init_seed(std::uint64_t master, int iteration);

// Holds the prepared chunk batches and validation set of one valuation run.
class CdashEngine {
 public:
  CdashEngine(const Dataset& train, const Dataset& validation, ChunkPartition partition,
              Architecture arch, MetricSpec metric, CdashConfig cfg);

  std::size_t num_chunks() const { return partition_.size(); }
  std::size_t num_rows() const { return total_rows_; }
  std::size_t subset_rows(const std::vector<std::size_t>& subset) const;
  const CdashConfig& config() const { return cfg_; }

  // Draws and gates the pool of one outer iteration.
  SubsetPool select_subsets(int iteration) const;

  // ds_j for a single chunk, measured from checkpoint w_prev.
  double chunk_marginal(const Checkpoint& w_prev, const SubsetPool& pool, std::size_t chunk,
                        std::vector<std::size_t>* used = nullptr) const;

  // One full pass over the chunks starting from init_params(arch, init_seed).
  IterationTrace run_iteration(const SubsetPool& pool, std::uint64_t init_seed) const;

  ValuationResult run() const;

 private:
  std::vector<Gradient> chunk_gradients(const Checkpoint& w) const;
  Gradient sum_gradients(const std::vector<Gradient>& grads,
                         std::span<const std::size_t> chunks) const;
  double score(const Checkpoint& w) const;
  double marginal_at(const Checkpoint& w_prev, const std::vector<Gradient>& grads,
                     const SubsetPool& pool, std::size_t chunk,
                     std::vector<std::size_t>* used) const;

  ChunkPartition partition_;
  Architecture arch_;
  MetricSpec metric_;
  CdashConfig cfg_;
  std::size_t s_ = 0;
  std::size_t total_rows_ = 0;
  std::vector<Batch> chunk_batches_;
  Batch validation_;
};

SubsetPool select_subsets(const ChunkPartition& partition, const Dataset& ds_train,
                          const Dataset& ds_val, const Architecture& arch, const MetricSpec& m,
                          const CdashConfig& cfg);

ValuationResult cdash_value(const Dataset& ds_train, const Dataset& ds_val,
                            const ChunkPartition& partition, const Architecture& arch,
                            const MetricSpec& m, const CdashConfig& cfg);

// True once max_iters iterations ran, or when no chunk's running mean moved
// by more than eps * (max - min of the current running means, floored at
// 1e-12) between the last two iterations.
bool truncation_met(const std::vector<std::vector<double>>& history, double eps, int max_iters);

// Unit ids by ascending value; ties keep ascending id.
std::vector<std::size_t> rank_chunks(std::span<const double> values);
std::vector<std::size_t> rank_chunks(const ValuationResult& result);

}  // namespace chunkval

#endif  // CHUNKVAL_VALUATION_H_
