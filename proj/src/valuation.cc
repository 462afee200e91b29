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

#include "chunkval/valuation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace chunkval {

double default_threshold(Task task) {
  return task == Task::kClassification ? 0.5 : 25.0;
}

std::size_t resolve_chunks_per_subset(const CdashConfig& cfg, std::size_t num_chunks) {
  if (cfg.chunks_per_subset > 0) return cfg.chunks_per_subset;
  return std::max<std::size_t>(2, (num_chunks + 9) / 10);
}

std::size_t membership_cap(std::size_t subset_count) { return subset_count / 4; }

void validate_config(const CdashConfig& cfg, std::size_t num_chunks) {
  if (num_chunks < 2) throw UsageError("valuation needs at least 2 chunks");
  if (cfg.subset_count < 4) throw UsageError("subset count k must be at least 4");
  const std::size_t s = resolve_chunks_per_subset(cfg, num_chunks);
  if (s < 1 || s > num_chunks - 1)
    throw UsageError("chunks per subset must lie in [1, " + std::to_string(num_chunks - 1) +
                     "], got " + std::to_string(s));
  const std::size_t cap = membership_cap(cfg.subset_count);
  if (cfg.subset_count * s > cap * num_chunks)
    throw UsageError("infeasible pool: " + std::to_string(cfg.subset_count) + " subsets of " +
                     std::to_string(s) + " chunks exceed the membership cap of " +
                     std::to_string(cap) + " per chunk over " + std::to_string(num_chunks) +
                     " chunks");
  if (!(cfg.eta > 0.0)) throw UsageError("eta must be positive");
  if (!(cfg.scale_constant > 0.0)) throw UsageError("constant C must be positive");
  if (!(cfg.eps >= 0.0)) throw UsageError("eps must be non-negative");
  if (cfg.max_iters < 1) throw UsageError("max iterations must be at least 1");
  if (cfg.max_resampling_attempts < 1) throw UsageError("max resampling attempts must be at least 1");
}

bool meets_threshold(double oriented_score, const MetricSpec& m, double threshold) {
  return m.higher_is_better() ? oriented_score >= threshold : oriented_score >= -threshold;
}

bool SubsetPool::contains(std::size_t subset, std::size_t chunk) const {
  const auto& z = subsets[subset];
  return std::binary_search(z.begin(), z.end(), chunk);
}

std::uint64_t iteration_init_seed(std::uint64_t master, int iteration) {
  return derive_seed(master, {0x17e4, static_cast<std::uint64_t>(iteration)});
}

CdashEngine::CdashEngine(const Dataset& train, const Dataset& validation,
                         ChunkPartition partition, Architecture arch, MetricSpec metric,
                         CdashConfig cfg)
    : partition_(std::move(partition)), arch_(arch), metric_(metric), cfg_(cfg) {
  validate_config(cfg_, partition_.size());
  if (validation.rows() == 0) throw UsageError("validation set is empty");
  if ((arch_.task == Task::kClassification) != metric_.higher_is_better())
    throw UsageError("metric does not match the task");
  s_ = resolve_chunks_per_subset(cfg_, partition_.size());
  std::vector<bool> seen(train.rows(), false);
  for (const auto& chunk : partition_.chunks) {
    if (chunk.empty()) throw UsageError("partition has an empty chunk");
    for (std::size_t r : chunk) {
      if (r >= train.rows()) throw UsageError("partition row out of range");
      if (seen[r]) throw UsageError("partition chunks overlap");
      seen[r] = true;
    }
    chunk_batches_.push_back(make_batch(train, chunk));
    total_rows_ += chunk.size();
  }
  validation_ = make_batch(validation);
}

std::size_t CdashEngine::subset_rows(const std::vector<std::size_t>& subset) const {
  std::size_t rows = 0;
  for (std::size_t ch : subset) rows += chunk_batches_[ch].size();
  return rows;
}

double CdashEngine::score(const Checkpoint& w) const {
  const double v = evaluate_metric(w, validation_, metric_);
  if (!std::isfinite(v)) throw RuntimeError("non-finite validation metric");
  return v;
}

std::vector<Gradient> CdashEngine::chunk_gradients(const Checkpoint& w) const {
  std::vector<Gradient> grads(num_chunks());
  parallel_for(num_chunks(), cfg_.threads,
               [&](std::size_t ch) { grads[ch] = loss_gradient_sum(w, chunk_batches_[ch]); });
  return grads;
}

// The summed-loss gradient is additive over rows, so the gradient of a union
// of chunks is the sum of the chunk gradients (added in ascending chunk id).
Gradient CdashEngine::sum_gradients(const std::vector<Gradient>& grads,
                                    std::span<const std::size_t> chunks) const {
  Gradient total = grads[chunks.front()];
  for (std::size_t i = 1; i < chunks.size(); ++i) total += grads[chunks[i]];
  return total;
}

SubsetPool CdashEngine::select_subsets(int iteration) const {
  const std::size_t c = num_chunks();
  const std::size_t k = cfg_.subset_count;
  SubsetPool pool;
  pool.cap = membership_cap(k);
  pool.threshold = cfg_.threshold;
  pool.membership_count.assign(c, 0);

  // The gate model: one step from the iteration's fresh initialisation.
  const Checkpoint w0 = init_params(arch_, iteration_init_seed(cfg_.seed, iteration));
  const std::vector<Gradient> grads = chunk_gradients(w0);

  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    bool best_cap_violation = false;
    bool accepted = false;
    int attempt = 0;
    while (attempt < cfg_.max_resampling_attempts && !accepted) {
      std::mt19937_64 rng(derive_seed(cfg_.seed, {0x5e1ec7, static_cast<std::uint64_t>(iteration),
                                                  i, static_cast<std::uint64_t>(attempt)}));
      ++attempt;
      // Draw among chunks still under the cap; fall back to all chunks only
      // when too few remain.
      std::vector<std::size_t> eligible;
      for (std::size_t ch = 0; ch < c; ++ch) {
        if (pool.membership_count[ch] < pool.cap) eligible.push_back(ch);
      }
      const bool cap_violation = eligible.size() < s_;
      if (cap_violation) {
        eligible.resize(c);
        std::iota(eligible.begin(), eligible.end(), 0);
      }
      for (std::size_t t = 0; t < s_; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, eligible.size() - 1);
        std::swap(eligible[t], eligible[pick(rng)]);
      }
      std::vector<std::size_t> subset(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(s_));
      std::sort(subset.begin(), subset.end());

      const double gate = score(apply_update(w0, sum_gradients(grads, subset), cfg_.eta));
      if (best.empty() || gate > best_score) {
        best = subset;
        best_score = gate;
        best_cap_violation = cap_violation;
      }
      accepted = meets_threshold(gate, metric_, cfg_.threshold) && !cap_violation;
    }
    for (std::size_t ch : best) ++pool.membership_count[ch];
    pool.subsets.push_back(std::move(best));
    pool.attempts.push_back(attempt);
    pool.gate_scores.push_back(best_score);
    pool.gate_violation.push_back(!meets_threshold(best_score, metric_, cfg_.threshold));
    pool.cap_violation.push_back(best_cap_violation);
  }
  return pool;
}

namespace {

std::vector<std::size_t> subsets_without(const SubsetPool& pool, std::size_t chunk) {
  std::vector<std::size_t> out;
  for (std::size_t z = 0; z < pool.size(); ++z) {
    if (!pool.contains(z, chunk)) out.push_back(z);
  }
  // A chunk present in every subset is valued against the whole pool.
  if (out.empty()) {
    out.resize(pool.size());
    std::iota(out.begin(), out.end(), 0);
  }
  return out;
}

}  // namespace

double CdashEngine::marginal_at(const Checkpoint& w_prev, const std::vector<Gradient>& grads,
                                const SubsetPool& pool, std::size_t chunk,
                                std::vector<std::size_t>* used) const {
  const std::vector<std::size_t> z_ids = subsets_without(pool, chunk);
  const double total_rows = static_cast<double>(total_rows_);
  std::vector<double> terms(z_ids.size());
  parallel_for(z_ids.size(), cfg_.threads, [&](std::size_t t) {
    const auto& subset = pool.subsets[z_ids[t]];
    const Checkpoint w_z = apply_update(w_prev, sum_gradients(grads, subset), cfg_.eta);
    const double m_z = score(w_z);
    const Checkpoint w_zj = sgd_step(w_z, chunk_batches_[chunk], cfg_.eta);
    const double m_zj = score(w_zj);
    const double weight =
        cfg_.scale_constant / (total_rows * static_cast<double>(subset_rows(subset)));
    terms[t] = weight * (m_zj - m_z);
  });
  if (used) *used = z_ids;
  double total = 0.0;
  for (double term : terms) total += term;
  return total;
}

double CdashEngine::chunk_marginal(const Checkpoint& w_prev, const SubsetPool& pool,
                                   std::size_t chunk, std::vector<std::size_t>* used) const {
  if (chunk >= num_chunks()) throw UsageError("chunk id out of range");
  return marginal_at(w_prev, chunk_gradients(w_prev), pool, chunk, used);
}

IterationTrace CdashEngine::run_iteration(const SubsetPool& pool, std::uint64_t init_seed) const {
  if (pool.size() == 0) throw UsageError("empty subset pool");
  IterationTrace trace;
  trace.pool = pool;
  trace.values.assign(num_chunks(), 0.0);
  trace.used_subsets.resize(num_chunks());
  Checkpoint w = init_params(arch_, init_seed);
  for (std::size_t j = 0; j < num_chunks(); ++j) {
    const std::vector<Gradient> grads = chunk_gradients(w);
    trace.values[j] = marginal_at(w, grads, pool, j, &trace.used_subsets[j]);
    std::set<std::size_t> union_chunks;
    for (std::size_t z : trace.used_subsets[j])
      union_chunks.insert(pool.subsets[z].begin(), pool.subsets[z].end());
    const std::vector<std::size_t> ordered(union_chunks.begin(), union_chunks.end());
    w = apply_update(w, sum_gradients(grads, ordered), cfg_.eta);
    if (!w.params.all_finite()) throw RuntimeError("checkpoint diverged at chunk " + std::to_string(j));
  }
  return trace;
}

ValuationResult CdashEngine::run() const {
  const auto start = std::chrono::steady_clock::now();
  ValuationResult result;
  std::vector<double> sums(num_chunks(), 0.0);
  for (int it = 1;; ++it) {
    const SubsetPool pool = select_subsets(it);
    IterationTrace trace = run_iteration(pool, iteration_init_seed(cfg_.seed, it));
    std::vector<double> means(num_chunks());
    for (std::size_t j = 0; j < num_chunks(); ++j) {
      sums[j] += trace.values[j];
      means[j] = sums[j] / static_cast<double>(it);
    }
    result.history.push_back(means);
    result.iterations_run = it;
    if (cfg_.record_trace) result.trace.push_back(std::move(trace));
    const bool stable = result.history.size() >= 2 &&
                        truncation_met(result.history, cfg_.eps,
                                       std::numeric_limits<int>::max());
    if (stable || it >= cfg_.max_iters) {
      result.converged = stable;
      break;
    }
  }
  result.values = result.history.back();
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SubsetPool select_subsets(const ChunkPartition& partition, const Dataset& ds_train,
                          const Dataset& ds_val, const Architecture& arch, const MetricSpec& m,
                          const CdashConfig& cfg) {
  return CdashEngine(ds_train, ds_val, partition, arch, m, cfg).select_subsets(1);
}

ValuationResult cdash_value(const Dataset& ds_train, const Dataset& ds_val,
                            const ChunkPartition& partition, const Architecture& arch,
                            const MetricSpec& m, const CdashConfig& cfg) {
  return CdashEngine(ds_train, ds_val, partition, arch, m, cfg).run();
}

bool truncation_met(const std::vector<std::vector<double>>& history, double eps, int max_iters) {
  if (static_cast<long long>(history.size()) >= max_iters) return true;
  if (history.size() < 2) return false;
  const auto& cur = history.back();
  const auto& prev = history[history.size() - 2];
  double change = 0.0;
  for (std::size_t j = 0; j < cur.size(); ++j) change = std::max(change, std::abs(cur[j] - prev[j]));
  const auto [lo, hi] = std::minmax_element(cur.begin(), cur.end());
  const double range = std::max(*hi - *lo, 1e-12);
  return change <= eps * range;
}

std::vector<std::size_t> rank_chunks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

std::vector<std::size_t> rank_chunks(const ValuationResult& result) {
  return rank_chunks(std::span<const double>(result.values));
}

}  // namespace chunkval
