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

#include "chunkval/baselines.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "chunkval/valuation.h"

namespace chunkval {

std::vector<double> exact_shapley(const PlayerSet& ps) {
  const std::size_t p = ps.size();
  if (p == 0) return {};
  if (p > kMaxExactPlayers)
    throw UsageError("exact Shapley supports at most " + std::to_string(kMaxExactPlayers) +
                     " players, got " + std::to_string(p));
  const std::size_t num_masks = std::size_t{1} << p;
  std::vector<double> v(num_masks);
  std::vector<std::size_t> members;
  for (std::size_t mask = 0; mask < num_masks; ++mask) {
    members.clear();
    for (std::size_t i = 0; i < p; ++i) {
      if (mask & (std::size_t{1} << i)) members.push_back(i);
    }
    v[mask] = ps.utility(members);
  }
  // |Z|! (p - |Z| - 1)! / p!, from log-gamma.
  std::vector<double> weight(p);
  const double log_p_fact = std::lgamma(static_cast<double>(p) + 1.0);
  for (std::size_t z = 0; z < p; ++z) {
    weight[z] = std::exp(std::lgamma(static_cast<double>(z) + 1.0) +
                         std::lgamma(static_cast<double>(p - z)) - log_p_fact);
  }
  std::vector<double> values(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      if (mask & bit) continue;
      const auto z = static_cast<std::size_t>(std::popcount(mask));
      values[i] += weight[z] * (v[mask | bit] - v[mask]);
    }
  }
  return values;
}

namespace {

// Folds per-permutation marginal vectors into running means, in permutation
// order, until the stabilisation rule fires or the cap is reached. Blocks of
// permutations are computed concurrently; surplus ones are discarded so the
// result never depends on the thread count.
template <typename PermutationFn>
TupleValuationResult fold_permutations(std::size_t num_players, int max_permutations,
                                       double eps, int threads, PermutationFn&& run_one) {
  const auto start = std::chrono::steady_clock::now();
  TupleValuationResult result;
  std::vector<double> sums(num_players, 0.0);
  const auto block = static_cast<std::size_t>(std::max(1, threads));
  bool done = false;
  for (int first = 0; !done; first += static_cast<int>(block)) {
    const std::size_t count = std::min<std::size_t>(
        block, static_cast<std::size_t>(max_permutations - first));
    std::vector<std::vector<double>> marginals(count);
    parallel_for(count, threads, [&](std::size_t b) {
      marginals[b] = run_one(static_cast<std::uint64_t>(first) + b);
    });
    for (std::size_t b = 0; b < count && !done; ++b) {
      const int t = first + static_cast<int>(b) + 1;
      std::vector<double> means(num_players);
      for (std::size_t i = 0; i < num_players; ++i) {
        sums[i] += marginals[b][i];
        means[i] = sums[i] / static_cast<double>(t);
      }
      result.history.push_back(std::move(means));
      result.iterations = t;
      const bool stable = result.history.size() >= 2 &&
                          truncation_met(result.history, eps, std::numeric_limits<int>::max());
      if (stable || t >= max_permutations) {
        result.converged = stable;
        done = true;
      }
    }
  }
  result.values = result.history.back();
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void check_budget(std::size_t players, int max_permutations, std::size_t budget) {
  if (max_permutations < 1) throw UsageError("max permutations must be at least 1");
  if (players == 0) throw UsageError("no players to value");
  if (players * static_cast<std::size_t>(max_permutations) > budget)
    throw UsageError("budget exceeded: " + std::to_string(players) + " players x " +
                     std::to_string(max_permutations) + " permutations > " +
                     std::to_string(budget));
}

std::vector<std::size_t> coalition_rows(const ChunkPartition& units,
                                        std::span<const std::size_t> players) {
  std::vector<std::size_t> rows;
  for (std::size_t p : players) rows.insert(rows.end(), units.chunks[p].begin(), units.chunks[p].end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

TupleValuationResult tmc_shapley(const PlayerSet& ps, const TmcConfig& cfg) {
  const std::size_t n = ps.size();
  check_budget(n, cfg.max_permutations, cfg.budget);
  if (!(cfg.tolerance >= 0.0)) throw UsageError("tolerance must be non-negative");
  std::vector<std::size_t> everyone(n);
  std::iota(everyone.begin(), everyone.end(), 0);
  const double v_full = ps.utility(everyone);
  const double v_empty = ps.utility({});
  return fold_permutations(n, cfg.max_permutations, cfg.eps, cfg.threads, [&](std::uint64_t t) {
    const auto order = permutation(n, derive_seed(cfg.seed, {0x73c, t}));
    std::vector<double> marginal(n, 0.0);
    std::vector<std::size_t> prefix;
    prefix.reserve(n);
    double prev = v_empty;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const auto it = std::upper_bound(prefix.begin(), prefix.end(), order[pos]);
      prefix.insert(it, order[pos]);
      const double v = ps.utility(prefix);
      marginal[order[pos]] = v - prev;
      prev = v;
      if (std::abs(v_full - v) <= cfg.tolerance) break;  // later marginals stay 0
    }
    return marginal;
  });
}

TupleValuationResult tmc_shapley(const Dataset& ds_train, const Dataset& ds_val,
                                 const Architecture& arch, const MetricSpec& m,
                                 const TmcConfig& cfg) {
  check_budget(ds_train.rows(), cfg.max_permutations, cfg.budget);
  const PlayerSet game = mlp_game(ds_train, ds_val, singleton_partition(ds_train.rows()), arch, m,
                                  cfg.eta, cfg.epochs_per_fit, derive_seed(cfg.seed, {0x1417}));
  return tmc_shapley(game, cfg);
}

TupleValuationResult g_shapley(const Dataset& ds_train, const Dataset& ds_val,
                               const Architecture& arch, const MetricSpec& m,
                               const GShapleyConfig& cfg) {
  const std::size_t n = ds_train.rows();
  check_budget(n, cfg.max_permutations, cfg.budget);
  if (cfg.eta < 0.0) throw UsageError("eta must be non-negative");
  std::vector<Batch> rows(n);
  for (std::size_t r = 0; r < n; ++r) rows[r] = make_batch(ds_train, std::span(&r, 1));
  const Batch val = make_batch(ds_val);
  return fold_permutations(n, cfg.max_permutations, cfg.eps, cfg.threads, [&](std::uint64_t t) {
    const auto order = permutation(n, derive_seed(cfg.seed, {0x65a, t}));
    Checkpoint w = init_params(arch, derive_seed(cfg.seed, {0x1417, t}));
    double prev = evaluate_metric(w, val, m);
    std::vector<double> marginal(n, 0.0);
    for (std::size_t r : order) {
      w = sgd_step(w, rows[r], cfg.eta);
      const double cur = evaluate_metric(w, val, m);
      marginal[r] = cur - prev;
      prev = cur;
    }
    return marginal;
  });
}

std::vector<double> chunk_average(std::span<const double> tuple_values,
                                  const ChunkPartition& partition) {
  const std::size_t n = tuple_values.size();
  std::vector<double> out;
  out.reserve(partition.size());
  for (const auto& chunk : partition.chunks) {
    if (chunk.empty()) throw UsageError("partition has an empty chunk");
    double sum = 0.0;
    for (std::size_t r : chunk) {
      if (r >= n) throw UsageError("tuple values do not cover the partition");
      sum += tuple_values[r];
    }
    out.push_back(sum / static_cast<double>(chunk.size()));
  }
  if (partition.total_rows() != n) throw UsageError("tuple value count does not match the partition");
  return out;
}

// ---------------------------------------------------------------------------
// Games

PlayerSet nearest_neighbor_game(const Dataset& train, const Dataset& eval,
                                const ChunkPartition& units) {
  if (train.task != Task::kClassification) throw UsageError("1-NN game needs classification data");
  PlayerSet ps;
  ps.units = units.chunks;
  // Distances are fixed, so precompute them once.
  Eigen::MatrixXd dist(static_cast<Eigen::Index>(eval.rows()), static_cast<Eigen::Index>(train.rows()));
  for (Eigen::Index e = 0; e < dist.rows(); ++e)
    for (Eigen::Index r = 0; r < dist.cols(); ++r)
      dist(e, r) = (eval.features.row(e) - train.features.row(r)).squaredNorm();
  Eigen::VectorXd train_y = train.targets;
  Eigen::VectorXd eval_y = eval.targets;
  ps.utility = [units, dist, train_y, eval_y](std::span<const std::size_t> players) {
    const auto rows = coalition_rows(units, players);
    if (rows.empty()) return 0.0;
    std::size_t correct = 0;
    for (Eigen::Index e = 0; e < dist.rows(); ++e) {
      std::size_t best = rows.front();
      for (std::size_t r : rows) {
        if (dist(e, static_cast<Eigen::Index>(r)) < dist(e, static_cast<Eigen::Index>(best))) best = r;
      }
      if (train_y(static_cast<Eigen::Index>(best)) == eval_y(e)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dist.rows());
  };
  return ps;
}

PlayerSet least_squares_game(const Dataset& train, const Dataset& eval,
                             const ChunkPartition& units) {
  PlayerSet ps;
  ps.units = units.chunks;
  const Dataset tr = train;
  const Dataset ev = eval;
  ps.utility = [units, tr, ev](std::span<const std::size_t> players) {
    const auto rows = coalition_rows(units, players);
    const auto n_eval = static_cast<double>(ev.rows());
    if (rows.empty()) return -std::sqrt(ev.targets.squaredNorm() / n_eval);
    const auto f = tr.features.cols();
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), f + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(rows[i]);
      a.row(static_cast<Eigen::Index>(i)) << tr.features.row(r), 1.0;
      b(static_cast<Eigen::Index>(i)) = tr.targets(r);
    }
    const Eigen::VectorXd coef = a.completeOrthogonalDecomposition().solve(b);
    const Eigen::VectorXd pred = ev.features * coef.head(f) +
                                 Eigen::VectorXd::Constant(ev.features.rows(), coef(f));
    return -std::sqrt((pred - ev.targets).squaredNorm() / n_eval);
  };
  return ps;
}

PlayerSet mlp_game(const Dataset& train, const Dataset& val, const ChunkPartition& units,
                   const Architecture& arch, const MetricSpec& m, double eta, int epochs,
                   std::uint64_t seed) {
  if (epochs < 1) throw UsageError("epochs per fit must be at least 1");
  PlayerSet ps;
  ps.units = units.chunks;
  const Checkpoint w0 = init_params(arch, seed);
  auto shared_train = std::make_shared<const Dataset>(train);
  auto val_batch = std::make_shared<const Batch>(make_batch(val));
  ps.utility = [units, w0, shared_train, val_batch, m, eta, epochs](
                   std::span<const std::size_t> players) {
    const auto rows = coalition_rows(units, players);
    if (rows.empty()) return evaluate_metric(w0, *val_batch, m);
    const Batch batch = make_batch(*shared_train, rows);
    Checkpoint w = w0;
    for (int e = 0; e < epochs; ++e) w = sgd_step(w, batch, eta);
    return evaluate_metric(w, *val_batch, m);
  };
  return ps;
}

}  // namespace chunkval
