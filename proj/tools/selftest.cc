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

#include "selftest.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "chunkval/baselines.h"
#include "chunkval/evaluation.h"
#include "chunkval/synthetic.h"
#include "chunkval/valuation.h"

namespace chunkval::cli {
namespace {

bool glove_game() {
  PlayerSet ps;
  ps.units = {{0}, {1}, {2}};
  // Player 0 holds a left glove, players 1 and 2 right gloves.
  ps.utility = [](std::span<const std::size_t> s) {
    bool left = false, right = false;
    for (std::size_t p : s) (p == 0 ? left : right) = true;
    return left && right ? 1.0 : 0.0;
  };
  const auto v = exact_shapley(ps);
  return std::abs(v[0] - 2.0 / 3.0) < 1e-12 && std::abs(v[1] - 1.0 / 6.0) < 1e-12 &&
         std::abs(v[2] - 1.0 / 6.0) < 1e-12;
}

bool efficiency(std::uint64_t seed) {
  const Dataset ds = make_blobs(120, 3, 2.0, seed);
  const auto split = split_train_validation(ds, 0.25, seed);
  const ChunkPartition units = partition_fixed(split.train, 10);
  const PlayerSet game = nearest_neighbor_game(split.train, split.validation, units);
  const auto v = exact_shapley(game);
  std::vector<std::size_t> all(units.size());
  std::iota(all.begin(), all.end(), 0);
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  return std::abs(total - (game.utility(all) - game.utility({}))) < 1e-9;
}

bool gradient_check(std::uint64_t seed) {
  const Dataset ds = make_blobs(16, 3, 1.0, seed);
  Architecture arch = make_architecture(ds, {5, 4});
  Checkpoint w = init_params(arch, seed);
  // Nonzero biases keep pre-activations away from the ReLU kink.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  Eigen::VectorXd x = w.params.flatten();
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += jitter(rng);
  w.params.unflatten(x);
  const Batch b = make_batch(ds);
  const Eigen::VectorXd g = loss_gradient(w, b).flatten();
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Checkpoint plus = w, minus = w;
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    plus.params.unflatten(xp);
    minus.params.unflatten(xm);
    const double fd = (loss(plus, b) - loss(minus, b)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g(i)) / std::max(1e-8, std::abs(fd) + std::abs(g(i))));
  }
  return worst <= 1e-4;
}

struct EngineFixture {
  TrainValidationSplit split;
  ChunkPartition partition;
  Architecture arch;
  CdashConfig cfg;

  explicit EngineFixture(std::uint64_t seed) {
    split = split_train_validation(make_blobs(400, 4, 3.0, seed), 0.25, seed);
    partition = partition_fixed(split.train, 30);
    arch = make_architecture(split.train, {8, 4});
    cfg.subset_count = 8;
    cfg.chunks_per_subset = 2;
    cfg.max_iters = 3;
    cfg.eps = 0.0;
    cfg.seed = seed;
  }

  ValuationResult run(const CdashConfig& c) const {
    return cdash_value(split.train, split.validation, partition, arch,
                       default_metric(Task::kClassification), c);
  }
};

bool pool_gates(const EngineFixture& f) {
  const CdashEngine engine(f.split.train, f.split.validation, f.partition, f.arch,
                           default_metric(Task::kClassification), f.cfg);
  for (int it = 1; it <= 3; ++it) {
    const SubsetPool pool = engine.select_subsets(it);
    for (std::size_t c : pool.membership_count) {
      if (c > pool.cap) return false;
    }
    for (std::size_t s = 0; s < pool.size(); ++s) {
      if (!pool.gate_violation[s] &&
          !meets_threshold(pool.gate_scores[s], default_metric(Task::kClassification), pool.threshold))
        return false;
    }
  }
  return true;
}

bool thread_determinism(const EngineFixture& f, int threads) {
  CdashConfig one = f.cfg, many = f.cfg;
  one.threads = 1;
  many.threads = std::max(2, threads);
  return f.run(one).values == f.run(many).values;
}

bool scale_property(const EngineFixture& f) {
  CdashConfig doubled = f.cfg;
  doubled.scale_constant = 2.0 * f.cfg.scale_constant;
  const auto a = f.run(f.cfg).values;
  const auto b = f.run(doubled).values;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(b[i] - 2.0 * a[i]) > 1e-12 * std::max(1.0, std::abs(b[i]))) return false;
  }
  return rank_chunks(a) == rank_chunks(b);
}

bool truncation_cap(const EngineFixture& f) {
  return f.run(f.cfg).iterations_run == f.cfg.max_iters;
}

bool lof_outlier(std::uint64_t seed) {
  Dataset ds = make_blobs(60, 2, 0.0, seed);
  const std::vector<std::size_t> far{17};
  ds = plant_far_outliers(ds, far, 25.0, seed);
  const auto lof = lof_scores(ds.features, 10);
  return std::max_element(lof.begin(), lof.end()) - lof.begin() == 17;
}

}  // namespace

bool run_selftest(const SelftestOptions& opts, std::ostream& out) {
  const EngineFixture fixture(opts.seed);
  const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
      {"glove game values", [] { return glove_game(); }},
      {"exact shapley efficiency", [&] { return efficiency(opts.seed); }},
      {"gradient vs finite differences", [&] { return gradient_check(opts.seed); }},
      {"subset pool cap and gate", [&] { return pool_gates(fixture); }},
      {"thread-count determinism", [&] { return thread_determinism(fixture, opts.threads); }},
      {"scale constant", [&] { return scale_property(fixture); }},
      {"truncation at max iterations", [&] { return truncation_cap(fixture); }},
      {"far outlier has maximal LOF", [&] { return lof_outlier(opts.seed); }},
  };
  bool all = true;
  for (const auto& [name, check] : checks) {
    bool ok = false;
    try {
      ok = check();
    } catch (const std::exception& e) {
      out << "  (" << e.what() << ")\n";
    }
    out << (ok ? "PASS " : "FAIL ") << name << "\n";
    all = all && ok;
  }
  return all;
}

}  // namespace chunkval::cli
