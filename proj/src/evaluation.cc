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

#include "chunkval/evaluation.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "chunkval/valuation.h"

namespace chunkval {

namespace {

std::size_t removal_count(std::size_t units, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw UsageError("lambda must lie in [0, 1)");
  // The small offset keeps products like 0.29 * 100 from flooring to 28.
  return static_cast<std::size_t>(std::floor(lambda * static_cast<double>(units) + 1e-9));
}

std::vector<bool> removed_mask(const ChunkPartition& units, std::span<const double> values,
                               double lambda) {
  if (values.size() != units.size())
    throw UsageError("got " + std::to_string(values.size()) + " values for " +
                     std::to_string(units.size()) + " units");
  const std::size_t drop = removal_count(units.size(), lambda);
  if (drop >= units.size()) throw UsageError("lambda removes every unit");
  const auto order = rank_chunks(values);
  std::vector<bool> removed(units.size(), false);
  for (std::size_t i = 0; i < drop; ++i) removed[order[i]] = true;
  return removed;
}

std::vector<std::size_t> collect_rows(const ChunkPartition& units, const std::vector<bool>& mask,
                                      bool want) {
  std::vector<std::size_t> rows;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (mask[u] == want) rows.insert(rows.end(), units.chunks[u].begin(), units.chunks[u].end());
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

std::vector<std::size_t> retained_rows(const ChunkPartition& units, std::span<const double> values,
                                       double lambda) {
  return collect_rows(units, removed_mask(units, values, lambda), false);
}

std::vector<std::size_t> removed_rows(const ChunkPartition& units, std::span<const double> values,
                                      double lambda) {
  return collect_rows(units, removed_mask(units, values, lambda), true);
}

std::uint64_t repeat_seed(std::uint64_t master, int repeat) {
  return derive_seed(master, {0x7e9, static_cast<std::uint64_t>(repeat)});
}

RemovalCurve removal_curve(const Dataset& ds_train, const Dataset& ds_val,
                           const ChunkPartition& units, std::span<const double> values,
                           std::span<const double> lambdas, const RemovalConfig& cfg) {
  if (cfg.repeats < 1) throw UsageError("repeats must be at least 1");
  if (lambdas.empty()) throw UsageError("no lambdas given");
  RemovalCurve curve;
  curve.repeats = cfg.repeats;
  const Batch val = make_batch(ds_val);
  for (double lambda : lambdas) {
    const Dataset kept = select_rows(ds_train, retained_rows(units, values, lambda));
    std::vector<double> scores(static_cast<std::size_t>(cfg.repeats));
    parallel_for(scores.size(), cfg.threads, [&](std::size_t r) {
      TrainConfig tc = cfg.train;
      tc.seed = repeat_seed(cfg.seed, static_cast<int>(r));
      scores[r] = evaluate_metric(train(kept, cfg.arch, tc), val, cfg.metric);
    });
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    const double sd = scores.size() > 1 ? std::sqrt(var / static_cast<double>(scores.size() - 1)) : 0.0;
    curve.lambdas.push_back(lambda);
    curve.mean_scores.push_back(mean);
    curve.std_scores.push_back(sd);
  }
  return curve;
}

std::vector<double> lof_scores(const Eigen::MatrixXd& points, int k_neighbors) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k_neighbors < 1) throw UsageError("LOF needs k >= 1");
  if (n <= static_cast<std::size_t>(k_neighbors))
    throw UsageError("LOF needs more than k = " + std::to_string(k_neighbors) + " points");
  const auto k = static_cast<std::size_t>(k_neighbors);

  struct Neighbor {
    std::size_t index;
    double dist;
  };
  std::vector<std::vector<Neighbor>> neighbors(n);
  std::vector<double> k_distance(n);
  std::vector<double> dist(n);
  std::vector<double> scratch;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t o = 0; o < n; ++o)
      dist[o] = (points.row(static_cast<Eigen::Index>(p)) - points.row(static_cast<Eigen::Index>(o))).norm();
    scratch.clear();
    for (std::size_t o = 0; o < n; ++o) {
      if (o != p) scratch.push_back(dist[o]);
    }
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
    k_distance[p] = scratch[k - 1];
    for (std::size_t o = 0; o < n; ++o) {
      if (o != p && dist[o] <= k_distance[p]) neighbors[p].push_back({o, dist[o]});
    }
  }
  std::vector<double> lrd(n);
  for (std::size_t p = 0; p < n; ++p) {
    double reach = 0.0;
    for (const auto& nb : neighbors[p]) reach += std::max(k_distance[nb.index], nb.dist);
    lrd[p] = 1.0 / (reach / static_cast<double>(neighbors[p].size()) + 1e-10);
  }
  std::vector<double> lof(n);
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (const auto& nb : neighbors[p]) sum += lrd[nb.index];
    lof[p] = sum / static_cast<double>(neighbors[p].size()) / lrd[p];
  }
  return lof;
}

double lof_average_after_removal(const Eigen::MatrixXd& points, const ChunkPartition& units,
                                 std::span<const double> values, double lambda, int k_neighbors) {
  const auto rows = retained_rows(units, values, lambda);
  Eigen::MatrixXd kept(static_cast<Eigen::Index>(rows.size()), points.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    kept.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(rows[i]));
  const auto lof = lof_scores(kept, k_neighbors);
  double sum = 0.0;
  for (double v : lof) sum += std::abs(v);
  return sum / static_cast<double>(lof.size());
}

double detection_recall(std::span<const double> values, std::span<const std::size_t> affected,
                        const ChunkPartition& units, double lambda) {
  if (affected.empty()) throw UsageError("empty corruption mask");
  const auto removed = removed_rows(units, values, lambda);
  const std::set<std::size_t> removed_set(removed.begin(), removed.end());
  std::size_t hit = 0;
  for (std::size_t r : affected) hit += removed_set.count(r);
  return static_cast<double>(hit) / static_cast<double>(affected.size());
}

double time_runner(const std::function<void()>& fn, bool warmup) {
  if (warmup) fn();
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SpeedupReport make_speedup_report(double t_baseline, double t_candidate) {
  if (!(t_baseline > 0.0) || !(t_candidate > 0.0)) throw UsageError("timings must be positive");
  return SpeedupReport{t_baseline, t_candidate, t_baseline / t_candidate};
}

SpeedupReport measure_speedup(const std::function<void()>& baseline,
                              const std::function<void()>& candidate, bool warmup) {
  double t_base = 0.0;
  try {
    t_base = time_runner(baseline, warmup);
  } catch (const std::exception& e) {
    throw SpeedupError(std::string("baseline runner failed: ") + e.what(), std::nullopt);
  }
  double t_cand = 0.0;
  try {
    t_cand = time_runner(candidate, warmup);
  } catch (const std::exception& e) {
    throw SpeedupError(std::string("candidate runner failed: ") + e.what(), t_base);
  }
  return make_speedup_report(t_base, t_cand);
}

std::string machine_fingerprint() {
  char host[256] = {};
  if (gethostname(host, sizeof(host) - 1) != 0) host[0] = '\0';
  std::ostringstream out;
  out << "host=" << host << ";cores=" << std::thread::hardware_concurrency();
#if defined(__clang__)
  out << ";compiler=clang-" << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
  out << ";compiler=gcc-" << __GNUC__ << "." << __GNUC_MINOR__;
#endif
  long pages = sysconf(_SC_PHYS_PAGES);
  long page_size = sysconf(_SC_PAGE_SIZE);
  if (pages > 0 && page_size > 0) out << ";mem_mb=" << (pages / 1024) * page_size / 1024;
  return out.str();
}

}  // namespace chunkval
