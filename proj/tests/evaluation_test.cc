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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "chunkval/corruption.h"
#include "chunkval/evaluation.h"
#include "chunkval/synthetic.h"
#include "testing.h"

namespace chunkval {
namespace {

double mean_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

std::vector<double> uniform_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

TEST_SUITE("evaluation") {

TEST_CASE("retained and removed rows") {
  ChunkPartition p;
  p.chunks = {{0, 1}, {2, 3}, {4}, {5, 6}};
  const std::vector<double> v{0.5, -1.0, 0.5, 2.0};
  CHECK(removed_rows(p, v, 0.0).empty());
  CHECK(removed_rows(p, v, 0.25) == std::vector<std::size_t>{2, 3});
  // Tie between units 0 and 2: the lower id goes first.
  CHECK(removed_rows(p, v, 0.5) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(retained_rows(p, v, 0.5) == std::vector<std::size_t>{4, 5, 6});
  // floor(0.3 * 10) is 3 despite 0.3 * 10 < 3 in floating point.
  const ChunkPartition ten = singleton_partition(10);
  CHECK(removed_rows(ten, uniform_values(10, 1), 0.3).size() == 3);
  CHECK_THROWS_AS(removed_rows(p, v, 1.0), UsageError);
  CHECK_THROWS_AS(removed_rows(p, std::vector<double>{1, 2}, 0.2), UsageError);
}

struct Harness {
  TrainValidationSplit split;
  ChunkPartition units;
  RemovalConfig cfg;

  explicit Harness(std::uint64_t seed) {
    split = split_train_validation(make_blobs(400, 3, 2.0, seed), 0.25, seed);
    units = partition_fixed(split.train, 30);
    cfg.arch = make_architecture(split.train, {16, 8});
    cfg.metric = default_metric(Task::kClassification);
    cfg.train.epochs = 3;
    cfg.repeats = 3;
    cfg.seed = seed;
  }
};

TEST_CASE("removal at lambda 0 matches the plain harness") {
  const Harness h(1);
  const std::vector<double> lambdas{0.0, 0.2};
  const auto values = uniform_values(h.units.size(), 1);
  const RemovalCurve curve = removal_curve(h.split.train, h.split.validation, h.units, values, lambdas, h.cfg);
  CHECK(curve.repeats == 3);
  CHECK(curve.lambdas == lambdas);
  double mean = 0.0;
  std::vector<double> scores;
  for (int r = 0; r < 3; ++r) {
    TrainConfig tc = h.cfg.train;
    tc.seed = repeat_seed(h.cfg.seed, r);
    scores.push_back(evaluate_metric(train(h.split.train, h.cfg.arch, tc), h.split.validation, h.cfg.metric));
    mean += scores.back() / 3.0;
  }
  CHECK(curve.mean_scores[0] == doctest::Approx(mean).epsilon(1e-15));
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  CHECK(curve.std_scores[0] == doctest::Approx(std::sqrt(var / 2.0)).epsilon(1e-8));
  RemovalConfig threaded = h.cfg;
  threaded.threads = 3;
  CHECK(removal_curve(h.split.train, h.split.validation, h.units, values, lambdas, threaded).mean_scores ==
        curve.mean_scores);
  RemovalConfig none = h.cfg;
  none.repeats = 0;
  CHECK_THROWS_AS(removal_curve(h.split.train, h.split.validation, h.units, values, lambdas, none), UsageError);
}

TEST_CASE("removing known-bad chunks with oracle values helps") {
  // Ten sources of 100 rows; two are entirely mislabelled.
  const Dataset clean = make_source_blocks(10, 100, 4, 3, 1);
  const Dataset val = make_source_blocks(10, 40, 4, 3, 2);
  const ChunkPartition units = partition_fixed(clean, 100);
  const std::vector<std::size_t> bad{2, 7};
  const Dataset train = flip_labels_at(clean, rows_of_chunks(units, bad), 0);
  std::vector<double> oracle(10, 1.0);
  for (std::size_t b : bad) oracle[b] = -1.0;
  RemovalConfig cfg;
  cfg.arch = make_architecture(train);
  cfg.metric = default_metric(Task::kClassification);
  const std::vector<double> lambdas{0.0, 0.2};
  const RemovalCurve curve = removal_curve(train, val, units, oracle, lambdas, cfg);
  CHECK(curve.repeats == 5);
  CHECK(curve.mean_scores[1] >= curve.mean_scores[0]);
}

TEST_CASE("LOF matches the brute-force oracle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(10 + rng() % 150);
    const auto d = static_cast<Eigen::Index>(1 + rng() % 4);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    // Some exact duplicates exercise the tie handling.
    for (int dup = 0; dup < 3; ++dup) x.row(static_cast<Eigen::Index>(rng() % n)) = x.row(0);
    const int k = 1 + static_cast<int>(rng() % 8);
    const auto got = lof_scores(x, k);
    const auto want = testing::brute_force_lof(x, k);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-9 * std::max(1.0, std::abs(want[i])));
  }
}

TEST_CASE("LOF examples") {
  Eigen::MatrixXd grid(9, 2);
  for (int i = 0; i < 9; ++i) grid.row(i) << i % 3, i / 3;
  const auto g = lof_scores(grid, 3);
  // Edge midpoints reach their corners at sqrt(2).
  CHECK(g[4] == doctest::Approx(3.0 / (2.0 * std::sqrt(2.0) + 1.0)).epsilon(1e-8));

  for (double v : lof_scores(Eigen::MatrixXd::Constant(12, 3, 2.5), 4)) CHECK(v == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 0.1);
  Eigen::MatrixXd cluster(11, 2);
  for (int i = 0; i < 10; ++i) cluster.row(i) << normal(rng), normal(rng);
  cluster.row(10) << 5.0, 5.0;
  const auto c = lof_scores(cluster, 3);
  CHECK(std::max_element(c.begin(), c.end()) - c.begin() == 10);
  const auto want = testing::brute_force_lof(cluster, 3);
  CHECK(std::max_element(want.begin(), want.end()) - want.begin() == 10);

  CHECK_THROWS_AS(lof_scores(grid, 9), UsageError);
  CHECK_THROWS_AS(lof_scores(grid, 0), UsageError);
}

TEST_CASE("LOF after removal") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(500, 2);
  for (Eigen::Index i = 0; i < 500; ++i) x.row(i) << u(rng), u(rng);
  const ChunkPartition rows = singleton_partition(500);
  const double base = mean_abs(lof_scores(x, 20));
  CHECK(lof_average_after_removal(x, rows, uniform_values(500, 0), 0.0, 20) == base);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double after = lof_average_after_removal(x, rows, uniform_values(500, seed), 0.2, 20);
    CHECK(std::abs(after - base) <= 0.05 * base);
  }

  // Far outliers ranked lowest.
  Dataset ds = make_blobs(200, 2, 0.0, 3);
  const std::vector<std::size_t> far{5, 50, 120, 199};
  ds = plant_far_outliers(ds, far, 10.0, 3);
  std::vector<double> values(200, 1.0);
  for (std::size_t r : far) values[r] = -1.0;
  const ChunkPartition units = singleton_partition(200);
  CHECK(lof_average_after_removal(ds.features, units, values, 0.02, 20) <
        lof_average_after_removal(ds.features, units, values, 0.0, 20));
}

TEST_CASE("detection recall") {
  const ChunkPartition p = partition_fixed(make_blobs(100, 1, 0.0, 0), 10);
  const std::vector<std::size_t> bad{1, 4};
  const auto affected = rows_of_chunks(p, bad);
  std::vector<double> perfect(10, 1.0), inverse(10, -1.0);
  for (std::size_t b : bad) {
    perfect[b] = -1.0;
    inverse[b] = 1.0;
  }
  CHECK(detection_recall(perfect, affected, p, 0.2) == 1.0);
  CHECK(detection_recall(inverse, affected, p, 0.2) == 0.0);
  CHECK(detection_recall(inverse, affected, p, 0.8) == 0.0);
  CHECK(detection_recall(perfect, affected, p, 0.1) == 0.5);
  CHECK_THROWS_AS(detection_recall(perfect, std::vector<std::size_t>{}, p, 0.2), UsageError);

  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto mask = choose_rows(100, 0.2, seed + 1000);
    total += detection_recall(uniform_values(100, seed), mask, singleton_partition(100), 0.2);
  }
  CHECK(std::abs(total / 100.0 - 0.2) <= 0.05);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = uniform_values(10, seed);
    double last = 0.0;
    for (double lambda = 0.0; lambda < 0.95; lambda += 0.1) {
      const double r = detection_recall(v, affected, p, lambda);
      CHECK(r >= last);
      last = r;
    }
  }
}

TEST_CASE("speedup") {
  const SpeedupReport r = make_speedup_report(200.0, 1.0);
  CHECK(r.speedup == 200.0);
  CHECK(r.speedup * r.t_candidate == r.t_baseline);
  CHECK_THROWS_AS(make_speedup_report(0.0, 1.0), UsageError);

  auto work = [] {
    volatile double s = 0.0;
    for (int i = 0; i < 3'000'000; ++i) s = s + std::sqrt(static_cast<double>(i));
  };
  const SpeedupReport self = measure_speedup(work, work);
  CHECK(self.speedup >= 0.5);
  CHECK(self.speedup <= 2.0);
  CHECK(std::abs(self.speedup * self.t_candidate - self.t_baseline) <= 1e-12 * self.t_baseline);

  int calls = 0;
  CHECK(time_runner([&] { ++calls; }, true) >= 0.0);
  CHECK(calls == 2);

  auto boom = [] { throw RuntimeError("boom"); };
  try {
    measure_speedup(work, boom);
    FAIL("expected a SpeedupError");
  } catch (const SpeedupError& e) {
    REQUIRE(e.t_baseline().has_value());
    CHECK(*e.t_baseline() > 0.0);
  }
  try {
    measure_speedup(boom, work);
    FAIL("expected a SpeedupError");
  } catch (const SpeedupError& e) {
    CHECK_FALSE(e.t_baseline().has_value());
  }
  CHECK_FALSE(machine_fingerprint().empty());
}

}  // TEST_SUITE

}  // namespace
}  // namespace chunkval
