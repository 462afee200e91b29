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
#include <set>

#include "chunkval/corruption.h"
#include "chunkval/synthetic.h"

namespace chunkval {
namespace {

// Rows whose features or target differ (NaN counts as different).
std::vector<std::size_t> changed_rows(const Dataset& a, const Dataset& b) {
  std::vector<std::size_t> out;
  for (Eigen::Index r = 0; r < a.features.rows(); ++r) {
    bool same = a.targets(r) == b.targets(r);
    for (Eigen::Index c = 0; c < a.features.cols(); ++c) same = same && a.features(r, c) == b.features(r, c);
    if (!same) out.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

Dataset three_class(std::size_t n, std::uint64_t seed) {
  Dataset ds = make_blobs(n, 3, 1.0, seed);
  ds.num_classes = 3;
  ds.class_names = {"a", "b", "c"};
  for (Eigen::Index i = 0; i < ds.targets.size(); ++i) ds.targets(i) = static_cast<double>(i % 3);
  return ds;
}

TEST_SUITE("corruption") {

TEST_CASE("row choice") {
  const auto rows = choose_rows(1000, 0.2, 1);
  CHECK(rows.size() == 200);
  CHECK(std::is_sorted(rows.begin(), rows.end()));
  CHECK(std::set<std::size_t>(rows.begin(), rows.end()).size() == 200);
  CHECK(rows.back() < 1000);
  CHECK(choose_rows(1000, 0.2, 1) == rows);
  CHECK(choose_rows(1000, 0.2, 2) != rows);
  CHECK(choose_rows(7, 1.0, 0).size() == 7);
  CHECK_THROWS_AS(choose_rows(10, 0.0, 0), UsageError);
  CHECK_THROWS_AS(choose_rows(10, 1.5, 0), UsageError);
}

TEST_CASE("gaussian noise") {
  const Dataset ds = make_blobs(1000, 4, 2.0, 3);
  const auto [noisy, report] = inject_gaussian_noise(ds, 0.2, 1.0, 3);
  CHECK(report.kind == CorruptionKind::kGaussianNoise);
  CHECK(report.affected_rows.size() == 200);
  CHECK(report.sigma == 1.0);
  CHECK(changed_rows(ds, noisy) == report.affected_rows);
  CHECK(noisy.targets == ds.targets);

  const auto [quiet, r2] = inject_gaussian_noise(ds, 0.2, 1e-12, 3);
  CHECK((quiet.features - ds.features).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK_THROWS_AS(inject_gaussian_noise(ds, 0.2, 0.0, 3), UsageError);
}

TEST_CASE("noise scale follows the clean column spread") {
  const Dataset ds = make_blobs(2000, 3, 4.0, 5);
  const double sigma = 0.7;
  const auto [noisy, report] = inject_gaussian_noise(ds, 0.5, sigma, 5);
  for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
    const auto col = ds.features.col(c);
    const double clean_std = std::sqrt((col.array() - col.mean()).square().sum() / static_cast<double>(col.size() - 1));
    std::vector<double> delta;
    for (std::size_t r : report.affected_rows) {
      const auto i = static_cast<Eigen::Index>(r);
      delta.push_back(noisy.features(i, c) - ds.features(i, c));
    }
    double mean = 0.0;
    for (double d : delta) mean += d;
    mean /= static_cast<double>(delta.size());
    double var = 0.0;
    for (double d : delta) var += (d - mean) * (d - mean);
    const double sd = std::sqrt(var / static_cast<double>(delta.size() - 1));
    CHECK(std::abs(sd - sigma * clean_std) <= 0.2 * sigma * clean_std);
  }
}

TEST_CASE("indicator columns are never perturbed") {
  Dataset ds = make_blobs(100, 3, 1.0, 6);
  ds.is_indicator = {false, true, false};
  for (Eigen::Index i = 0; i < 100; ++i) ds.features(i, 1) = i % 2;
  const auto [noisy, report] = inject_gaussian_noise(ds, 1.0, 1.0, 6);
  CHECK(noisy.features.col(1) == ds.features.col(1));
  Dataset all_ind = ds;
  all_ind.is_indicator = {true, true, true};
  CHECK_THROWS_AS(inject_gaussian_noise(all_ind, 0.5, 1.0, 6), UsageError);
}

TEST_CASE("binary label flips") {
  const Dataset ds = make_blobs(100, 2, 1.0, 7);
  const auto [flipped, report] = flip_labels(ds, 0.2, 7);
  CHECK(report.affected_rows.size() == 20);
  CHECK(changed_rows(ds, flipped) == report.affected_rows);
  for (std::size_t r : report.affected_rows) {
    const auto i = static_cast<Eigen::Index>(r);
    CHECK(flipped.targets(i) == 1.0 - ds.targets(i));
  }
  const Dataset back = flip_labels_at(flipped, report.affected_rows, 99);
  CHECK(back.targets == ds.targets);
  CHECK(back.features == ds.features);
}

TEST_CASE("multi-class flips always change the label") {
  const Dataset ds = three_class(300, 8);
  const auto [flipped, report] = flip_labels(ds, 0.5, 8);
  CHECK(report.affected_rows.size() == 150);
  std::set<double> seen;
  for (std::size_t r : report.affected_rows) {
    const auto i = static_cast<Eigen::Index>(r);
    CHECK(flipped.targets(i) != ds.targets(i));
    CHECK(flipped.targets(i) >= 0.0);
    CHECK(flipped.targets(i) <= 2.0);
    seen.insert(flipped.targets(i) - ds.targets(i));
  }
  CHECK(seen.size() > 2);  // both alternatives are used
  Dataset reg = ds;
  reg.task = Task::kRegression;
  CHECK_THROWS_AS(flip_labels(reg, 0.2, 0), UsageError);
}

TEST_CASE("missing cells") {
  const Dataset ds = make_blobs(100, 4, 1.0, 9);
  const auto [holed, report] = inject_missing(ds, 0.1, 9);
  CHECK(report.affected_rows.size() == 10);
  CHECK(changed_rows(ds, holed) == report.affected_rows);
  for (std::size_t r : report.affected_rows) {
    int nan = 0;
    for (Eigen::Index c = 0; c < 4; ++c) nan += std::isnan(holed.features(static_cast<Eigen::Index>(r), c));
    CHECK(nan == 1);
  }
  CHECK(apply_missing_policy(holed, MissingPolicy::kDropRow).rows() == 90);

  const Dataset imputed = apply_missing_policy(holed, MissingPolicy::kMeanImpute);
  CHECK(imputed.rows() == 100);
  for (std::size_t r : report.affected_rows) {
    const auto i = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < 4; ++c) {
      if (!std::isnan(holed.features(i, c))) continue;
      double sum = 0.0;
      int count = 0;
      for (Eigen::Index k = 0; k < 100; ++k) {
        if (!std::isnan(holed.features(k, c))) {
          sum += holed.features(k, c);
          ++count;
        }
      }
      CHECK(std::abs(imputed.features(i, c) - sum / count) <= 1e-12);
    }
  }
}

TEST_CASE("injectors are deterministic") {
  const Dataset ds = make_blobs(200, 3, 1.0, 10);
  CHECK(inject_gaussian_noise(ds, 0.3, 1.0, 4).first.features ==
        inject_gaussian_noise(ds, 0.3, 1.0, 4).first.features);
  CHECK(flip_labels(ds, 0.3, 4).first.targets == flip_labels(ds, 0.3, 4).first.targets);
  CHECK(inject_missing(ds, 0.3, 4).second.affected_rows == inject_missing(ds, 0.3, 4).second.affected_rows);
  CHECK(parse_corruption_kind(to_string(CorruptionKind::kMissing)) == CorruptionKind::kMissing);
  CHECK_THROWS_AS(parse_corruption_kind("smudge"), UsageError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace chunkval
