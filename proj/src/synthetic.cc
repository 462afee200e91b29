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

#include "chunkval/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace chunkval {

Dataset make_blobs(std::size_t n, int features, double separation, std::uint64_t seed) {
  if (n == 0 || features < 1) throw UsageError("blobs need n >= 1 and at least one feature");
  std::mt19937_64 rng(derive_seed(seed, {0xb10b}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Dataset ds;
  ds.task = Task::kClassification;
  ds.num_classes = 2;
  ds.class_names = {"0", "1"};
  ds.features.resize(static_cast<Eigen::Index>(n), features);
  ds.targets.resize(static_cast<Eigen::Index>(n));
  for (int c = 0; c < features; ++c) {
    ds.feature_names.push_back("x" + std::to_string(c));
    ds.is_indicator.push_back(false);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const int label = coin(rng) ? 1 : 0;
    ds.targets(i) = label;
    for (int c = 0; c < features; ++c) ds.features(i, c) = normal(rng);
    ds.features(i, 0) += (label == 1 ? 0.5 : -0.5) * separation;
    ds.source_rows.push_back(r);
  }
  return ds;
}

Dataset make_source_blocks(int sources, int rows_per_source, int features,
                           std::uint64_t layout_seed, std::uint64_t seed) {
  if (sources < 1 || rows_per_source < 1 || features < 2)
    throw UsageError("source blocks need a source, a row per source and two features");
  constexpr double kSpread = 3.0;
  constexpr double kWidth = 0.5;
  std::mt19937_64 layout(derive_seed(layout_seed, {0x1a70}));
  std::mt19937_64 rng(derive_seed(seed, {0x50c}));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd centres(sources, features);
  for (int s = 0; s < sources; ++s) {
    centres(s, 0) = 0.0;
    for (int c = 1; c < features; ++c) centres(s, c) = kSpread * normal(layout);
  }
  const auto n = static_cast<std::size_t>(sources) * static_cast<std::size_t>(rows_per_source);
  Dataset ds;
  ds.task = Task::kClassification;
  ds.num_classes = 2;
  ds.class_names = {"0", "1"};
  ds.features.resize(static_cast<Eigen::Index>(n), features);
  ds.targets.resize(static_cast<Eigen::Index>(n));
  for (int c = 0; c < features; ++c) {
    ds.feature_names.push_back("x" + std::to_string(c));
    ds.is_indicator.push_back(false);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const auto s = static_cast<Eigen::Index>(r / static_cast<std::size_t>(rows_per_source));
    ds.features(i, 0) = normal(rng);
    for (int c = 1; c < features; ++c) ds.features(i, c) = centres(s, c) + kWidth * normal(rng);
    ds.targets(i) = ds.features(i, 0) + 0.3 * normal(rng) > 0.0 ? 1 : 0;
    ds.source_rows.push_back(r);
  }
  return ds;
}

Dataset make_hourly_series(int days, std::uint64_t seed) {
  if (days < 1) throw UsageError("series needs at least one day");
  std::mt19937_64 rng(derive_seed(seed, {0x5e71e5}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<std::size_t>(days) * 24;
  const std::int64_t start = parse_timestamp("2024-01-01T00:00:00");
  Dataset ds;
  ds.task = Task::kRegression;
  ds.feature_names = {"hour_sin", "hour_cos", "drift", "cov_a", "cov_b"};
  ds.is_indicator.assign(ds.feature_names.size(), false);
  ds.features.resize(static_cast<Eigen::Index>(n), 5);
  ds.targets.resize(static_cast<Eigen::Index>(n));
  double drift = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(r % 24) / 24.0;
    drift = 0.98 * drift + 0.2 * normal(rng);
    const double a = normal(rng);
    const double b = normal(rng);
    ds.features(i, 0) = std::sin(phase);
    ds.features(i, 1) = std::cos(phase);
    ds.features(i, 2) = drift;
    ds.features(i, 3) = a;
    ds.features(i, 4) = b;
    // Roughly unit variance; full-batch summed-gradient steps diverge on
    // targets an order of magnitude larger.
    ds.targets(i) = (4.0 * std::sin(phase) + 2.0 * std::cos(phase) + 3.0 * drift + 2.5 * a -
                     1.5 * b + 0.3 * normal(rng)) /
                    5.0;
    ds.timestamps.push_back(start + static_cast<std::int64_t>(r) * 3600);
    ds.source_rows.push_back(r);
  }
  return ds;
}

Dataset plant_far_outliers(const Dataset& ds, std::span<const std::size_t> rows, double distance,
                           std::uint64_t seed) {
  Dataset out = ds;
  std::mt19937_64 rng(derive_seed(seed, {0x0a71}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double n = static_cast<double>(ds.rows());
  for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
    const double mean = ds.features.col(c).mean();
    const double sd = std::sqrt((ds.features.col(c).array() - mean).square().sum() / std::max(1.0, n - 1));
    for (std::size_t r : rows) {
      const double sign = coin(rng) ? 1.0 : -1.0;
      out.features(static_cast<Eigen::Index>(r), c) = mean + sd * (sign * distance + normal(rng));
    }
  }
  return out;
}

RawTable to_table(const Dataset& ds) {
  RawTable t;
  t.header = ds.feature_names;
  if (ds.has_timestamps()) t.header.push_back("timestamp");
  t.header.push_back("target");
  char buf[64];
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    std::vector<std::string> row;
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g",
                    ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      row.emplace_back(buf);
    }
    if (ds.has_timestamps()) row.push_back(format_timestamp(ds.timestamps[r]));
    const double y = ds.targets(static_cast<Eigen::Index>(r));
    if (ds.task == Task::kClassification && !ds.class_names.empty()) {
      row.push_back(ds.class_names[static_cast<std::size_t>(y)]);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", y);
      row.emplace_back(buf);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::size_t> rows_of_chunks(const ChunkPartition& p, std::span<const std::size_t> ids) {
  std::vector<std::size_t> rows;
  for (std::size_t id : ids) rows.insert(rows.end(), p.chunks.at(id).begin(), p.chunks.at(id).end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace chunkval
