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

#include "chunkval/corruption.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace chunkval {

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kGaussianNoise: return "noise";
    case CorruptionKind::kLabelFlip: return "flip";
    case CorruptionKind::kMissing: return "missing";
  }
  return "flip";
}

CorruptionKind parse_corruption_kind(const std::string& name) {
  if (name == "noise" || name == "gaussian_noise") return CorruptionKind::kGaussianNoise;
  if (name == "flip" || name == "label_flip") return CorruptionKind::kLabelFlip;
  if (name == "missing") return CorruptionKind::kMissing;
  throw UsageError("unknown corruption kind '" + name + "'");
}

namespace {

void check_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("fraction must lie in (0, 1]");
}

}  // namespace

std::vector<std::size_t> choose_rows(std::size_t n, double fraction, std::uint64_t seed) {
  check_fraction(fraction);
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, {0xc0, 1}));
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(m, n));
  std::sort(order.begin(), order.end());
  return order;
}

Dataset add_gaussian_noise(const Dataset& ds, std::span<const std::size_t> rows, double sigma,
                           std::uint64_t seed) {
  if (!(sigma > 0.0)) throw UsageError("sigma must be positive");
  std::vector<Eigen::Index> numeric;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    if (c >= ds.is_indicator.size() || !ds.is_indicator[c]) numeric.push_back(static_cast<Eigen::Index>(c));
  }
  if (numeric.empty()) throw UsageError("dataset has no numeric features to perturb");
  Dataset out = ds;
  const auto n = static_cast<double>(ds.rows());
  std::mt19937_64 rng(derive_seed(seed, {0xc0, 2}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> scale;
  for (Eigen::Index c : numeric) {
    const double mean = ds.features.col(c).mean();
    const double var = n > 1 ? (ds.features.col(c).array() - mean).square().sum() / (n - 1) : 0.0;
    scale.push_back(sigma * std::sqrt(var));
  }
  for (std::size_t r : rows) {
    for (std::size_t i = 0; i < numeric.size(); ++i)
      out.features(static_cast<Eigen::Index>(r), numeric[i]) += scale[i] * normal(rng);
  }
  return out;
}

std::pair<Dataset, CorruptionReport> inject_gaussian_noise(const Dataset& ds, double fraction,
                                                           double sigma, std::uint64_t seed) {
  CorruptionReport report{CorruptionKind::kGaussianNoise, choose_rows(ds.rows(), fraction, seed),
                          fraction, sigma, seed};
  Dataset out = add_gaussian_noise(ds, report.affected_rows, sigma, seed);
  return {std::move(out), std::move(report)};
}

Dataset flip_labels_at(const Dataset& ds, std::span<const std::size_t> rows, std::uint64_t seed) {
  if (ds.task != Task::kClassification) throw UsageError("label flipping needs a classification task");
  if (ds.num_classes < 2) throw UsageError("label flipping needs at least 2 classes");
  Dataset out = ds;
  std::mt19937_64 rng(derive_seed(seed, {0xc0, 3}));
  std::uniform_int_distribution<int> other(0, ds.num_classes - 2);
  for (std::size_t r : rows) {
    const auto old = static_cast<int>(ds.targets(static_cast<Eigen::Index>(r)));
    const int draw = other(rng);
    out.targets(static_cast<Eigen::Index>(r)) = draw >= old ? draw + 1 : draw;
  }
  return out;
}

std::pair<Dataset, CorruptionReport> flip_labels(const Dataset& ds, double fraction,
                                                 std::uint64_t seed) {
  if (ds.task != Task::kClassification) throw UsageError("label flipping needs a classification task");
  CorruptionReport report{CorruptionKind::kLabelFlip, choose_rows(ds.rows(), fraction, seed),
                          fraction, 0.0, seed};
  Dataset out = flip_labels_at(ds, report.affected_rows, seed);
  return {std::move(out), std::move(report)};
}

std::pair<Dataset, CorruptionReport> inject_missing(const Dataset& ds, double fraction,
                                                    std::uint64_t seed) {
  CorruptionReport report{CorruptionKind::kMissing, choose_rows(ds.rows(), fraction, seed),
                          fraction, 0.0, seed};
  Dataset out = ds;
  std::mt19937_64 rng(derive_seed(seed, {0xc0, 4}));
  std::uniform_int_distribution<Eigen::Index> cell(0, ds.features.cols() - 1);
  for (std::size_t r : report.affected_rows)
    out.features(static_cast<Eigen::Index>(r), cell(rng)) = std::numeric_limits<double>::quiet_NaN();
  return {std::move(out), std::move(report)};
}

}  // namespace chunkval
