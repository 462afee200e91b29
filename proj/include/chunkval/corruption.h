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

#ifndef CHUNKVAL_CORRUPTION_H_
#define CHUNKVAL_CORRUPTION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chunkval/dataset.h"

namespace chunkval {

enum class CorruptionKind { kGaussianNoise, kLabelFlip, kMissing };

std::string to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(const std::string& name);

struct CorruptionReport {
  CorruptionKind kind = CorruptionKind::kLabelFlip;
  std::vector<std::size_t> affected_rows;  // ascending row indices of the input
  double fraction = 0.0;
  double sigma = 0.0;  // gaussian noise only
  std::uint64_t seed = 0;
};

// round(fraction * n) distinct rows chosen uniformly, ascending.
std::vector<std::size_t> choose_rows(std::size_t n, double fraction, std::uint64_t seed);

// Adds N(0, (sigma * clean column std)^2) to every non-indicator feature of
// the chosen rows. Targets are untouched.
std::pair<Dataset, CorruptionReport> inject_gaussian_noise(const Dataset& ds, double fraction,
                                                           double sigma, std::uint64_t seed);
// Noise on an explicit row set.
Dataset add_gaussian_noise(const Dataset& ds, std::span<const std::size_t> rows, double sigma,
                           std::uint64_t seed);

// Replaces each chosen label with a uniformly drawn different class.
std::pair<Dataset, CorruptionReport> flip_labels(const Dataset& ds, double fraction,
                                                 std::uint64_t seed);
Dataset flip_labels_at(const Dataset& ds, std::span<const std::size_t> rows, std::uint64_t seed);

// Marks one uniformly chosen feature cell per chosen row as missing (NaN).
// The result must go through apply_missing_policy before training.
std::pair<Dataset, CorruptionReport> inject_missing(const Dataset& ds, double fraction,
                                                    std::uint64_t seed);

}  // namespace chunkval

#endif  // CHUNKVAL_CORRUPTION_H_
