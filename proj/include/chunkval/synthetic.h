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

// Seeded synthetic tables for tests, the self-test and the acceptance suite.

#ifndef CHUNKVAL_SYNTHETIC_H_
#define CHUNKVAL_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "chunkval/dataset.h"

namespace chunkval {

// Two Gaussian classes (unit variance) whose means differ by `separation`
// along the first feature; remaining features are pure noise. Class labels
// alternate randomly along the rows.
Dataset make_blobs(std::size_t n, int features, double separation, std::uint64_t seed);

// Rows arrive in blocks of `rows_per_source`, one block per source, as when
// data is collected at many sites. Each source is a tight cluster in features
// 1.. around its own centre; the label follows the shared rule
// x0 + 0.3 * noise > 0 in every source. `layout_seed` fixes the centres, so a
// second draw with the same layout covers the same sources.
Dataset make_source_blocks(int sources, int rows_per_source, int features,
                           std::uint64_t layout_seed, std::uint64_t seed);

// Hourly regression series starting 2024-01-01T00:00. Features: daily cycle
// (sin, cos), a slow drift and two noisy covariates; the target is a smooth
// function of them plus small noise, scaled to roughly unit variance.
Dataset make_hourly_series(int days, std::uint64_t seed);

// Replaces the features of `rows` by points far from the data (each
// coordinate shifted by `distance` clean standard deviations with random
// sign, plus unit noise).
Dataset plant_far_outliers(const Dataset& ds, std::span<const std::size_t> rows, double distance,
                           std::uint64_t seed);

// Inverse of encode_table for purely numeric data: feature columns, then
// "timestamp" (when present), then "target".
RawTable to_table(const Dataset& ds);

// Every row of the given chunks, ascending.
std::vector<std::size_t> rows_of_chunks(const ChunkPartition& p, std::span<const std::size_t> ids);

}  // namespace chunkval

#endif  // CHUNKVAL_SYNTHETIC_H_
