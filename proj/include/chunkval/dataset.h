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

#ifndef CHUNKVAL_DATASET_H_
#define CHUNKVAL_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "chunkval/common.h"

namespace chunkval {

enum class MissingPolicy { kDropRow, kMeanImpute };

std::string to_string(MissingPolicy policy);
MissingPolicy parse_missing_policy(const std::string& name);

struct Schema {
  std::string target_column;
  Task task = Task::kClassification;
  std::vector<std::string> categorical_columns;
  std::optional<std::string> timestamp_column;
  char delimiter = ',';
  MissingPolicy missing_policy = MissingPolicy::kDropRow;
};

// Encoded, numeric view of a table. Missing feature cells are NaN until a
// MissingPolicy is applied; every Dataset handed to the learners is finite.
struct Dataset {
  Eigen::MatrixXd features;  // n x f
  Eigen::VectorXd targets;   // class index or real value
  Task task = Task::kClassification;
  int num_classes = 0;       // K for classification, 0 for regression
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::vector<bool> is_indicator;        // per feature: one-hot column?
  std::vector<std::int64_t> timestamps;  // seconds since epoch, or empty
  std::vector<std::size_t> source_rows;  // data-row index in the source file

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  bool has_timestamps() const { return !timestamps.empty(); }
};

// Copies the given rows, in the given order.
Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows);

// Checks the shape/finiteness/label invariants; throws UsageError.
void validate(const Dataset& ds);

// ---------------------------------------------------------------------------
// CSV

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(std::string_view name) const;  // -1 when absent
};

RawTable parse_csv(std::string_view text, char delimiter = ',');
RawTable read_csv(const std::string& path, char delimiter = ',');
void write_csv(const std::string& path, const RawTable& table,
               char delimiter = ',');

bool is_missing_cell(std::string_view cell);

// Accepts YYYY-MM-DD, optionally followed by THH:MM or THH:MM:SS (a space
// also works as the separator). Interpreted as UTC.
std::int64_t parse_timestamp(std::string_view text);
// YYYY-MM-DDTHH:MM:SS
std::string format_timestamp(std::int64_t seconds);

// One-hot encodes categorical columns (lexicographic category order,
// appended after the numeric columns), drops rows with a missing target and
// applies the schema's missing policy.
Dataset encode_table(const RawTable& table, const Schema& schema);
Dataset load_table(const std::string& path, const Schema& schema);

Dataset apply_missing_policy(const Dataset& ds, MissingPolicy policy);

// ---------------------------------------------------------------------------
// Splitting and chunking

struct TrainValidationSplit {
  Dataset train;
  Dataset validation;
  bool stratified = false;
  // Stratification was requested but some class has a single row.
  bool stratification_fallback = false;
};

// Deterministic per seed. Classification data is stratified by class when
// every class has at least two rows; timestamped data is split by time (the
// latest rows become validation). Both sides keep source row order.
TrainValidationSplit split_train_validation(const Dataset& ds,
                                            double validation_fraction,
                                            std::uint64_t seed);

enum class PartitionMode { kFixed, kDaily, kMonthly };

std::string to_string(PartitionMode mode);
PartitionMode parse_partition_mode(const std::string& name);

struct ChunkPartition {
  std::vector<std::vector<std::size_t>> chunks;  // row indices, source order
  std::size_t nominal_size = 0;
  PartitionMode mode = PartitionMode::kFixed;

  std::size_t size() const { return chunks.size(); }
  std::size_t total_rows() const;
};

ChunkPartition partition_fixed(const Dataset& ds, std::int64_t chunk_size);
ChunkPartition partition_temporal(const Dataset& ds, PartitionMode granularity);

// Every row as its own unit; used for per-tuple valuations.
ChunkPartition singleton_partition(std::size_t n);

}  // namespace chunkval

#endif  // CHUNKVAL_DATASET_H_
