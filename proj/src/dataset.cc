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

#include "chunkval/dataset.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace chunkval {

std::string to_string(Task task) {
  return task == Task::kClassification ? "classification" : "regression";
}

Task parse_task(const std::string& name) {
  if (name == "classification") return Task::kClassification;
  if (name == "regression") return Task::kRegression;
  throw UsageError("unknown task '" + name + "'");
}

std::string to_string(MissingPolicy policy) {
  return policy == MissingPolicy::kDropRow ? "drop" : "impute";
}

MissingPolicy parse_missing_policy(const std::string& name) {
  if (name == "drop" || name == "drop-row") return MissingPolicy::kDropRow;
  if (name == "impute" || name == "mean-impute") return MissingPolicy::kMeanImpute;
  throw UsageError("unknown missing policy '" + name + "'");
}

std::string to_string(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::kFixed: return "fixed";
    case PartitionMode::kDaily: return "daily";
    case PartitionMode::kMonthly: return "monthly";
  }
  return "fixed";
}

PartitionMode parse_partition_mode(const std::string& name) {
  if (name == "fixed") return PartitionMode::kFixed;
  if (name == "daily") return PartitionMode::kDaily;
  if (name == "monthly") return PartitionMode::kMonthly;
  throw UsageError("unknown partition mode '" + name + "'");
}

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.task = ds.task;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  out.feature_names = ds.feature_names;
  out.is_indicator = ds.is_indicator;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  out.source_rows.reserve(rows.size());
  if (ds.has_timestamps()) out.timestamps.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    if (rows[i] >= ds.rows()) throw UsageError("row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(r);
    out.targets(static_cast<Eigen::Index>(i)) = ds.targets(r);
    out.source_rows.push_back(ds.source_rows.empty() ? rows[i]
                                                     : ds.source_rows[rows[i]]);
    if (ds.has_timestamps()) out.timestamps.push_back(ds.timestamps[rows[i]]);
  }
  return out;
}

void validate(const Dataset& ds) {
  if (ds.rows() == 0) throw UsageError("dataset has no rows");
  if (ds.cols() == 0) throw UsageError("dataset has no features");
  if (static_cast<std::size_t>(ds.targets.size()) != ds.rows())
    throw UsageError("target length does not match row count");
  if (!ds.features.allFinite()) throw UsageError("dataset has non-finite features");
  if (!ds.targets.allFinite()) throw UsageError("dataset has non-finite targets");
  if (ds.has_timestamps() && ds.timestamps.size() != ds.rows())
    throw UsageError("timestamp length does not match row count");
  if (ds.task == Task::kClassification) {
    if (ds.num_classes < 2) throw UsageError("classification needs at least 2 classes");
    for (Eigen::Index i = 0; i < ds.targets.size(); ++i) {
      const double y = ds.targets(i);
      if (y < 0 || y >= ds.num_classes || y != std::floor(y))
        throw UsageError("class label out of range");
    }
  }
}

// ---------------------------------------------------------------------------
// CSV

int RawTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string quote_cell(const std::string& cell, char delimiter) {
  if (cell.find(delimiter) == std::string::npos &&
      cell.find('"') == std::string::npos && cell.find('\n') == std::string::npos)
    return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

RawTable parse_csv(std::string_view text, char delimiter) {
  RawTable table;
  std::size_t pos = 0;
  bool have_header = false;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF")
      line.remove_prefix(3);
    if (trim(line).empty()) continue;
    auto cells = split_record(line, delimiter);
    for (auto& c : cells) c = std::string(trim(c));
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw UsageError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw UsageError("CSV input has no header row");
  return table;
}

RawTable read_csv(const std::string& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), delimiter);
}

void write_csv(const std::string& path, const RawTable& table, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + path + "'");
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << delimiter;
      out << quote_cell(row[i], delimiter);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

bool is_missing_cell(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "NA" || cell == "N/A" || cell == "NaN" ||
         cell == "nan" || cell == "?" || cell == "null";
}

std::int64_t parse_timestamp(std::string_view text) {
  text = trim(text);
  auto fail = [&]() -> UsageError {
    return UsageError("unparseable timestamp '" + std::string(text) + "'");
  };
  auto field = [&](std::size_t at, std::size_t len) {
    if (at + len > text.size()) throw fail();
    int v = 0;
    const char* b = text.data() + at;
    const auto [ptr, ec] = std::from_chars(b, b + len, v);
    if (ec != std::errc() || ptr != b + len) throw fail();
    return v;
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  const int year = field(0, 4);
  const int month = field(5, 2);
  const int day = field(8, 2);
  int hour = 0, minute = 0, second = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') throw fail();
    if (text.size() != 16 && text.size() != 19) throw fail();
    if (text[13] != ':') throw fail();
    hour = field(11, 2);
    minute = field(14, 2);
    if (text.size() == 19) {
      if (text[16] != ':') throw fail();
      second = field(17, 2);
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year},
                           std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) throw fail();
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t seconds_since_epoch) {
  using namespace std::chrono;
  const sys_seconds t{seconds{seconds_since_epoch}};
  const sys_days day = floor<days>(t);
  const year_month_day ymd{day};
  const auto secs = (t - day).count();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), static_cast<long long>(secs / 3600),
                static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60));
  return buf;
}

Dataset encode_table(const RawTable& table, const Schema& schema) {
  const int target_col = table.column_index(schema.target_column);
  if (target_col < 0)
    throw UsageError("unknown target column '" + schema.target_column + "'");
  std::set<int> categorical;
  for (const auto& name : schema.categorical_columns) {
    const int idx = table.column_index(name);
    if (idx < 0) throw UsageError("unknown categorical column '" + name + "'");
    if (idx == target_col)
      throw UsageError("target column cannot be categorical feature");
    categorical.insert(idx);
  }
  int ts_col = -1;
  if (schema.timestamp_column) {
    ts_col = table.column_index(*schema.timestamp_column);
    if (ts_col < 0)
      throw UsageError("unknown timestamp column '" + *schema.timestamp_column + "'");
  }

  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (!is_missing_cell(table.rows[r][static_cast<std::size_t>(target_col)]))
      kept.push_back(r);
  }
  if (kept.empty()) throw UsageError("no rows with a target value");

  std::vector<int> numeric_cols;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
    if (c != target_col && c != ts_col && !categorical.count(c)) numeric_cols.push_back(c);
  }
  // Lexicographic category order keeps encodings reproducible.
  std::vector<std::pair<int, std::vector<std::string>>> groups;
  for (int c : categorical) {
    std::set<std::string> values;
    for (std::size_t r : kept) {
      const auto& cell = table.rows[r][static_cast<std::size_t>(c)];
      if (!is_missing_cell(cell)) values.insert(cell);
    }
    groups.emplace_back(c, std::vector<std::string>(values.begin(), values.end()));
  }

  Dataset ds;
  ds.task = schema.task;
  for (int c : numeric_cols) {
    ds.feature_names.push_back(table.header[static_cast<std::size_t>(c)]);
    ds.is_indicator.push_back(false);
  }
  for (const auto& [c, values] : groups) {
    for (const auto& v : values) {
      ds.feature_names.push_back(table.header[static_cast<std::size_t>(c)] + "=" + v);
      ds.is_indicator.push_back(true);
    }
  }
  if (ds.feature_names.empty()) throw UsageError("table has no feature columns");

  const auto n = static_cast<Eigen::Index>(kept.size());
  const auto f = static_cast<Eigen::Index>(ds.feature_names.size());
  ds.features.resize(n, f);
  ds.targets.resize(n);
  std::map<std::string, int> class_index;
  if (schema.task == Task::kClassification) {
    std::set<std::string> labels;
    for (std::size_t r : kept) labels.insert(table.rows[r][static_cast<std::size_t>(target_col)]);
    ds.class_names.assign(labels.begin(), labels.end());
    for (std::size_t i = 0; i < ds.class_names.size(); ++i)
      class_index[ds.class_names[i]] = static_cast<int>(i);
    ds.num_classes = static_cast<int>(ds.class_names.size());
    if (ds.num_classes < 2) throw UsageError("classification target has fewer than 2 classes");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = kept[static_cast<std::size_t>(i)];
    const auto& row = table.rows[r];
    const std::string& label = row[static_cast<std::size_t>(target_col)];
    if (schema.task == Task::kClassification) {
      ds.targets(i) = class_index.at(label);
    } else {
      const auto v = parse_number(label);
      if (!v) throw UsageError("row " + std::to_string(r + 1) + ": non-numeric target '" + label + "'");
      ds.targets(i) = *v;
    }
    Eigen::Index col = 0;
    for (int c : numeric_cols) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (is_missing_cell(cell)) {
        ds.features(i, col++) = nan;
        continue;
      }
      const auto v = parse_number(cell);
      if (!v) {
        throw UsageError("row " + std::to_string(r + 1) + ": non-numeric value '" + cell +
                         "' in column '" + table.header[static_cast<std::size_t>(c)] + "'");
      }
      ds.features(i, col++) = *v;
    }
    for (const auto& [c, values] : groups) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      const bool missing = is_missing_cell(cell);
      for (const auto& v : values) ds.features(i, col++) = missing ? nan : (cell == v ? 1.0 : 0.0);
    }
    if (ts_col >= 0) ds.timestamps.push_back(parse_timestamp(row[static_cast<std::size_t>(ts_col)]));
    ds.source_rows.push_back(r);
  }
  ds = apply_missing_policy(ds, schema.missing_policy);
  validate(ds);
  return ds;
}

Dataset load_table(const std::string& path, const Schema& schema) {
  return encode_table(read_csv(path, schema.delimiter), schema);
}

Dataset apply_missing_policy(const Dataset& ds, MissingPolicy policy) {
  if (policy == MissingPolicy::kDropRow) {
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (ds.features.row(static_cast<Eigen::Index>(r)).allFinite()) keep.push_back(r);
    }
    if (keep.size() == ds.rows()) return ds;
    if (keep.empty()) throw UsageError("no rows left after dropping missing values");
    return select_rows(ds, keep);
  }
  Dataset out = ds;
  for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
      const double v = out.features(r, c);
      if (std::isfinite(v)) {
        sum += v;
        ++count;
      }
    }
    if (count == out.rows()) continue;
    if (count == 0) throw UsageError("column '" + out.feature_names[static_cast<std::size_t>(c)] + "' has no values to impute from");
    const double mean = sum / static_cast<double>(count);
    for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
      if (!std::isfinite(out.features(r, c))) out.features(r, c) = mean;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting and chunking

namespace {

std::size_t validation_count(std::size_t n, double fraction) {
  const auto v = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(v, 1, n - 1);
}

}  // namespace

TrainValidationSplit split_train_validation(const Dataset& ds,
                                            double validation_fraction,
                                            std::uint64_t seed) {
  const std::size_t n = ds.rows();
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw UsageError("validation fraction must lie in (0, 1)");
  if (n < 2) throw UsageError("need at least 2 rows to split");

  TrainValidationSplit split;
  std::vector<std::size_t> val;

  if (ds.has_timestamps()) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ds.timestamps[a] < ds.timestamps[b];
    });
    const std::size_t v = validation_count(n, validation_fraction);
    std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(v));
    val.assign(order.end() - static_cast<std::ptrdiff_t>(v), order.end());
    split.train = select_rows(ds, train);
    split.validation = select_rows(ds, val);
    return split;
  }

  std::mt19937_64 rng(derive_seed(seed, {0x5011}));
  std::vector<bool> is_val(n, false);
  bool stratify = ds.task == Task::kClassification;
  std::vector<std::vector<std::size_t>> by_class;
  if (stratify) {
    by_class.resize(static_cast<std::size_t>(ds.num_classes));
    for (std::size_t r = 0; r < n; ++r)
      by_class[static_cast<std::size_t>(ds.targets(static_cast<Eigen::Index>(r)))].push_back(r);
    for (const auto& members : by_class) {
      if (members.size() == 1) {
        stratify = false;
        split.stratification_fallback = true;
      }
    }
  }
  if (stratify) {
    for (auto& members : by_class) {
      if (members.empty()) continue;
      std::shuffle(members.begin(), members.end(), rng);
      const std::size_t v = validation_count(members.size(), validation_fraction);
      for (std::size_t i = 0; i < v; ++i) is_val[members[i]] = true;
    }
    split.stratified = true;
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t v = validation_count(n, validation_fraction);
    for (std::size_t i = 0; i < v; ++i) is_val[order[i]] = true;
  }
  std::vector<std::size_t> train;
  for (std::size_t r = 0; r < n; ++r) (is_val[r] ? val : train).push_back(r);
  if (train.empty() || val.empty()) throw UsageError("degenerate split");
  split.train = select_rows(ds, train);
  split.validation = select_rows(ds, val);
  return split;
}

std::size_t ChunkPartition::total_rows() const {
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.size();
  return total;
}

ChunkPartition partition_fixed(const Dataset& ds, std::int64_t chunk_size) {
  const auto n = static_cast<std::int64_t>(ds.rows());
  if (chunk_size <= 0 || chunk_size > n)
    throw UsageError("chunk size must lie in [1, " + std::to_string(n) + "]");
  ChunkPartition p;
  p.nominal_size = static_cast<std::size_t>(chunk_size);
  p.mode = PartitionMode::kFixed;
  for (std::int64_t start = 0; start < n; start += chunk_size) {
    std::vector<std::size_t> rows;
    for (std::int64_t r = start; r < std::min(n, start + chunk_size); ++r)
      rows.push_back(static_cast<std::size_t>(r));
    p.chunks.push_back(std::move(rows));
  }
  return p;
}

ChunkPartition partition_temporal(const Dataset& ds, PartitionMode granularity) {
  if (granularity == PartitionMode::kFixed)
    throw UsageError("temporal partition needs daily or monthly granularity");
  if (!ds.has_timestamps()) throw UsageError("dataset has no timestamp column");
  using namespace std::chrono;
  auto bucket = [&](std::int64_t ts) -> std::int64_t {
    const sys_days day = floor<days>(sys_seconds{seconds{ts}});
    if (granularity == PartitionMode::kDaily) return day.time_since_epoch().count();
    const year_month_day ymd{day};
    return static_cast<std::int64_t>(int(ymd.year())) * 12 +
           static_cast<std::int64_t>(unsigned(ymd.month())) - 1;
  };
  std::map<std::int64_t, std::vector<std::size_t>> buckets;
  for (std::size_t r = 0; r < ds.rows(); ++r) buckets[bucket(ds.timestamps[r])].push_back(r);
  ChunkPartition p;
  p.mode = granularity;
  std::size_t largest = 0;
  for (auto& [key, rows] : buckets) {
    largest = std::max(largest, rows.size());
    p.chunks.push_back(std::move(rows));
  }
  p.nominal_size = largest;
  return p;
}

ChunkPartition singleton_partition(std::size_t n) {
  ChunkPartition p;
  p.nominal_size = 1;
  p.chunks.reserve(n);
  for (std::size_t r = 0; r < n; ++r) p.chunks.push_back({r});
  return p;
}

}  // namespace chunkval
