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

// File formats: valuation reports, corruption masks, curves, checkpoints.

#ifndef CHUNKVAL_REPORT_H_
#define CHUNKVAL_REPORT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chunkval/corruption.h"
#include "chunkval/evaluation.h"
#include "chunkval/model.h"

namespace chunkval {

inline constexpr std::string_view kVersion = "1.0.0";

// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::string& path);

struct UnitValue {
  std::size_t id = 0;
  std::vector<std::size_t> rows;  // source data-row indices
  double value = 0.0;
};

struct ValuationReport {
  std::string method;      // exact | tmc | gshap | cdash | chunk-avg
  nlohmann::json config;   // echo sufficient to rerun
  std::vector<UnitValue> units;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  std::string version{kVersion};
  std::string dataset_hash;
};

nlohmann::json to_json(const ValuationReport& r);
ValuationReport valuation_report_from_json(const nlohmann::json& j);

// unit_id,row_start,row_end,value (value printed with 17 significant digits).
void write_values_csv(const std::string& path, const ValuationReport& r);

nlohmann::json to_json(const CorruptionReport& r);
CorruptionReport corruption_report_from_json(const nlohmann::json& j);

// lambda,mean,std
void write_curve_csv(const std::string& path, const RemovalCurve& curve);
nlohmann::json to_json(const RemovalCurve& curve);

nlohmann::json to_json(const SpeedupReport& r);

// <prefix>.bin holds the parameters as little-endian IEEE-754 doubles
// (Parameters::flatten order); <prefix>.json describes the shapes.
void save_checkpoint(const std::string& prefix, const Checkpoint& w);
Checkpoint load_checkpoint(const std::string& prefix);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view text);

}  // namespace chunkval

#endif  // CHUNKVAL_REPORT_H_
