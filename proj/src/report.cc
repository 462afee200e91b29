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

#include "chunkval/report.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chunkval {

using nlohmann::json;

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write '" + path + "'");
  out << text;
}

std::string file_hash(const std::string& path) { return content_hash(read_file(path)); }

json to_json(const ValuationReport& r) {
  json units = json::array();
  for (const auto& u : r.units) units.push_back({{"id", u.id}, {"rows", u.rows}, {"value", u.value}});
  return json{{"method", r.method},       {"config", r.config},
              {"units", units},           {"iterations", r.iterations},
              {"converged", r.converged}, {"wall_time", r.wall_time},
              {"version", r.version},     {"dataset_hash", r.dataset_hash}};
}

ValuationReport valuation_report_from_json(const json& j) {
  try {
    ValuationReport r;
    r.method = j.at("method").get<std::string>();
    r.config = j.at("config");
    for (const auto& u : j.at("units")) {
      r.units.push_back({u.at("id").get<std::size_t>(),
                         u.at("rows").get<std::vector<std::size_t>>(),
                         u.at("value").get<double>()});
    }
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.wall_time = j.at("wall_time").get<double>();
    r.version = j.at("version").get<std::string>();
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed valuation report: ") + e.what());
  }
}

void write_values_csv(const std::string& path, const ValuationReport& r) {
  std::string text = "unit_id,row_start,row_end,value\n";
  char buf[128];
  for (const auto& u : r.units) {
    const std::size_t lo = u.rows.empty() ? 0 : u.rows.front();
    const std::size_t hi = u.rows.empty() ? 0 : u.rows.back();
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.17g\n", u.id, lo, hi, u.value);
    text += buf;
  }
  write_file(path, text);
}

json to_json(const CorruptionReport& r) {
  json j{{"kind", to_string(r.kind)},
         {"affected_rows", r.affected_rows},
         {"fraction", r.fraction},
         {"seed", r.seed}};
  if (r.kind == CorruptionKind::kGaussianNoise) j["sigma"] = r.sigma;
  return j;
}

CorruptionReport corruption_report_from_json(const json& j) {
  try {
    CorruptionReport r;
    r.kind = parse_corruption_kind(j.at("kind").get<std::string>());
    r.affected_rows = j.at("affected_rows").get<std::vector<std::size_t>>();
    r.fraction = j.at("fraction").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.sigma = j.value("sigma", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed corruption report: ") + e.what());
  }
}

void write_curve_csv(const std::string& path, const RemovalCurve& curve) {
  std::string text = "lambda,mean,std\n";
  char buf[128];
  for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", curve.lambdas[i], curve.mean_scores[i],
                  curve.std_scores[i]);
    text += buf;
  }
  write_file(path, text);
}

json to_json(const RemovalCurve& curve) {
  return json{{"lambdas", curve.lambdas},
              {"mean", curve.mean_scores},
              {"std", curve.std_scores},
              {"repeats", curve.repeats}};
}

json to_json(const SpeedupReport& r) {
  return json{{"t_baseline", r.t_baseline}, {"t_candidate", r.t_candidate}, {"speedup", r.speedup}};
}

void save_checkpoint(const std::string& prefix, const Checkpoint& w) {
  const Eigen::VectorXd flat = w.params.flatten();
  std::string bytes(static_cast<std::size_t>(flat.size()) * 8, '\0');
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(flat(i));
    for (int b = 0; b < 8; ++b) {
      bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
  write_file(prefix + ".bin", bytes);
  json shapes = json::array();
  for (const auto& layer : w.params.layers)
    shapes.push_back({{"weight", {layer.weight.rows(), layer.weight.cols()}}, {"bias", layer.bias.size()}});
  const json sidecar{{"input_dim", w.arch.input_dim},
                     {"hidden", w.arch.hidden},
                     {"output_dim", w.arch.output_dim},
                     {"task", to_string(w.arch.task)},
                     {"layers", shapes},
                     {"step_count", w.step_count},
                     {"seed", w.seed}};
  write_file(prefix + ".json", sidecar.dump(2));
}

Checkpoint load_checkpoint(const std::string& prefix) {
  json sidecar;
  try {
    sidecar = json::parse(read_file(prefix + ".json"));
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed checkpoint sidecar: ") + e.what());
  }
  Architecture arch;
  arch.input_dim = sidecar.at("input_dim").get<int>();
  arch.hidden = sidecar.at("hidden").get<std::array<int, 2>>();
  arch.output_dim = sidecar.at("output_dim").get<int>();
  arch.task = parse_task(sidecar.at("task").get<std::string>());
  Checkpoint w = init_params(arch, 0);
  w.step_count = sidecar.at("step_count").get<std::int64_t>();
  w.seed = sidecar.at("seed").get<std::uint64_t>();
  const std::string bytes = read_file(prefix + ".bin");
  if (bytes.size() != w.params.size() * 8) throw UsageError("checkpoint payload has the wrong size");
  Eigen::VectorXd flat(static_cast<Eigen::Index>(w.params.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(
                  bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)]))
              << (8 * b);
    }
    flat(i) = std::bit_cast<double>(bits);
  }
  w.params.unflatten(flat);
  return w;
}

}  // namespace chunkval
