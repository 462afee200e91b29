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

#include "cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "chunkval/baselines.h"
#include "chunkval/corruption.h"
#include "chunkval/dataset.h"
#include "chunkval/evaluation.h"
#include "chunkval/model.h"
#include "chunkval/report.h"
#include "chunkval/valuation.h"
#include "selftest.h"

namespace chunkval::cli {
namespace {

using nlohmann::json;

const std::vector<std::string> kMethods = {"cdash", "tmc", "gshap", "exact", "chunk-avg"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in --" + what);
    }
  }
  if (out.empty()) throw UsageError("--" + what + " is empty");
  return out;
}

std::array<int, 2> parse_hidden(const std::string& text) {
  const auto v = parse_doubles(text, "hidden");
  if (v.size() != 2 || v[0] < 1 || v[1] < 1 || v[0] != static_cast<int>(v[0]) ||
      v[1] != static_cast<int>(v[1]))
    throw UsageError("--hidden takes two positive layer widths, e.g. 64,32");
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

// ---------------------------------------------------------------------------
// Options shared by commands that read a dataset.

struct DataOptions {
  std::string data;
  std::string target;
  std::string task = "classification";
  std::string categorical;
  std::string timestamp;
  std::string delimiter = ",";
  std::string missing = "drop";
  double validation_fraction = 0.2;
  std::string hidden = "64,32";
  std::uint64_t seed = 0;
  int threads = 1;

  void add_to(CLI::App* app, bool need_data = true) {
    auto* d = app->add_option("--data", data, "input CSV");
    if (need_data) d->required();
    app->add_option("--target", target, "target column");
    app->add_option("--task", task, "classification | regression")
        ->check(CLI::IsMember({"classification", "regression"}));
    app->add_option("--categorical", categorical, "comma-separated categorical columns");
    app->add_option("--timestamp", timestamp, "timestamp column");
    app->add_option("--delimiter", delimiter, "field delimiter");
    app->add_option("--missing", missing, "drop | mean")->check(CLI::IsMember({"drop", "mean"}));
    app->add_option("--validation-fraction", validation_fraction, "share of rows held out");
    app->add_option("--hidden", hidden, "hidden layer widths");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
  }

  Schema schema() const {
    if (target.empty()) throw UsageError("--target is required");
    if (delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    Schema s;
    s.target_column = target;
    s.task = parse_task(task);
    s.categorical_columns = split_list(categorical);
    if (!timestamp.empty()) s.timestamp_column = timestamp;
    s.delimiter = delimiter[0];
    s.missing_policy = parse_missing_policy(missing);
    return s;
  }

  json to_json() const {
    return json{{"data", data},
                {"target", target},
                {"task", task},
                {"categorical", categorical},
                {"timestamp", timestamp},
                {"delimiter", delimiter},
                {"missing", missing},
                {"validation_fraction", validation_fraction},
                {"hidden", hidden},
                {"seed", seed}};
  }

  static DataOptions from_json(const json& j) {
    DataOptions d;
    try {
      d.data = j.at("data").get<std::string>();
      d.target = j.at("target").get<std::string>();
      d.task = j.at("task").get<std::string>();
      d.categorical = j.at("categorical").get<std::string>();
      d.timestamp = j.at("timestamp").get<std::string>();
      d.delimiter = j.at("delimiter").get<std::string>();
      d.missing = j.at("missing").get<std::string>();
      d.validation_fraction = j.at("validation_fraction").get<double>();
      d.hidden = j.at("hidden").get<std::string>();
      d.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw UsageError(std::string("report config is incomplete: ") + e.what());
    }
    return d;
  }
};

struct Prepared {
  Dataset full;
  Dataset train;
  Dataset validation;
  Architecture arch;
  MetricSpec metric;
  std::string hash;
};

Prepared prepare(const DataOptions& d) {
  Prepared p;
  const std::string text = read_file(d.data);
  p.hash = content_hash(text);
  const Schema schema = d.schema();
  p.full = encode_table(parse_csv(text, schema.delimiter), schema);
  auto split = split_train_validation(p.full, d.validation_fraction, d.seed);
  p.train = std::move(split.train);
  p.validation = std::move(split.validation);
  p.arch = make_architecture(p.full, parse_hidden(d.hidden));
  p.metric = default_metric(p.full.task);
  return p;
}

// ---------------------------------------------------------------------------
// Valuation methods

struct MethodOptions {
  std::string method = "cdash";
  std::string base_method = "tmc";
  std::string partition = "fixed";
  std::int64_t chunk_size = 256;
  std::size_t subsets = 50;
  std::size_t chunks_per_subset = 0;
  std::optional<double> threshold;
  double eta = 0.001;
  double scale = 1.0;
  double eps = 1e-3;
  int max_iters = 50;
  int max_attempts = 100;
  int permutations = 50;
  double tolerance = 0.01;
  int epochs_per_fit = 1;

  void add_to(CLI::App* app, bool with_method) {
    if (with_method) {
      app->add_option("--method", method, "cdash | tmc | gshap | exact | chunk-avg")
          ->check(CLI::IsMember(kMethods));
    }
    app->add_option("--base-method", base_method, "tuple method averaged by chunk-avg")
        ->check(CLI::IsMember({"tmc", "gshap"}));
    app->add_option("--partition", partition, "fixed | daily | monthly")
        ->check(CLI::IsMember({"fixed", "daily", "monthly"}));
    app->add_option("--chunk-size", chunk_size, "rows per chunk");
    app->add_option("--subsets", subsets, "subset pool size k");
    app->add_option("--chunks-per-subset", chunks_per_subset, "chunks per subset (0: automatic)");
    app->add_option("--threshold", threshold, "subset quality gate");
    app->add_option("--eta", eta, "learning rate");
    app->add_option("--scale", scale, "scaling constant C");
    app->add_option("--eps", eps, "stabilisation tolerance");
    app->add_option("--max-iters", max_iters, "outer iteration / permutation cap");
    app->add_option("--max-attempts", max_attempts, "subset resampling attempts");
    app->add_option("--permutations", permutations, "permutations for tmc / gshap");
    app->add_option("--tolerance", tolerance, "tmc truncation tolerance");
    app->add_option("--epochs-per-fit", epochs_per_fit, "full-batch steps per tmc / exact refit");
  }

  json to_json(const Prepared& p) const {
    return json{{"method", method},
                {"base_method", base_method},
                {"partition", partition},
                {"chunk_size", chunk_size},
                {"subsets", subsets},
                {"chunks_per_subset", chunks_per_subset},
                {"threshold", threshold.value_or(default_threshold(p.full.task))},
                {"eta", eta},
                {"scale", scale},
                {"eps", eps},
                {"max_iters", max_iters},
                {"max_attempts", max_attempts},
                {"permutations", permutations},
                {"tolerance", tolerance},
                {"epochs_per_fit", epochs_per_fit}};
  }
};

ChunkPartition make_partition(const MethodOptions& o, const Dataset& train) {
  const PartitionMode mode = parse_partition_mode(o.partition);
  if (mode == PartitionMode::kFixed) return partition_fixed(train, o.chunk_size);
  return partition_temporal(train, mode);
}

struct MethodRun {
  std::vector<UnitValue> units;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  std::vector<IterationTrace> trace;
};

std::vector<UnitValue> to_units(const ChunkPartition& partition, const Dataset& train,
                                std::span<const double> values) {
  std::vector<UnitValue> units;
  for (std::size_t u = 0; u < partition.size(); ++u) {
    UnitValue uv;
    uv.id = u;
    for (std::size_t r : partition.chunks[u]) uv.rows.push_back(train.source_rows[r]);
    uv.value = values[u];
    units.push_back(std::move(uv));
  }
  return units;
}

MethodRun run_method(const std::string& method, const Prepared& p, const MethodOptions& o,
                     std::uint64_t seed, int threads, bool record_trace) {
  MethodRun run;
  const MetricSpec& m = p.metric;
  auto tmc_config = [&] {
    TmcConfig cfg;
    cfg.tolerance = o.tolerance;
    cfg.max_permutations = o.permutations;
    cfg.epochs_per_fit = o.epochs_per_fit;
    cfg.eta = o.eta;
    cfg.eps = o.eps;
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
  };
  auto gshap_config = [&] {
    GShapleyConfig cfg;
    cfg.eta = o.eta;
    cfg.max_permutations = o.permutations;
    cfg.eps = o.eps;
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
  };
  auto take = [&](const TupleValuationResult& r, const ChunkPartition& units,
                  std::span<const double> values) {
    run.units = to_units(units, p.train, values);
    run.iterations = r.iterations;
    run.converged = r.converged;
    run.wall_time = r.wall_time;
  };

  if (method == "cdash") {
    CdashConfig cfg;
    cfg.chunk_size = static_cast<std::size_t>(std::max<std::int64_t>(o.chunk_size, 0));
    cfg.subset_count = o.subsets;
    cfg.chunks_per_subset = o.chunks_per_subset;
    cfg.threshold = o.threshold.value_or(default_threshold(p.full.task));
    cfg.eta = o.eta;
    cfg.scale_constant = o.scale;
    cfg.eps = o.eps;
    cfg.max_iters = o.max_iters;
    cfg.max_resampling_attempts = o.max_attempts;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.record_trace = record_trace;
    const ChunkPartition partition = make_partition(o, p.train);
    ValuationResult r = cdash_value(p.train, p.validation, partition, p.arch, m, cfg);
    run.units = to_units(partition, p.train, r.values);
    run.iterations = r.iterations_run;
    run.converged = r.converged;
    run.wall_time = r.wall_time;
    run.trace = std::move(r.trace);
  } else if (method == "exact") {
    const ChunkPartition partition = make_partition(o, p.train);
    if (partition.size() > kMaxExactPlayers) {
      throw UsageError("exact Shapley is limited to " + std::to_string(kMaxExactPlayers) +
                       " units but the partition has " + std::to_string(partition.size()) +
                       "; raise --chunk-size or pick another method");
    }
    const auto start = std::chrono::steady_clock::now();
    const PlayerSet game = mlp_game(p.train, p.validation, partition, p.arch, m, o.eta,
                                    o.epochs_per_fit, seed);
    const auto values = exact_shapley(game);
    run.units = to_units(partition, p.train, values);
    run.iterations = 1;
    run.converged = true;
    run.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  } else if (method == "tmc" || method == "gshap") {
    const TupleValuationResult r = method == "tmc"
                                       ? tmc_shapley(p.train, p.validation, p.arch, m, tmc_config())
                                       : g_shapley(p.train, p.validation, p.arch, m, gshap_config());
    take(r, singleton_partition(p.train.rows()), r.values);
  } else if (method == "chunk-avg") {
    const ChunkPartition partition = make_partition(o, p.train);
    const TupleValuationResult r =
        o.base_method == "tmc" ? tmc_shapley(p.train, p.validation, p.arch, m, tmc_config())
                               : g_shapley(p.train, p.validation, p.arch, m, gshap_config());
    const auto values = chunk_average(r.values, partition);
    take(r, partition, values);
  } else {
    throw UsageError("unknown method '" + method + "'");
  }
  return run;
}

// ---------------------------------------------------------------------------
// Config files: flat "key = value" lines, keys named after the long flags.

std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!path || rest.empty()) return rest;

  std::ifstream in(*path);
  if (!in) throw UsageError("cannot read config file '" + *path + "'");
  std::vector<std::string> from_file;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(*path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config")
      throw UsageError(*path + ":" + std::to_string(line_no) + ": bad key '" + key + "'");
    from_file.push_back("--" + key + "=" + value);
  }
  // File entries go first so that later command-line flags win.
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// ---------------------------------------------------------------------------
// value

struct ValueCommand {
  DataOptions data;
  MethodOptions method;
  std::string out_dir = ".";
  bool trace = false;

  void add_to(CLI::App* app) {
    data.add_to(app);
    method.add_to(app, true);
    app->add_option("--out", out_dir, "output directory");
    app->add_flag("--trace", trace, "write the per-iteration trace");
  }

  int execute(std::ostream& out) const {
    const Prepared p = prepare(data);
    MethodRun run = run_method(method.method, p, method, data.seed, data.threads, trace);
    ValuationReport report;
    report.method = method.method;
    report.config = data.to_json();
    report.config.update(method.to_json(p));
    report.units = std::move(run.units);
    report.iterations = run.iterations;
    report.converged = run.converged;
    report.wall_time = run.wall_time;
    report.dataset_hash = p.hash;
    ensure_dir(out_dir);
    write_file(join(out_dir, "report.json"), to_json(report).dump(2) + "\n");
    write_values_csv(join(out_dir, "values.csv"), report);
    if (trace) {
      std::string text = "iteration,chunk,value\n";
      char buf[96];
      for (std::size_t it = 0; it < run.trace.size(); ++it) {
        for (std::size_t j = 0; j < run.trace[it].values.size(); ++j) {
          std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", it + 1, j, run.trace[it].values[j]);
          text += buf;
        }
      }
      write_file(join(out_dir, "trace.csv"), text);
    }
    out << method.method << ": " << report.units.size() << " units, " << report.iterations
        << " iterations, " << (report.converged ? "converged" : "not converged") << ", "
        << report.wall_time << " s\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// corrupt

struct CorruptCommand {
  DataOptions data;
  std::string kind = "flip";
  double fraction = 0.2;
  double sigma = 1.0;
  std::string out_csv;
  std::string mask_path;

  void add_to(CLI::App* app) {
    data.add_to(app);
    app->add_option("--kind", kind, "noise | flip | missing")
        ->check(CLI::IsMember({"noise", "flip", "missing"}));
    app->add_option("--fraction", fraction, "share of rows to corrupt");
    app->add_option("--sigma", sigma, "noise scale in column standard deviations");
    app->add_option("--out", out_csv, "corrupted CSV")->required();
    app->add_option("--mask", mask_path, "mask JSON (default: <out>.mask.json)");
  }

  int execute(std::ostream& out) const {
    Schema schema = data.schema();
    // Keep every row with a target so that mask indices cover the whole file.
    schema.missing_policy = MissingPolicy::kMeanImpute;
    RawTable table = read_csv(data.data, schema.delimiter);
    const Dataset ds = encode_table(table, schema);
    const CorruptionKind k = parse_corruption_kind(kind);

    std::pair<Dataset, CorruptionReport> result;
    if (k == CorruptionKind::kGaussianNoise) result = inject_gaussian_noise(ds, fraction, sigma, data.seed);
    else if (k == CorruptionKind::kLabelFlip) result = flip_labels(ds, fraction, data.seed);
    else result = inject_missing(ds, fraction, data.seed);
    const Dataset& bad = result.first;
    CorruptionReport report = result.second;

    const auto target_col = static_cast<std::size_t>(table.column_index(schema.target_column));
    char buf[64];
    for (std::size_t r : report.affected_rows) {
      auto& row = table.rows[ds.source_rows[r]];
      const auto i = static_cast<Eigen::Index>(r);
      if (k == CorruptionKind::kLabelFlip) {
        row[target_col] = ds.class_names[static_cast<std::size_t>(bad.targets(i))];
        continue;
      }
      for (std::size_t c = 0; c < ds.cols(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const std::string& name = ds.feature_names[c];
        const std::string column = ds.is_indicator[c] ? name.substr(0, name.find('=')) : name;
        auto& cell = row[static_cast<std::size_t>(table.column_index(column))];
        if (k == CorruptionKind::kMissing) {
          if (std::isnan(bad.features(i, ci))) cell.clear();
        } else if (!ds.is_indicator[c] && !is_missing_cell(cell)) {
          const double delta = bad.features(i, ci) - ds.features(i, ci);
          std::snprintf(buf, sizeof(buf), "%.17g", std::stod(cell) + delta);
          cell = buf;
        }
      }
    }
    for (auto& r : report.affected_rows) r = ds.source_rows[r];

    write_csv(out_csv, table, schema.delimiter);
    const std::string mask = mask_path.empty() ? out_csv + ".mask.json" : mask_path;
    write_file(mask, to_json(report).dump(2) + "\n");
    out << to_string(k) << ": " << report.affected_rows.size() << " of " << ds.rows()
        << " rows corrupted\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateCommand {
  std::string mode;
  std::string report_path;
  std::string data_path;
  std::string mask_path;
  std::string lambdas = "0.1,0.2,0.3,0.4,0.5";
  int repeats = 5;
  int epochs = 20;
  double train_eta = 0.001;
  std::size_t batch_size = 32;
  int lof_k = 20;
  int threads = 1;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    app->add_option("mode", mode, "removal | lof | recall")
        ->required()
        ->check(CLI::IsMember({"removal", "lof", "recall"}));
    app->add_option("--report", report_path, "valuation report JSON")->required();
    app->add_option("--data", data_path, "dataset the report was computed on")->required();
    app->add_option("--mask", mask_path, "corruption mask JSON (recall)");
    app->add_option("--lambdas", lambdas, "comma-separated removal fractions");
    app->add_option("--repeats", repeats, "retraining repeats")->check(CLI::PositiveNumber);
    app->add_option("--epochs", epochs, "retraining epochs")->check(CLI::PositiveNumber);
    app->add_option("--train-eta", train_eta, "retraining learning rate");
    app->add_option("--batch-size", batch_size, "retraining minibatch size");
    app->add_option("--lof-k", lof_k, "LOF neighbourhood size")->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
    app->add_option("--out", out_dir, "output directory");
  }

  int execute(std::ostream& out) const {
    json j;
    try {
      j = json::parse(read_file(report_path));
    } catch (const json::exception& e) {
      throw UsageError(std::string("cannot parse report: ") + e.what());
    }
    const ValuationReport report = valuation_report_from_json(j);
    DataOptions data = DataOptions::from_json(report.config);
    data.data = data_path;
    data.threads = threads;
    const Prepared p = prepare(data);
    if (p.hash != report.dataset_hash) {
      throw UsageError("dataset fingerprint " + p.hash + " does not match the report's " +
                       report.dataset_hash);
    }
    std::unordered_map<std::size_t, std::size_t> train_index;
    for (std::size_t r = 0; r < p.train.rows(); ++r) train_index[p.train.source_rows[r]] = r;
    ChunkPartition units;
    std::vector<double> values;
    for (const auto& u : report.units) {
      std::vector<std::size_t> rows;
      for (std::size_t src : u.rows) {
        const auto it = train_index.find(src);
        if (it == train_index.end())
          throw UsageError("report row " + std::to_string(src) + " is not a training row");
        rows.push_back(it->second);
      }
      units.chunks.push_back(std::move(rows));
      values.push_back(u.value);
    }
    const std::vector<double> grid = parse_doubles(lambdas, "lambdas");
    for (double l : grid) {
      if (!(l >= 0.0 && l < 1.0)) throw UsageError("lambdas must lie in [0, 1)");
    }
    ensure_dir(out_dir);
    char buf[128];

    if (mode == "removal") {
      RemovalConfig cfg;
      cfg.arch = p.arch;
      cfg.train.epochs = epochs;
      cfg.train.eta = train_eta;
      cfg.train.batch_size = batch_size;
      cfg.metric = p.metric;
      cfg.repeats = repeats;
      cfg.seed = data.seed;
      cfg.threads = threads;
      const RemovalCurve curve = removal_curve(p.train, p.validation, units, values, grid, cfg);
      write_curve_csv(join(out_dir, "removal_curve.csv"), curve);
      for (std::size_t i = 0; i < grid.size(); ++i)
        out << "lambda " << grid[i] << ": " << curve.mean_scores[i] << "\n";
    } else if (mode == "lof") {
      std::string text = "lambda,mean_abs_lof\n";
      for (double l : grid) {
        const double v = lof_average_after_removal(p.train.features, units, values, l, lof_k);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", l, v);
        text += buf;
        out << "lambda " << l << ": " << v << "\n";
      }
      write_file(join(out_dir, "lof.csv"), text);
    } else {
      if (mask_path.empty()) throw UsageError("recall needs --mask");
      json mj;
      try {
        mj = json::parse(read_file(mask_path));
      } catch (const json::exception& e) {
        throw UsageError(std::string("cannot parse mask: ") + e.what());
      }
      const CorruptionReport mask = corruption_report_from_json(mj);
      // Only corrupted rows that were valued can be recalled.
      std::vector<std::size_t> affected;
      for (std::size_t src : mask.affected_rows) {
        const auto it = train_index.find(src);
        if (it != train_index.end()) affected.push_back(it->second);
      }
      std::sort(affected.begin(), affected.end());
      std::string text = "lambda,recall\n";
      for (double l : grid) {
        const double v = detection_recall(values, affected, units, l);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", l, v);
        text += buf;
        out << "lambda " << l << ": " << v << "\n";
      }
      write_file(join(out_dir, "recall.csv"), text);
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// bench

struct BenchCommand {
  DataOptions data;
  MethodOptions method;
  std::string a = "tmc";
  std::string b = "cdash";
  bool warmup = true;
  std::string out_dir = ".";

  void add_to(CLI::App* app) {
    data.add_to(app);
    method.add_to(app, false);
    app->add_option("--a", a, "baseline method")->check(CLI::IsMember(kMethods));
    app->add_option("--b", b, "candidate method")->check(CLI::IsMember(kMethods));
    app->add_flag("--warmup,!--no-warmup", warmup, "run each method once untimed first (default)");
    app->add_option("--out", out_dir, "output directory");
  }

  int execute(std::ostream& out, std::ostream& err) const {
    const Prepared p = prepare(data);
    json j{{"a", a},
           {"b", b},
           {"machine", machine_fingerprint()},
           {"dataset_hash", p.hash},
           {"version", std::string(kVersion)}};
    j["config"] = data.to_json();
    j["config"].update(method.to_json(p));
    ensure_dir(out_dir);
    auto runner = [&](const std::string& m) {
      return [&, m] { run_method(m, p, method, data.seed, data.threads, false); };
    };
    try {
      const SpeedupReport r = measure_speedup(runner(a), runner(b), warmup);
      j.update(to_json(r));
      write_file(join(out_dir, "bench.json"), j.dump(2) + "\n");
      out << a << " " << r.t_baseline << " s, " << b << " " << r.t_candidate << " s, speedup "
          << r.speedup << "\n";
      return kExitOk;
    } catch (const SpeedupError& e) {
      if (e.t_baseline()) j["t_baseline"] = *e.t_baseline();
      j["error"] = e.what();
      write_file(join(out_dir, "bench.json"), j.dump(2) + "\n");
      err << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
};

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  try {
    args = expand_config(std::move(args));
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Chunk-level data valuation", "chunkval"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  ValueCommand value;
  CorruptCommand corrupt;
  EvaluateCommand evaluate;
  BenchCommand bench;
  SelftestOptions selftest;
  std::string unused_config;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", unused_config, "flat key = value file");
    return sub;
  };
  CLI::App* value_app = add("value", "value the units of a dataset");
  value.add_to(value_app);
  CLI::App* corrupt_app = add("corrupt", "inject noise, label flips or missing cells");
  corrupt.add_to(corrupt_app);
  CLI::App* evaluate_app = add("evaluate", "removal curves, LOF or recall for a report");
  evaluate.add_to(evaluate_app);
  CLI::App* bench_app = add("bench", "time two valuation methods");
  bench.add_to(bench_app);
  CLI::App* selftest_app = add("selftest", "run the built-in invariant checks");
  selftest_app->add_option("--seed", selftest.seed, "master seed");
  selftest_app->add_option("--threads", selftest.threads, "worker threads")
      ->check(CLI::Range(1, 1024));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*value_app) return value.execute(out);
    if (*corrupt_app) return corrupt.execute(out);
    if (*evaluate_app) return evaluate.execute(out);
    if (*bench_app) return bench.execute(out, err);
    if (*selftest_app) return run_selftest(selftest, out) ? kExitOk : kExitRuntime;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace chunkval::cli
