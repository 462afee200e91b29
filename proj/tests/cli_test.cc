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

#include <set>
#include <sstream>

#include <json.hpp>

#include "chunkval/report.h"
#include "chunkval/synthetic.h"
#include "cli.h"
#include "testing.h"

namespace chunkval {
namespace {

using testing::slurp;
using testing::TempDir;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string blob_csv(const TempDir& tmp, std::size_t n, std::uint64_t seed) {
  const std::string path = tmp.file("blobs" + std::to_string(n) + ".csv");
  write_csv(path, to_table(make_blobs(n, 3, 3.0, seed)));
  return path;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST_SUITE("cli") {

TEST_CASE("top-level usage") {
  CHECK(run({"--version"}).code == cli::kExitOk);
  CHECK(run({"--version"}).out.find("1.0.0") != std::string::npos);
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
}

TEST_CASE("value with cdash writes one value per chunk") {
  TempDir tmp;
  const std::string data = blob_csv(tmp, 3000, 1);
  const std::vector<std::string> base{"value", "--data", data, "--target", "target",
                                      "--method", "cdash", "--chunk-size", "256", "--subsets", "50",
                                      "--threshold", "0.5", "--eta", "0.001", "--max-iters", "2",
                                      "--hidden", "16,8"};
  auto with_out = [&](const std::string& dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = base;
    a.insert(a.end(), {"--out", tmp.file(dir)});
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const Run r = run(with_out("a"));
  REQUIRE(r.code == cli::kExitOk);
  const auto report = valuation_report_from_json(nlohmann::json::parse(slurp(tmp.file("a/report.json"))));
  CHECK(report.method == "cdash");
  CHECK(report.units.size() == (2400 + 255) / 256);
  CHECK(report.dataset_hash == file_hash(data));
  CHECK(report.config.at("subsets") == 50);
  CHECK(report.config.at("threshold") == 0.5);
  CHECK(count_lines(slurp(tmp.file("a/values.csv"))) == report.units.size() + 1);

  // Same invocation, and more threads: byte-identical values.
  REQUIRE(run(with_out("b")).code == cli::kExitOk);
  REQUIRE(run(with_out("c", {"--threads", "8"})).code == cli::kExitOk);
  CHECK(slurp(tmp.file("a/values.csv")) == slurp(tmp.file("b/values.csv")));
  CHECK(slurp(tmp.file("a/values.csv")) == slurp(tmp.file("c/values.csv")));

  REQUIRE(run(with_out("t", {"--trace"})).code == cli::kExitOk);
  CHECK(count_lines(slurp(tmp.file("t/trace.csv"))) == 1 + 2 * report.units.size());
}

TEST_CASE("value usage errors") {
  TempDir tmp;
  const std::string data = blob_csv(tmp, 400, 2);
  const std::vector<std::string> base{"value", "--data", data, "--target", "target", "--out", tmp.file("o")};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return run(a);
  };
  const Run exact = with({"--method", "exact", "--chunk-size", "20"});
  CHECK(exact.code == cli::kExitUsage);
  CHECK(exact.err.find("12") != std::string::npos);
  CHECK(with({"--method", "shapley"}).code == cli::kExitUsage);
  CHECK(with({"--chunk-size", "0"}).code == cli::kExitUsage);
  CHECK(with({"--subsets", "3"}).code == cli::kExitUsage);
  CHECK(with({"--hidden", "64"}).code == cli::kExitUsage);
  CHECK(with({"--bogus", "1"}).code == cli::kExitUsage);
  CHECK(run({"value", "--data", tmp.file("none.csv"), "--target", "target"}).code == cli::kExitUsage);
  CHECK(run({"value", "--data", data, "--target", "nope"}).code == cli::kExitUsage);
  CHECK(run({"value", "--data", data}).code == cli::kExitUsage);
}

TEST_CASE("small exact and tuple methods") {
  TempDir tmp;
  const std::string data = blob_csv(tmp, 60, 3);
  for (const std::string m : {"exact", "tmc", "gshap", "chunk-avg"}) {
    const Run r = run({"value", "--data", data, "--target", "target", "--method", m, "--chunk-size", "6",
                       "--permutations", "3", "--hidden", "8,4", "--out", tmp.file(m)});
    REQUIRE(r.code == cli::kExitOk);
    const auto report = valuation_report_from_json(nlohmann::json::parse(slurp(tmp.file(m + "/report.json"))));
    const std::size_t expect = m == "tmc" || m == "gshap" ? 48 : 8;
    CHECK(report.units.size() == expect);
    std::set<std::size_t> rows;
    for (const auto& u : report.units) rows.insert(u.rows.begin(), u.rows.end());
    CHECK(rows.size() == 48);
  }
}

TEST_CASE("runtime failures exit 1") {
  TempDir tmp;
  // Targets this large overflow the squared error.
  std::string text = "x,y\n";
  for (int i = 0; i < 100; ++i) text += std::to_string(i % 7) + "," + (i % 2 ? "1e200" : "-1e200") + "\n";
  const std::string data = tmp.write("huge.csv", text);
  const Run r = run({"value", "--data", data, "--target", "y", "--task", "regression", "--chunk-size", "10",
                     "--subsets", "4", "--chunks-per-subset", "1", "--threshold", "1e300", "--out",
                     tmp.file("o")});
  CHECK(r.code == cli::kExitRuntime);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("config files and precedence") {
  TempDir tmp;
  const std::string data = blob_csv(tmp, 400, 4);
  const std::string cfg = tmp.write("run.cfg",
                                    "# valuation settings\n"
                                    "data = " + data + "\n"
                                    "target = target\n"
                                    "method = cdash\n"
                                    "chunk-size = 40\n"
                                    "subsets = 8\n"
                                    "max-iters = 1\n"
                                    "hidden = 8,4\n");
  REQUIRE(run({"value", "--config", cfg, "--out", tmp.file("a")}).code == cli::kExitOk);
  auto report = valuation_report_from_json(nlohmann::json::parse(slurp(tmp.file("a/report.json"))));
  CHECK(report.units.size() == 8);
  // A flag beats the file.
  REQUIRE(run({"value", "--config", cfg, "--chunk-size", "20", "--out", tmp.file("b")}).code == cli::kExitOk);
  report = valuation_report_from_json(nlohmann::json::parse(slurp(tmp.file("b/report.json"))));
  CHECK(report.units.size() == 16);
  CHECK(report.config.at("chunk_size") == 20);

  CHECK(run({"value", "--config", tmp.write("bad.cfg", "colour = red\n")}).code == cli::kExitUsage);
  CHECK(run({"value", "--config", tmp.write("junk.cfg", "just words\n")}).code == cli::kExitUsage);
  CHECK(run({"value", "--config", tmp.file("absent.cfg")}).code == cli::kExitUsage);
  CHECK(run({"value", "--config"}).code == cli::kExitUsage);
}

TEST_CASE("corrupt writes a mask that matches the file diff") {
  TempDir tmp;
  const std::string data = blob_csv(tmp, 200, 5);
  const std::string out = tmp.file("flipped.csv");
  REQUIRE(run({"corrupt", "--data", data, "--target", "target", "--kind", "flip", "--fraction", "0.2",
               "--seed", "1", "--out", out})
              .code == cli::kExitOk);
  const auto mask = corruption_report_from_json(nlohmann::json::parse(slurp(out + ".mask.json")));
  CHECK(mask.affected_rows.size() == 40);
  const RawTable before = read_csv(data), after = read_csv(out);
  std::vector<std::size_t> diff;
  for (std::size_t r = 0; r < before.rows.size(); ++r)
    if (before.rows[r] != after.rows[r]) diff.push_back(r);
  CHECK(diff == mask.affected_rows);

  for (const std::string kind : {"noise", "missing"}) {
    const std::string o = tmp.file(kind + ".csv");
    REQUIRE(run({"corrupt", "--data", data, "--target", "target", "--kind", kind, "--fraction", "0.1",
                 "--out", o, "--mask", tmp.file(kind + ".json")})
                .code == cli::kExitOk);
    const auto m = corruption_report_from_json(nlohmann::json::parse(slurp(tmp.file(kind + ".json"))));
    const RawTable t = read_csv(o);
    std::vector<std::size_t> d;
    for (std::size_t r = 0; r < before.rows.size(); ++r)
      if (before.rows[r] != t.rows[r]) d.push_back(r);
    CHECK(d == m.affected_rows);
  }

  CHECK(run({"corrupt", "--data", data, "--target", "target", "--fraction", "0", "--out", out}).code ==
        cli::kExitUsage);
  CHECK(run({"corrupt", "--data", data, "--target", "target", "--kind", "smudge", "--out", out}).code ==
        cli::kExitUsage);
  CHECK(run({"corrupt", "--data", data, "--target", "target", "--kind", "flip", "--task", "regression",
             "--out", out})
            .code == cli::kExitUsage);
}

TEST_CASE("evaluate removal, lof and recall") {
  TempDir tmp;
  const std::string clean = blob_csv(tmp, 600, 6);
  const std::string data = tmp.file("noisy.csv");
  REQUIRE(run({"corrupt", "--data", clean, "--target", "target", "--kind", "flip", "--fraction", "0.2",
               "--out", data})
              .code == cli::kExitOk);
  REQUIRE(run({"value", "--data", data, "--target", "target", "--chunk-size", "40", "--subsets", "8",
               "--max-iters", "2", "--hidden", "8,4", "--out", tmp.file("v")})
              .code == cli::kExitOk);
  const std::string report = tmp.file("v/report.json");

  REQUIRE(run({"evaluate", "removal", "--report", report, "--data", data, "--lambdas", "0.1,0.2,0.3,0.4,0.5",
               "--repeats", "5", "--epochs", "1", "--out", tmp.file("e")})
              .code == cli::kExitOk);
  const std::string curve = slurp(tmp.file("e/removal_curve.csv"));
  CHECK(curve.rfind("lambda,mean,std\n", 0) == 0);
  CHECK(count_lines(curve) == 6);

  REQUIRE(run({"evaluate", "lof", "--report", report, "--data", data, "--lambdas", "0,0.1", "--out",
               tmp.file("e")})
              .code == cli::kExitOk);
  CHECK(count_lines(slurp(tmp.file("e/lof.csv"))) == 3);

  REQUIRE(run({"evaluate", "recall", "--report", report, "--data", data, "--mask", data + ".mask.json",
               "--lambdas", "0.2", "--out", tmp.file("e")})
              .code == cli::kExitOk);
  const std::string recall = slurp(tmp.file("e/recall.csv"));
  const double value = std::stod(recall.substr(recall.rfind(',') + 1));
  CHECK(value >= 0.0);
  CHECK(value <= 1.0);

  CHECK(run({"evaluate", "removal", "--report", tmp.file("none.json"), "--data", data}).code == cli::kExitUsage);
  CHECK(run({"evaluate", "removal", "--report", report, "--data", clean}).code == cli::kExitUsage);
  CHECK(run({"evaluate", "recall", "--report", report, "--data", data}).code == cli::kExitUsage);
  CHECK(run({"evaluate", "sideways", "--report", report, "--data", data}).code == cli::kExitUsage);
  CHECK(run({"evaluate", "removal", "--report", report, "--data", data, "--lambdas", "1.0"}).code ==
        cli::kExitUsage);
  CHECK(run({"evaluate", "removal", "--report", tmp.write("bad.json", "{"), "--data", data}).code ==
        cli::kExitUsage);
}

TEST_CASE("bench") {
  TempDir tmp;
  const std::string data = blob_csv(tmp, 1000, 7);
  const Run self = run({"bench", "--data", data, "--target", "target", "--a", "cdash", "--b", "cdash",
                        "--chunk-size", "100", "--subsets", "8", "--max-iters", "2", "--hidden", "16,8",
                        "--out", tmp.file("b")});
  REQUIRE(self.code == cli::kExitOk);
  const auto j = nlohmann::json::parse(slurp(tmp.file("b/bench.json")));
  CHECK(j.at("speedup").get<double>() >= 0.5);
  CHECK(j.at("speedup").get<double>() <= 2.0);
  CHECK(j.at("t_baseline").get<double>() > 0.0);
  CHECK(j.at("t_candidate").get<double>() > 0.0);
  CHECK_FALSE(j.at("machine").get<std::string>().empty());
  CHECK(j.at("dataset_hash") == file_hash(data));

  CHECK(run({"bench", "--data", data, "--target", "target", "--a", "fastest", "--b", "cdash"}).code ==
        cli::kExitUsage);
  // The candidate fails after the baseline finished: its pool cannot be built.
  const std::string small = blob_csv(tmp, 100, 8);
  const Run fail = run({"bench", "--data", small, "--target", "target", "--a", "exact", "--b", "cdash",
                        "--chunk-size", "10", "--subsets", "3", "--hidden", "8,4", "--no-warmup", "--out",
                        tmp.file("f")});
  CHECK(fail.code == cli::kExitRuntime);
  const auto partial = nlohmann::json::parse(slurp(tmp.file("f/bench.json")));
  CHECK(partial.contains("error"));
  CHECK(partial.contains("t_baseline"));
}

TEST_CASE("selftest") {
  const Run r = run({"selftest", "--threads", "2"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

}  // TEST_SUITE

}  // namespace
}  // namespace chunkval
