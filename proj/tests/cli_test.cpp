/*
 * Copyright 2026 The wsloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const fs::path kRoot = fs::temp_directory_path() / "wsloc_tests" / "cli";

const char* kSmallToy = R"({
  "environment": {"landmarks": 16},
  "collection": {"sample_budget": 600},
  "model": {"layers": [16, 32, 32, 2]},
  "training": {"epochs": 3, "batch_size": 200},
  "eval": {"grid_resolution": 16, "alignment_points": 100}
})";

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result Cli(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path out = kRoot / "stdout.txt";
  const fs::path err = kRoot / "stderr.txt";
  const std::string cmd = std::string("\"") + WSLOC_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

fs::path WriteFile(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / name;
  std::ofstream(p) << text;
  return p;
}

fs::path FreshDir(const std::string& name) {
  const fs::path p = kRoot / name;
  fs::remove_all(p);
  return p;
}

std::string Quote(const fs::path& p) { return "\"" + p.string() + "\""; }

json ErrorRecord(const Result& r) {
  const json j = json::parse(r.err);
  REQUIRE(j.contains("error"));
  return j.at("error");
}

TEST_CASE("usage errors produce a JSON record and nonzero exit") {
  const Result none = Cli("");
  CHECK(none.exit_code != 0);
  CHECK(ErrorRecord(none).at("code") == "InvalidArgument");

  const Result unknown = Cli("collect --bogus 1");
  CHECK(unknown.exit_code == 1);
  CHECK(ErrorRecord(unknown).at("code") == "InvalidArgument");
  CHECK(ErrorRecord(unknown).at("command") == "collect");

  CHECK(Cli("train --help").exit_code == 0);
}

TEST_CASE("configuration errors map to InvalidConfig") {
  const Result preset = Cli("collect --preset nope --out " + Quote(FreshDir("x")));
  CHECK(preset.exit_code == 2);
  const json e = ErrorRecord(preset);
  CHECK(e.at("code") == "InvalidConfig");
  CHECK(e.at("status") == 2);
  CHECK(e.at("command") == "collect");
  CHECK(e.at("message").get<std::string>().find("nope") != std::string::npos);

  const Result missing = Cli("collect --config " + Quote(kRoot / "absent.json"));
  CHECK(missing.exit_code == 3);
  CHECK(ErrorRecord(missing).at("code") == "Io");

  const fs::path empty_sweep = WriteFile("empty_sweep.json", R"({"sweep": {"values": []}})");
  const Result sweep = Cli("sweep --preset noise-sweep --config " + Quote(empty_sweep) +
                           " --out " + Quote(FreshDir("empty_sweep")));
  CHECK(sweep.exit_code == 2);
  CHECK(ErrorRecord(sweep).at("code") == "InvalidConfig");
}

TEST_CASE("supervised training on a dataset without positions is refused") {
  const fs::path cfg = WriteFile("small.json", kSmallToy);
  const fs::path dir = FreshDir("stripped");
  REQUIRE(Cli("collect --preset toy-complete --config " + Quote(cfg) + " --out " + Quote(dir))
              .exit_code == 0);
  // Drop the ground-truth positions from every record.
  std::ifstream in(dir / "dataset.jsonl");
  std::string line;
  std::ostringstream stripped;
  std::getline(in, line);
  stripped << line << '\n';
  while (std::getline(in, line)) {
    json r = json::parse(line);
    r["gt_position"] = nullptr;
    stripped << r.dump() << '\n';
  }
  in.close();
  std::ofstream(dir / "dataset.jsonl") << stripped.str();

  json merged = json::parse(kSmallToy);
  merged["method"] = "supervised";
  const fs::path both = WriteFile("small_supervised.json", merged.dump());
  const Result refused =
      Cli("train --preset toy-complete --config " + Quote(both) + " --out " + Quote(dir));
  CHECK(refused.exit_code == 2);
  CHECK(ErrorRecord(refused).at("code") == "InvalidConfig");

  // The weak objective does not need positions.
  CHECK(Cli("train --preset toy-complete --config " + Quote(cfg) + " --out " + Quote(dir))
            .exit_code == 0);
}

TEST_CASE("identical runs give identical artifacts; manifests replay") {
  const fs::path cfg = WriteFile("small.json", kSmallToy);
  const fs::path a = FreshDir("run_a");
  const fs::path b = FreshDir("run_b");
  for (const fs::path& dir : {a, b}) {
    for (const char* cmd : {"collect", "train", "eval"}) {
      const Result r = Cli(std::string(cmd) + " --preset toy-complete --config " + Quote(cfg) +
                           " --seed-override init=5 --seed-override shuffle=6 --out " +
                           Quote(dir));
      INFO(r.err);
      REQUIRE(r.exit_code == 0);
    }
  }
  for (const char* f : {"dataset.jsonl", "env.json", "loss.csv", "checkpoint.bin",
                        "eval_report.json", "ate_summary.csv", "error_grid.csv"}) {
    CAPTURE(f);
    CHECK(Slurp(a / f) == Slurp(b / f));
  }
  const json manifest = json::parse(Slurp(a / "manifest_train.json"));
  CHECK(manifest.at("config").at("seeds").at("init") == 5);
  CHECK(manifest.at("config").at("seeds").at("shuffle") == 6);

  // Replaying the recorded configuration without a preset reproduces the run.
  const fs::path replay_cfg = WriteFile("replay.json", manifest.at("config").dump());
  const fs::path c = FreshDir("run_c");
  for (const char* cmd : {"collect", "train"}) {
    REQUIRE(Cli(std::string(cmd) + " --config " + Quote(replay_cfg) + " --out " + Quote(c))
                .exit_code == 0);
  }
  CHECK(Slurp(a / "loss.csv") == Slurp(c / "loss.csv"));
  CHECK(Slurp(a / "checkpoint.bin") == Slurp(c / "checkpoint.bin"));
}

TEST_CASE("noise sweep emits one row per noise level") {
  const fs::path cfg = WriteFile("sweep.json", R"({
    "environment": {"landmarks": 16},
    "collection": {"sample_budget": 300},
    "model": {"layers": [16, 16, 2]},
    "training": {"epochs": 1, "batch_size": 150},
    "eval": {"grid_resolution": 8, "alignment_points": 50}
  })");
  const fs::path dir = FreshDir("sweep");
  const Result r =
      Cli("sweep --preset noise-sweep --config " + Quote(cfg) + " --out " + Quote(dir));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  const json report = json::parse(Slurp(dir / "sweep_report.json"));
  CHECK(report.at("rows").size() == 5);
}

}  // namespace
