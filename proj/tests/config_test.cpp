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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "wsloc/config.hpp"

namespace wsloc::exp {
namespace {

using nlohmann::json;

std::string MessageOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

json Preset(const std::string& name) { return json::parse(PresetJson(name)); }

TEST_CASE("every preset resolves, validates and round-trips") {
  for (const std::string& name : PresetNames()) {
    CAPTURE(name);
    const ExperimentConfig c = ResolveConfig(name, "", {});
    CHECK(c.name == name);
    const std::string text = ConfigToJson(c);
    CHECK(ConfigToJson(ConfigFromJson(text)) == text);
    CHECK(json::parse(text) == Preset(name));
  }
}

TEST_CASE("preset files in the repository match the built-in presets") {
  const std::filesystem::path dir = std::filesystem::path(WSLOC_SOURCE_DIR) / "presets";
  for (const std::string& name : PresetNames()) {
    CAPTURE(name);
    std::ifstream in(dir / (name + ".json"));
    REQUIRE(in.good());
    CHECK(json::parse(in) == Preset(name));
  }
}

TEST_CASE("toy preset values") {
  const ExperimentConfig c = ResolveConfig("toy-complete", "", {});
  CHECK(c.environment.landmarks == 128);
  CHECK(c.environment.bounds == env::Bounds{-1, 1, -1, 1});
  CHECK(c.training.epochs == 1500);
  CHECK(c.training.batch_size == 800);
  CHECK(c.training.LearningRate(0) == 1e-3);
  CHECK(c.training.LearningRate(299) == 1e-3);
  CHECK(c.training.LearningRate(300) == 1e-4);
  CHECK(c.training.LearningRate(1499) == 1e-4);
  CHECK(c.eval.grid_resolution == 128);
  CHECK(c.layers.front() == 128);
  CHECK(c.layers.back() == 2);
  CHECK_FALSE(c.collection.d_max.has_value());
  CHECK(ResolveConfig("toy-incomplete", "", {}).collection.d_max == 0.6);
  const ExperimentConfig noise = ResolveConfig("noise-sweep", "", {});
  CHECK(noise.sweep.values == std::vector<double>{0.0, 0.02, 0.04, 0.08, 0.10});
}

TEST_CASE("config text merges over the preset") {
  const ExperimentConfig c =
      ResolveConfig("toy-complete", R"({"training": {"epochs": 7}, "method": "pca_knn"})", {});
  CHECK(c.training.epochs == 7);
  CHECK(c.training.batch_size == 800);
  CHECK(c.method == "pca_knn");
  const ExperimentConfig nulled =
      ResolveConfig("toy-incomplete", R"({"collection": {"d_max": null}})", {});
  CHECK_FALSE(nulled.collection.d_max.has_value());
}

TEST_CASE("seed overrides") {
  const ExperimentConfig c = ResolveConfig("toy-complete", "", {"init=99", "eval=5"});
  CHECK(c.seeds.init == 99);
  CHECK(c.seeds.eval == 5);
  CHECK(c.seeds.env == ResolveConfig("toy-complete", "", {}).seeds.env);
  CHECK(test::CodeOf([] { ResolveConfig("toy-complete", "", {"bogus=1"}); }) ==
        ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([] { ResolveConfig("toy-complete", "", {"init=abc"}); }) ==
        ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([] { ResolveConfig("toy-complete", "", {"init"}); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("seeds must all be explicit") {
  json doc = Preset("toy-complete");
  doc["seeds"].erase("noise");
  const std::string msg = MessageOf([&] { ConfigFromJson(doc.dump()); });
  CHECK(msg.find("seeds.noise") != std::string::npos);
  doc.erase("seeds");
  CHECK(test::CodeOf([&] { ConfigFromJson(doc.dump()); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("invalid documents name the offending field") {
  struct Case {
    const char* patch;
    const char* field;
  };
  const Case cases[] = {
      {R"({"training": {"epoch": 3}})", "training.epoch"},
      {R"({"model": {"layers": [128, 64, 3]}})", "model.layers"},
      {R"({"collection": {"sample_budget": 1}})", "collection.sample_budget"},
      {R"({"collection": {"orientation_samples": 200}})", "collection.orientation_samples"},
      {R"({"training": {"lr_schedule": [{"epoch": 5, "lr": 0.1}]}})", "training.lr_schedule"},
      {R"({"method": "magic"})", "method"},
      {R"({"modality": "lidar"})", "modality"},
      {R"({"training": {"epochs": "many"}})", "training.epochs"},
      {R"({"sweep": {"kind": "weather"}})", "sweep.kind"},
      {R"({"schema_version": 2})", "schema_version"},
  };
  for (const Case& c : cases) {
    CAPTURE(c.patch);
    const std::string msg = MessageOf([&] { ResolveConfig("toy-complete", c.patch, {}); });
    CHECK(msg.rfind(c.field, 0) == 0);
  }
  const ExperimentConfig lidar = ResolveConfig("lidar-room", "", {});
  CHECK(lidar.modality == "lidar");
  CHECK(test::CodeOf([] { ResolveConfig("lidar-room", R"({"method": "explicit"})", {}); }) ==
        ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([] { ResolveConfig("", "", {}); }) == ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([] { ResolveConfig("no-such-preset", "", {}); }) ==
        ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([] { ResolveConfig("toy-complete", "[1, 2]", {}); }) ==
        ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([] { ResolveConfig("toy-complete", "{not json", {}); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("observation and noise settings follow the named seeds") {
  const ExperimentConfig c = ResolveConfig("toy-incomplete", "", {"orientation=31", "noise=32"});
  CHECK(c.ObservationConfig().heading_seed == 31);
  CHECK(c.ObservationConfig().d_max == 0.6);
  CHECK(c.NoiseConfig().seed == 32);
}

}  // namespace
}  // namespace wsloc::exp
