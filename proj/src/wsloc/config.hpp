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

#ifndef WSLOC_CONFIG_HPP_
#define WSLOC_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsloc/collect.hpp"
#include "wsloc/env.hpp"

namespace wsloc::exp {

struct EnvironmentSpec {
  // landmarks | room | file
  std::string kind = "landmarks";
  env::Bounds bounds;
  int landmarks = 128;
  env::RoomSpec room;
  std::string file;
};

struct CollectionSpec {
  // dense | endpoint
  std::string strategy = "dense";
  double spacing = 0.02;
  int segments = 128;
  std::size_t sample_budget = 0;
  // Waypoint count for the endpoint strategy.
  std::size_t positions = 1570;
  std::optional<double> d_max;
  int n_beams = 256;
  double max_range = 10.0;
  int orientations = 100;
  int orientation_samples = 5;
};

struct NoiseSpec {
  double w = 0.0;
  // increment | pair
  std::string model = "increment";
};

struct LrStep {
  int epoch = 0;
  double lr = 1e-3;
};

struct TrainingSpec {
  int epochs = 1500;
  std::size_t batch_size = 800;
  std::vector<LrStep> lr_schedule{{0, 1e-3}, {300, 1e-4}};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  double LearningRate(int epoch) const;
};

struct EvalSpec {
  int grid_resolution = 128;
  std::size_t alignment_points = 500;
  // Held-out random positions (lidar).
  std::size_t test_positions = 2000;
  int pca_components = 128;
  int explicit_restarts = 10;
  int explicit_max_iters = 100;
  std::size_t mds_points = 1000;
};

struct SweepSpec {
  // none | noise | samples
  std::string kind = "none";
  // For sample sweeps a value of 0 stands for the full dataset.
  std::vector<double> values;
};

struct PathSpec {
  // Empty: <out>/dataset.jsonl and <out>/<method artifact>.
  std::string dataset;
  std::string model;
};

// Named seeds; every one is required.
struct Seeds {
  std::uint64_t env = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t noise = 0;
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t orientation = 0;
  std::uint64_t eval = 0;

  std::uint64_t& ByName(const std::string& name);
  static const std::vector<std::string>& Names();
};

struct ExperimentConfig {
  std::string name = "custom";
  EnvironmentSpec environment;
  // landmarks | lidar
  std::string modality = "landmarks";
  CollectionSpec collection;
  NoiseSpec noise;
  std::vector<int> layers{128, 512, 512, 512, 256, 256, 128, 64, 2};
  std::string activation = "relu";
  TrainingSpec training;
  // deepgps | supervised | explicit | mds_oracle | pca_knn
  std::string method = "deepgps";
  EvalSpec eval;
  SweepSpec sweep;
  PathSpec paths;
  Seeds seeds;

  collect::ObservationConfig ObservationConfig() const;
  collect::NoiseConfig NoiseConfig() const;
};

// Parses and validates; unknown keys, missing seeds and out-of-range values
// are InvalidConfig errors naming the offending field.
ExperimentConfig ConfigFromJson(const std::string& text);
std::string ConfigToJson(const ExperimentConfig& config);
void ValidateConfig(const ExperimentConfig& config);

const std::vector<std::string>& PresetNames();
// Full JSON document of a preset.
std::string PresetJson(const std::string& name);

// Resolution order: preset (if any), then the config file merged on top as
// a JSON merge patch, then seed overrides ("name=value").
ExperimentConfig ResolveConfig(const std::string& preset,
                               const std::string& config_text,
                               const std::vector<std::string>& seed_overrides);

}  // namespace wsloc::exp

#endif  // WSLOC_CONFIG_HPP_
