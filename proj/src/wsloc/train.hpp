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

#ifndef WSLOC_TRAIN_HPP_
#define WSLOC_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsloc/collect.hpp"
#include "wsloc/config.hpp"
#include "wsloc/net.hpp"

namespace wsloc::train {

enum class Objective { kWeak, kSupervised };

struct TrainOptions {
  Objective objective = Objective::kWeak;
  exp::TrainingSpec spec;
  std::uint64_t shuffle_seed = 0;
  // Heading draws for lidar re-rendering.
  std::uint64_t orientation_seed = 0;
  // Called after every epoch with the epoch index and its mean batch loss.
  std::function<void(int, double)> on_epoch;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  net::Checkpoint checkpoint;
  std::vector<EpochRecord> trace;
};

// Continues `start` from its recorded epoch up to spec.epochs. Lidar graphs
// need `renderer`; each observation then enters every epoch as
// orientation_samples scans at grid headings drawn for that epoch.
TrainResult Train(const collect::ConstraintGraph& graph, net::Checkpoint start,
                  const TrainOptions& options,
                  const collect::LidarRenderer* renderer = nullptr);

// One input column per observation as stored in the dataset.
Eigen::MatrixXd StoredInputs(const collect::ConstraintGraph& graph);

// Forward pass in fixed-size chunks.
Points2 Predict(const net::MlpModel& model, const Eigen::MatrixXd& inputs);

void WriteLossCsv(const std::string& path, const std::vector<EpochRecord>& trace);
std::vector<EpochRecord> ReadLossCsv(const std::string& path);

}  // namespace wsloc::train

#endif  // WSLOC_TRAIN_HPP_
