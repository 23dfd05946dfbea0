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

#include "wsloc/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wsloc/losses.hpp"

namespace wsloc::train {
namespace {

constexpr Eigen::Index kPredictChunk = 2048;

std::string Format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Eigen::MatrixXd StoredInputs(const collect::ConstraintGraph& graph) {
  const auto& obs = graph.observations();
  Eigen::MatrixXd inputs(graph.InputDim(), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    inputs.col(static_cast<Eigen::Index>(i)) = obs[i].values;
  }
  return inputs;
}

Points2 Predict(const net::MlpModel& model, const Eigen::MatrixXd& inputs) {
  Points2 out(2, inputs.cols());
  for (Eigen::Index start = 0; start < inputs.cols(); start += kPredictChunk) {
    const Eigen::Index n = std::min(kPredictChunk, inputs.cols() - start);
    out.middleCols(start, n) = net::Forward(model, inputs.middleCols(start, n));
  }
  return out;
}

TrainResult Train(const collect::ConstraintGraph& graph, net::Checkpoint start,
                  const TrainOptions& options,
                  const collect::LidarRenderer* renderer) {
  const bool lidar = graph.modality() == collect::Modality::kLidar;
  const bool supervised = options.objective == Objective::kSupervised;
  if (lidar && renderer == nullptr) {
    Fail(ErrorCode::kInvalidArgument, "lidar training needs a scan renderer");
  }
  if (start.model.input_dim() != graph.InputDim()) {
    Fail(ErrorCode::kDimensionMismatch,
         "model input size " + std::to_string(start.model.input_dim()) +
             " does not match observation size " +
             std::to_string(graph.InputDim()));
  }
  if (supervised && !graph.has_ground_truth()) {
    Fail(ErrorCode::kInvalidConfig,
         "method: supervised training is privileged and needs ground-truth "
         "positions, which this dataset does not carry");
  }
  const std::vector<Vec2>* gt =
      supervised ? &graph.ground_truth(collect::GroundTruthAccess::Grant())
                 : nullptr;
  const exp::TrainingSpec& spec = options.spec;
  const int copies = lidar ? graph.obs_config().orientation_samples : 1;
  const Eigen::MatrixXd stored = lidar ? Eigen::MatrixXd() : StoredInputs(graph);

  TrainResult result;
  result.checkpoint = std::move(start);
  net::MlpModel& model = result.checkpoint.model;
  net::AdamState& adam = result.checkpoint.adam;
  if (adam.first_moment.weights.empty()) adam = net::AdamState::For(model);
  adam.beta1 = spec.beta1;
  adam.beta2 = spec.beta2;
  adam.epsilon = spec.epsilon;

  std::vector<int> headings;
  for (int epoch = static_cast<int>(result.checkpoint.epoch); epoch < spec.epochs;
       ++epoch) {
    const auto salt = static_cast<std::uint64_t>(epoch);
    Rng shuffle = MakeRng(options.shuffle_seed, {salt});
    Rng orient = MakeRng(options.orientation_seed, {salt});
    const std::vector<loss::BatchPlan> batches =
        loss::MakeBatches(graph, spec.batch_size, shuffle, copies);
    const double lr = spec.LearningRate(epoch);

    double total = 0.0;
    int counted = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const loss::BatchPlan& plan = batches[b];
      if (!supervised && plan.pairs.empty()) continue;
      const auto rows = static_cast<Eigen::Index>(plan.rows.size());
      Eigen::MatrixXd inputs(graph.InputDim(), rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t idx = plan.rows[r];
        if (lidar) {
          if (plan.copy_of[r] == 0) {
            headings = collect::SampleHeadingIndices(renderer->orientations(),
                                                     copies, orient);
          }
          inputs.col(r) = renderer->Render(idx, headings[plan.copy_of[r]]);
        } else {
          inputs.col(r) = stored.col(static_cast<Eigen::Index>(idx));
        }
      }

      net::ForwardCache cache;
      const Points2 pred = net::Forward(model, inputs, &cache);
      loss::LossValue value;
      if (supervised) {
        Points2 targets(2, rows);
        for (Eigen::Index r = 0; r < rows; ++r) targets.col(r) = (*gt)[plan.rows[r]];
        value = loss::SupervisedLoss(pred, targets);
      } else {
        value = loss::DenseSegmentLoss(pred, plan.pairs);
      }
      if (!std::isfinite(value.value)) {
        Fail(ErrorCode::kNonFiniteLoss, "non-finite loss at epoch " +
                                            std::to_string(epoch) + ", batch " +
                                            std::to_string(b));
      }
      net::AdamStep(model, adam, net::Backward(model, cache, value.gradient), lr);
      total += value.value;
      ++counted;
    }
    const double mean = counted > 0 ? total / counted : 0.0;
    result.checkpoint.epoch = static_cast<std::uint64_t>(epoch) + 1;
    result.trace.push_back({epoch, mean, lr});
    if (options.on_epoch) options.on_epoch(epoch, mean);
  }
  return result;
}

void WriteLossCsv(const std::string& path, const std::vector<EpochRecord>& trace) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << "epoch,loss,lr\n";
  for (const EpochRecord& r : trace) {
    out << r.epoch << ',' << Format17(r.loss) << ',' << Format17(r.lr) << '\n';
  }
}

std::vector<EpochRecord> ReadLossCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "epoch,loss,lr") Fail(ErrorCode::kSchemaMismatch, path + ": bad header");
  std::vector<EpochRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    char c1 = 0, c2 = 0;
    std::istringstream ss(line);
    if (!(ss >> r.epoch >> c1 >> r.loss >> c2 >> r.lr) || c1 != ',' || c2 != ',') {
      Fail(ErrorCode::kSchemaMismatch, path + ": bad row '" + line + "'");
    }
    trace.push_back(r);
  }
  return trace;
}

}  // namespace wsloc::train
