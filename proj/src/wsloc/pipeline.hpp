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

#ifndef WSLOC_PIPELINE_HPP_
#define WSLOC_PIPELINE_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wsloc/baselines.hpp"
#include "wsloc/collect.hpp"
#include "wsloc/config.hpp"
#include "wsloc/env.hpp"
#include "wsloc/eval.hpp"
#include "wsloc/net.hpp"
#include "wsloc/train.hpp"

namespace wsloc::pipeline {

using Logger = std::function<void(const std::string&)>;

// Artifact file names inside an output directory.
inline constexpr char kEnvFile[] = "env.json";
inline constexpr char kDatasetFile[] = "dataset.jsonl";
inline constexpr char kCheckpointFile[] = "checkpoint.bin";
inline constexpr char kLossFile[] = "loss.csv";
inline constexpr char kExplicitFile[] = "explicit_state.json";
inline constexpr char kMdsFile[] = "mds_state.json";
inline constexpr char kPcaKnnFile[] = "pca_knn.bin";
inline constexpr char kEvalReportFile[] = "eval_report.json";
inline constexpr char kAteSummaryFile[] = "ate_summary.csv";
inline constexpr char kErrorGridFile[] = "error_grid.csv";
inline constexpr char kSweepFile[] = "sweep.csv";
inline constexpr char kSweepReportFile[] = "sweep_report.json";

std::string ManifestName(const std::string& command);

struct Workspace {
  std::shared_ptr<const env::Environment2D> env;
  std::shared_ptr<const collect::ConstraintGraph> graph;
};

// Environment and dataset for a config, generated in memory.
Workspace BuildWorkspace(const exp::ExperimentConfig& config);
// Dataset (and the environment it references) from disk.
Workspace LoadWorkspace(const std::string& dataset_path);

struct MdsState {
  std::vector<std::size_t> indices;
  Points2 coords;
  Eigen::VectorXd eigenvalues;
  bool not_euclidean = false;
};

struct PcaKnnState {
  baselines::PcaBasis basis;
  std::shared_ptr<const baselines::KnnIndex> index;
};

// Result of the training stage for any method.
struct FittedMethod {
  std::string method;
  std::optional<net::Checkpoint> network;
  std::vector<train::EpochRecord> trace;
  std::optional<baselines::ExplicitState> explicit_state;
  std::optional<MdsState> mds;
  std::optional<PcaKnnState> pca_knn;
};

FittedMethod Fit(const exp::ExperimentConfig& config, const Workspace& ws,
                 const Logger& log = {});

std::string ArtifactName(const std::string& method);
void SaveFitted(const FittedMethod& fitted, const std::string& path);
FittedMethod LoadFitted(const std::string& method, const std::string& path,
                        const exp::ExperimentConfig& config);

struct EvalOutcome {
  // Headline report: the grid (landmarks) or held-out test set (lidar)
  // under the method's primary alignment.
  eval::EvalReport primary;
  std::vector<eval::SummaryRow> summary;
  std::vector<eval::GridEntry> grid;
  std::string report_json;
};

EvalOutcome Evaluate(const exp::ExperimentConfig& config, const Workspace& ws,
                     const FittedMethod& fitted);

// Commands. Each writes its artifacts and a manifest into `out_dir` and
// returns the manifest JSON.
std::string CmdCollect(const exp::ExperimentConfig& config,
                       const std::string& out_dir, const Logger& log = {});
std::string CmdTrain(const exp::ExperimentConfig& config,
                     const std::string& out_dir, const Logger& log = {});
std::string CmdEval(const exp::ExperimentConfig& config,
                    const std::string& out_dir, const Logger& log = {});
std::string CmdSweep(const exp::ExperimentConfig& config,
                     const std::string& out_dir, const Logger& log = {});

}  // namespace wsloc::pipeline

#endif  // WSLOC_PIPELINE_HPP_
