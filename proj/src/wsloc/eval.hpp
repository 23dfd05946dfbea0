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

#ifndef WSLOC_EVAL_HPP_
#define WSLOC_EVAL_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "wsloc/collect.hpp"
#include "wsloc/common.hpp"
#include "wsloc/env.hpp"

namespace wsloc::eval {

// x -> rotation * x + translation; rotation may be a reflection.
struct RigidTransform2D {
  Eigen::Matrix2d rotation = Eigen::Matrix2d::Identity();
  Vec2 translation = Vec2::Zero();

  Vec2 Apply(const Vec2& p) const { return rotation * p + translation; }
  Points2 Apply(const Points2& pts) const;
  bool IsReflection() const { return rotation.determinant() < 0.0; }
};

// Least-squares rigid transform taking source onto target (orthogonal
// Procrustes via SVD of the 2x2 cross-covariance).
RigidTransform2D RigidAlign(const Points2& source, const Points2& target,
                            bool allow_reflection);

struct GridEntry {
  Vec2 position = Vec2::Zero();
  Vec2 error = Vec2::Zero();
  double magnitude = 0.0;
};

struct EvalReport {
  bool aligned = false;
  RigidTransform2D alignment;
  double ate_rms = 0.0;
  double ate_median = 0.0;
  double ate_max = 0.0;
  // Aligned prediction minus ground truth, one column per point.
  Points2 errors;
  std::vector<GridEntry> grid;
  std::string config_echo = "{}";
};

// Median is the lower middle element for an even count.
EvalReport AteStats(const Points2& pred, const Points2& gt, bool align);

// Same statistics with a fixed, externally estimated transform.
EvalReport AteWithTransform(const Points2& pred, const Points2& gt,
                            const RigidTransform2D& transform);

// Batch predictor: inputs (dim x n) -> positions (2 x n).
using Predictor = std::function<Points2(const Eigen::MatrixXd&)>;

// Evaluates a resolution x resolution lattice of cell centres over the
// environment bounds, skipping occupied points. Lidar headings come from
// the configured heading grid, drawn from obs_cfg.heading_seed.
std::vector<GridEntry> ErrorGrid(const env::Environment2D& env,
                                 const Predictor& predictor, int resolution,
                                 const collect::ObservationConfig& obs_cfg,
                                 const RigidTransform2D& alignment);

// Summary statistics of a grid (RMS / median / max of the magnitudes).
EvalReport SummarizeGrid(std::vector<GridEntry> grid,
                         const RigidTransform2D& alignment);

struct SweepRow {
  double param = 0.0;
  double rms = 0.0;
  double median = 0.0;
  double max = 0.0;
  // Set when RMS rose by more than 50% over the previous row.
  bool flagged = false;
};

struct SweepTable {
  std::string parameter;
  std::vector<SweepRow> rows;
};

using SweepRunner = std::function<EvalReport(double value)>;

SweepTable NoiseSweep(std::span<const double> w_values, const SweepRunner& run);
SweepTable SampleCountSweep(std::span<const std::size_t> n_values,
                            std::size_t available, const SweepRunner& run);

struct SummaryRow {
  std::string method;
  std::string dataset;
  double rms = 0.0;
  double median = 0.0;
  double max = 0.0;
};

// Fixed-column CSV reports, numbers with 9 significant digits.
void WriteAteSummaryCsv(const std::string& path,
                        std::span<const SummaryRow> rows);
void WriteErrorGridCsv(const std::string& path,
                       std::span<const GridEntry> grid);
void WriteSweepCsv(const std::string& path, const SweepTable& table);
std::string ReportToJson(const EvalReport& report);

std::string FormatNumber(double v);

}  // namespace wsloc::eval

#endif  // WSLOC_EVAL_HPP_
