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

#ifndef WSLOC_BASELINES_HPP_
#define WSLOC_BASELINES_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wsloc/collect.hpp"
#include "wsloc/common.hpp"
#include "wsloc/env.hpp"

namespace wsloc::baselines {

// Joint landmark/position estimate for the explicit range + distance
// formulation.
struct ExplicitState {
  Points2 landmarks;
  Points2 positions;
  Eigen::VectorXd residual;
  int iterations = 0;

  double ResidualNorm() const { return residual.norm(); }
};

struct ExplicitOptions {
  int max_iters = 100;
  // Stop once the infinity norm of J^T r drops below this.
  double tol = 1e-10;
  double initial_damping = 1e-3;
  double damping_cap = 1e10;
};

// Number of range residuals (unclipped observations) plus distance
// residuals (all intra-segment pairs) for a landmark graph.
std::size_t ExplicitResidualCount(const collect::ConstraintGraph& graph);

// Levenberg-Marquardt on the stacked residuals |m_k - p_i| - x_k^(i) and
// |p_i - p_j| - c_ij. Accepted steps never increase the residual norm.
ExplicitState ExplicitSolve(const collect::ConstraintGraph& graph,
                            const ExplicitState& init,
                            const ExplicitOptions& options = {});

// Landmarks and positions uniform over the bounds.
ExplicitState RandomExplicitInit(const env::Bounds& bounds,
                                 std::size_t landmarks, std::size_t positions,
                                 Rng& rng);

// Best of `restarts` random initializations by residual norm.
ExplicitState ExplicitSolveRestarts(const collect::ConstraintGraph& graph,
                                    const env::Bounds& bounds, int restarts,
                                    std::uint64_t seed,
                                    const ExplicitOptions& options = {});

// Position from ranges to known landmarks; entries equal to d_max (or
// beyond) are ignored. Linear least squares followed by Gauss-Newton on
// the range residuals.
Vec2 Triangulate(std::span<const Vec2> landmarks,
                 const Eigen::VectorXd& distances, double d_max);

struct EdmMatrix {
  Eigen::MatrixXd d;

  static EdmMatrix FromPoints(const Points2& points);
  // Symmetric to 1e-12, zero diagonal, nonnegative.
  void Validate() const;
};

struct MdsResult {
  // dim x N coordinates.
  Eigen::MatrixXd coords;
  // All eigenvalues of the double-centred matrix, descending.
  Eigen::VectorXd eigenvalues;
  bool not_euclidean = false;
};

MdsResult ClassicalMds(const EdmMatrix& edm, int dim = 2);

struct PcaBasis {
  Eigen::VectorXd mean;
  // d x k, orthonormal columns ordered by explained variance.
  Eigen::MatrixXd components;
  Eigen::VectorXd explained_variance;
  bool rank_deficient = false;

  int dim() const { return static_cast<int>(mean.size()); }
  int k() const { return static_cast<int>(components.cols()); }
};

// `data` holds one sample per column (d x N).
PcaBasis PcaFit(const Eigen::MatrixXd& data, int k);
Eigen::VectorXd PcaProject(const PcaBasis& basis, const Eigen::VectorXd& row);
Eigen::MatrixXd PcaProjectAll(const PcaBasis& basis,
                              const Eigen::MatrixXd& data);

// Exact 1-nearest-neighbour under Euclidean distance; ties go to the lowest
// training index.
class KnnIndex {
 public:
  KnnIndex(Eigen::MatrixXd features, Points2 positions);

  std::size_t Nearest(const Eigen::VectorXd& query) const;
  Vec2 Predict(const Eigen::VectorXd& query) const;
  // One query per column.
  Points2 PredictBatch(const Eigen::MatrixXd& queries) const;

  std::size_t size() const { return static_cast<std::size_t>(features_.cols()); }
  const Eigen::MatrixXd& features() const { return features_; }
  const Points2& positions() const { return positions_; }
  // Stored scalars (features and attached positions).
  std::size_t FootprintScalars() const;

 private:
  Eigen::MatrixXd features_;
  Points2 positions_;
};

Vec2 KnnPredict(const Eigen::MatrixXd& train_features,
                const Points2& train_positions, const Eigen::VectorXd& query);

}  // namespace wsloc::baselines

#endif  // WSLOC_BASELINES_HPP_
