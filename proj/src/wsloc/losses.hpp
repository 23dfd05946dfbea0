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

#ifndef WSLOC_LOSSES_HPP_
#define WSLOC_LOSSES_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "wsloc/collect.hpp"
#include "wsloc/common.hpp"

namespace wsloc::loss {

// Distance constraint between two rows of a batch.
struct PairConstraint {
  std::size_t i = 0;
  std::size_t j = 0;
  double c = 0.0;
};

struct LossValue {
  double value = 0.0;
  // dL/d(pred), one column per batch row.
  Points2 gradient;
  std::size_t pair_count = 0;
};

// Mean Euclidean distance between predictions and targets.
LossValue SupervisedLoss(const Points2& pred, const Points2& gt);

struct PairTerm {
  double value = 0.0;
  // Gradient with respect to pred_i; the gradient for pred_j is its negation.
  Vec2 grad_i = Vec2::Zero();
};

// | |pi - pj| - c | / ( |pi - pj| + c ), bounded in [0, 1].
PairTerm WeakPairTerm(const Vec2& pred_i, const Vec2& pred_j, double c);

// Mean of WeakPairTerm over the pairs. Throws EmptyPairSet on no pairs.
LossValue DenseSegmentLoss(const Points2& pred,
                           std::span<const PairConstraint> pairs);

struct ConstraintFunction {
  std::function<double(const Vec2&, const Vec2&)> value;
  // Optional: d(value)/d(pi), d(value)/d(pj). Without it the loss carries
  // no gradient.
  std::function<std::pair<Vec2, Vec2>(const Vec2&, const Vec2&)> gradient;
};

ConstraintFunction EuclideanConstraint();

// Unnormalized sum over edges of |fn(pi, pj) - c|.
LossValue GenericConstraintLoss(const Points2& pred,
                                std::span<const PairConstraint> edges,
                                const ConstraintFunction& fn);

struct BatchPlan {
  // Observation index of each row.
  std::vector<std::size_t> rows;
  // Row r is copy copy_of[r] of its observation (always 0 unless copies > 1).
  std::vector<int> copy_of;
  std::vector<std::size_t> segment_ids;
  std::vector<double> arc_labels;
  std::vector<PairConstraint> pairs;
};

// One epoch of batches. Segments are shuffled and packed whole; a segment
// larger than the batch is split into balanced contiguous windows. Each
// observation occupies `copies` rows; pairs join rows of different
// observations inside the same segment window.
std::vector<BatchPlan> MakeBatches(std::span<const collect::Segment> segments,
                                   std::size_t batch_size, Rng& stream,
                                   int copies = 1);

inline std::vector<BatchPlan> MakeBatches(const collect::ConstraintGraph& graph,
                                          std::size_t batch_size, Rng& stream,
                                          int copies = 1) {
  return MakeBatches(graph.segments(), batch_size, stream, copies);
}

}  // namespace wsloc::loss

#endif  // WSLOC_LOSSES_HPP_
