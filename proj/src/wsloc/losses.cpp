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

#include "wsloc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wsloc::loss {
namespace {

constexpr double kZeroDistance = 1e-12;

void CheckPairs(const Points2& pred, std::span<const PairConstraint> pairs) {
  const auto n = static_cast<std::size_t>(pred.cols());
  for (const PairConstraint& p : pairs) {
    if (p.i >= n || p.j >= n) {
      Fail(ErrorCode::kShapeMismatch, "pair index outside the batch");
    }
    if (p.c < 0.0) Fail(ErrorCode::kInvalidArgument, "negative constraint");
  }
}

struct Unit {
  std::size_t segment = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

}  // namespace

LossValue SupervisedLoss(const Points2& pred, const Points2& gt) {
  if (pred.cols() != gt.cols()) {
    Fail(ErrorCode::kShapeMismatch, "prediction and target counts differ");
  }
  LossValue out;
  out.gradient = Points2::Zero(2, pred.cols());
  out.pair_count = static_cast<std::size_t>(pred.cols());
  if (pred.cols() == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(pred.cols());
  double sum = 0.0;
  for (Eigen::Index r = 0; r < pred.cols(); ++r) {
    const Vec2 diff = pred.col(r) - gt.col(r);
    const double norm = diff.norm();
    sum += norm;
    if (norm > 0.0) out.gradient.col(r) = diff * (inv_n / norm);
  }
  out.value = sum * inv_n;
  return out;
}

PairTerm WeakPairTerm(const Vec2& pred_i, const Vec2& pred_j, double c) {
  if (c < 0.0) Fail(ErrorCode::kInvalidArgument, "negative constraint");
  const Vec2 diff = pred_i - pred_j;
  const double d = diff.norm();
  PairTerm t;
  if (d < kZeroDistance && c < kZeroDistance) return t;
  const double denom = d + c;
  t.value = std::abs(d - c) / denom;
  // d/dd of |d - c| / (d + c) is +-2c / (d + c)^2, zero on d == c.
  double dterm = 0.0;
  if (d > c) {
    dterm = 2.0 * c / (denom * denom);
  } else if (d < c) {
    dterm = -2.0 * c / (denom * denom);
  }
  if (d > 0.0) t.grad_i = diff * (dterm / d);
  return t;
}

LossValue DenseSegmentLoss(const Points2& pred,
                           std::span<const PairConstraint> pairs) {
  if (pairs.empty()) Fail(ErrorCode::kEmptyPairSet, "batch has no pairs");
  CheckPairs(pred, pairs);
  LossValue out;
  out.gradient = Points2::Zero(2, pred.cols());
  out.pair_count = pairs.size();
  const double inv = 1.0 / static_cast<double>(pairs.size());
  double sum = 0.0;
  for (const PairConstraint& p : pairs) {
    const PairTerm t = WeakPairTerm(pred.col(p.i), pred.col(p.j), p.c);
    sum += t.value;
    out.gradient.col(p.i) += t.grad_i * inv;
    out.gradient.col(p.j) -= t.grad_i * inv;
  }
  out.value = sum * inv;
  return out;
}

ConstraintFunction EuclideanConstraint() {
  ConstraintFunction fn;
  fn.value = [](const Vec2& a, const Vec2& b) { return (a - b).norm(); };
  fn.gradient = [](const Vec2& a, const Vec2& b) {
    const Vec2 diff = a - b;
    const double d = diff.norm();
    const Vec2 g = d > 0.0 ? Vec2(diff / d) : Vec2(Vec2::Zero());
    return std::make_pair(g, Vec2(-g));
  };
  return fn;
}

LossValue GenericConstraintLoss(const Points2& pred,
                                std::span<const PairConstraint> edges,
                                const ConstraintFunction& fn) {
  if (edges.empty()) Fail(ErrorCode::kEmptyPairSet, "no constraint edges");
  if (!fn.value) Fail(ErrorCode::kInvalidArgument, "missing constraint function");
  CheckPairs(pred, edges);
  LossValue out;
  out.pair_count = edges.size();
  if (fn.gradient) out.gradient = Points2::Zero(2, pred.cols());
  for (const PairConstraint& e : edges) {
    const Vec2 a = pred.col(e.i);
    const Vec2 b = pred.col(e.j);
    const double residual = fn.value(a, b) - e.c;
    out.value += std::abs(residual);
    if (fn.gradient && residual != 0.0) {
      const auto [ga, gb] = fn.gradient(a, b);
      const double s = residual > 0.0 ? 1.0 : -1.0;
      out.gradient.col(e.i) += s * ga;
      out.gradient.col(e.j) += s * gb;
    }
  }
  return out;
}

std::vector<BatchPlan> MakeBatches(std::span<const collect::Segment> segments,
                                   std::size_t batch_size, Rng& stream,
                                   int copies) {
  if (batch_size < 2) Fail(ErrorCode::kBatchTooSmall, "batch_size must be >= 2");
  if (copies < 1) Fail(ErrorCode::kInvalidArgument, "copies must be >= 1");
  const std::size_t capacity =
      std::max<std::size_t>(1, batch_size / static_cast<std::size_t>(copies));

  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), stream);

  std::vector<Unit> units;
  for (std::size_t s : order) {
    const std::size_t n = segments[s].indices.size();
    if (n == 0) continue;
    const std::size_t windows = (n + capacity - 1) / capacity;
    const std::size_t base = n / windows;
    const std::size_t extra = n % windows;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < windows; ++w) {
      const std::size_t len = base + (w < extra ? 1 : 0);
      units.push_back({s, begin, begin + len});
      begin += len;
    }
  }

  std::vector<BatchPlan> batches;
  BatchPlan current;
  std::size_t used = 0;
  auto flush = [&] {
    if (!current.rows.empty()) batches.push_back(std::move(current));
    current = BatchPlan{};
    used = 0;
  };
  for (const Unit& u : units) {
    if (used + u.size() > capacity) flush();
    const collect::Segment& seg = segments[u.segment];
    const std::size_t first_row = current.rows.size();
    for (std::size_t k = u.begin; k < u.end; ++k) {
      for (int c = 0; c < copies; ++c) {
        current.rows.push_back(seg.indices[k]);
        current.copy_of.push_back(c);
        current.segment_ids.push_back(u.segment);
        current.arc_labels.push_back(seg.arc_labels[k]);
      }
    }
    const auto cp = static_cast<std::size_t>(copies);
    for (std::size_t a = 0; a < u.size(); ++a) {
      for (std::size_t b = a + 1; b < u.size(); ++b) {
        const double c = std::abs(seg.arc_labels[u.begin + b] -
                                  seg.arc_labels[u.begin + a]);
        for (std::size_t ca = 0; ca < cp; ++ca) {
          for (std::size_t cb = 0; cb < cp; ++cb) {
            current.pairs.push_back(
                {first_row + a * cp + ca, first_row + b * cp + cb, c});
          }
        }
      }
    }
    used += u.size();
  }
  flush();
  return batches;
}

}  // namespace wsloc::loss
