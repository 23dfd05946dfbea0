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

#include "wsloc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace wsloc::baselines {
namespace {

struct RangeResidual {
  std::size_t position;
  std::size_t landmark;
  double range;
};

struct DistanceResidual {
  std::size_t a;
  std::size_t b;
  double c;
};

// Residual layout and the segment partition of the positions. Positions
// only couple to positions of their own segment, so the position block of
// the normal equations is block diagonal by segment and the landmarks can
// be solved through a Schur complement.
struct Problem {
  std::size_t positions = 0;
  std::size_t landmarks = 0;
  std::vector<RangeResidual> ranges;
  std::vector<DistanceResidual> distances;
  std::vector<std::vector<std::size_t>> segment_positions;
  std::vector<std::vector<std::size_t>> segment_ranges;
  std::vector<std::vector<std::size_t>> segment_distances;
  std::vector<std::size_t> local_index;

  std::size_t ResidualCount() const { return ranges.size() + distances.size(); }
};

Problem BuildProblem(const collect::ConstraintGraph& graph) {
  if (graph.modality() != collect::Modality::kLandmarks) {
    Fail(ErrorCode::kInvalidArgument,
         "explicit positioning needs landmark observations");
  }
  Problem p;
  p.positions = graph.size();
  p.landmarks = static_cast<std::size_t>(graph.InputDim());
  p.local_index.assign(p.positions, 0);
  const double d_max = graph.obs_config().d_max;
  for (const collect::Segment& seg : graph.segments()) {
    std::vector<std::size_t> members = seg.indices;
    std::vector<std::size_t> ranges;
    std::vector<std::size_t> distances;
    for (std::size_t a = 0; a < members.size(); ++a) {
      const std::size_t i = members[a];
      p.local_index[i] = a;
      const Eigen::VectorXd& x = graph.observations()[i].values;
      for (std::size_t k = 0; k < p.landmarks; ++k) {
        if (x[static_cast<Eigen::Index>(k)] >= d_max) continue;
        ranges.push_back(p.ranges.size());
        p.ranges.push_back({i, k, x[static_cast<Eigen::Index>(k)]});
      }
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        distances.push_back(p.distances.size());
        p.distances.push_back(
            {i, members[b], std::abs(seg.arc_labels[b] - seg.arc_labels[a])});
      }
    }
    p.segment_positions.push_back(std::move(members));
    p.segment_ranges.push_back(std::move(ranges));
    p.segment_distances.push_back(std::move(distances));
  }
  return p;
}

Eigen::VectorXd Residuals(const Problem& p, const Points2& landmarks,
                          const Points2& positions) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(p.ResidualCount()));
  Eigen::Index row = 0;
  for (const RangeResidual& e : p.ranges) {
    r[row++] = (landmarks.col(e.landmark) - positions.col(e.position)).norm() -
               e.range;
  }
  for (const DistanceResidual& e : p.distances) {
    r[row++] = (positions.col(e.a) - positions.col(e.b)).norm() - e.c;
  }
  return r;
}

Vec2 UnitOrZero(const Vec2& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec2(v / n) : Vec2(Vec2::Zero());
}

struct SegmentBlocks {
  Eigen::MatrixXd hpp;  // 2n x 2n
  Eigen::MatrixXd hpl;  // 2n x 2M
  Eigen::VectorXd gp;
  // Filled by a solve: A^-1 * hpl and A^-1 * gp.
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

struct NormalEquations {
  std::vector<SegmentBlocks> segments;
  Eigen::MatrixXd hll;
  Eigen::VectorXd gl;

  double GradientInfNorm() const {
    double g = gl.size() ? gl.cwiseAbs().maxCoeff() : 0.0;
    for (const auto& s : segments) {
      if (s.gp.size()) g = std::max(g, s.gp.cwiseAbs().maxCoeff());
    }
    return g;
  }
};

NormalEquations Linearize(const Problem& p, const Points2& landmarks,
                          const Points2& positions,
                          const Eigen::VectorXd& residual) {
  const auto m2 = static_cast<Eigen::Index>(2 * p.landmarks);
  NormalEquations ne;
  ne.hll = Eigen::MatrixXd::Zero(m2, m2);
  ne.gl = Eigen::VectorXd::Zero(m2);
  const auto range_count = static_cast<Eigen::Index>(p.ranges.size());
  for (std::size_t s = 0; s < p.segment_positions.size(); ++s) {
    const auto n2 =
        static_cast<Eigen::Index>(2 * p.segment_positions[s].size());
    SegmentBlocks b;
    b.hpp = Eigen::MatrixXd::Zero(n2, n2);
    b.hpl = Eigen::MatrixXd::Zero(n2, m2);
    b.gp = Eigen::VectorXd::Zero(n2);
    for (std::size_t idx : p.segment_ranges[s]) {
      const RangeResidual& e = p.ranges[idx];
      const Vec2 u =
          UnitOrZero(landmarks.col(e.landmark) - positions.col(e.position));
      const Eigen::Matrix2d uu = u * u.transpose();
      const double r = residual[static_cast<Eigen::Index>(idx)];
      const auto a = static_cast<Eigen::Index>(2 * p.local_index[e.position]);
      const auto k = static_cast<Eigen::Index>(2 * e.landmark);
      // d r / d p = -u, d r / d m = u.
      b.hpp.block<2, 2>(a, a) += uu;
      b.hpl.block<2, 2>(a, k) -= uu;
      b.gp.segment<2>(a) -= u * r;
      ne.hll.block<2, 2>(k, k) += uu;
      ne.gl.segment<2>(k) += u * r;
    }
    for (std::size_t idx : p.segment_distances[s]) {
      const DistanceResidual& e = p.distances[idx];
      const Vec2 v = UnitOrZero(positions.col(e.a) - positions.col(e.b));
      const Eigen::Matrix2d vv = v * v.transpose();
      const double r = residual[range_count + static_cast<Eigen::Index>(idx)];
      const auto a = static_cast<Eigen::Index>(2 * p.local_index[e.a]);
      const auto c = static_cast<Eigen::Index>(2 * p.local_index[e.b]);
      b.hpp.block<2, 2>(a, a) += vv;
      b.hpp.block<2, 2>(c, c) += vv;
      b.hpp.block<2, 2>(a, c) -= vv;
      b.hpp.block<2, 2>(c, a) -= vv;
      b.gp.segment<2>(a) += v * r;
      b.gp.segment<2>(c) -= v * r;
    }
    ne.segments.push_back(std::move(b));
  }
  return ne;
}

// Solves (H + damping I) delta = -g. Returns false when a damped block is
// not positive definite.
bool SolveDamped(const Problem& p, NormalEquations& ne, double damping,
                 Points2& delta_landmarks, Points2& delta_positions) {
  const auto m2 = ne.hll.rows();
  Eigen::MatrixXd schur = ne.hll;
  schur.diagonal().array() += damping;
  Eigen::VectorXd rhs = ne.gl;
  for (SegmentBlocks& b : ne.segments) {
    Eigen::MatrixXd a = b.hpp;
    a.diagonal().array() += damping;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return false;
    b.x = llt.solve(b.hpl);
    b.y = llt.solve(b.gp);
    schur.noalias() -= b.hpl.transpose() * b.x;
    rhs.noalias() -= b.hpl.transpose() * b.y;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(schur);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd dl = -llt.solve(rhs);
  if (!dl.allFinite()) return false;
  delta_landmarks = Eigen::Map<const Points2>(dl.data(), 2, m2 / 2);
  delta_positions.setZero(2, static_cast<Eigen::Index>(p.positions));
  for (std::size_t s = 0; s < ne.segments.size(); ++s) {
    const SegmentBlocks& b = ne.segments[s];
    const Eigen::VectorXd dp = -(b.y + b.x * dl);
    const auto& members = p.segment_positions[s];
    for (std::size_t a = 0; a < members.size(); ++a) {
      delta_positions.col(static_cast<Eigen::Index>(members[a])) =
          dp.segment<2>(static_cast<Eigen::Index>(2 * a));
    }
  }
  return delta_positions.allFinite();
}

}  // namespace

std::size_t ExplicitResidualCount(const collect::ConstraintGraph& graph) {
  return BuildProblem(graph).ResidualCount();
}

ExplicitState ExplicitSolve(const collect::ConstraintGraph& graph,
                            const ExplicitState& init,
                            const ExplicitOptions& options) {
  const Problem p = BuildProblem(graph);
  if (static_cast<std::size_t>(init.landmarks.cols()) != p.landmarks ||
      static_cast<std::size_t>(init.positions.cols()) != p.positions) {
    Fail(ErrorCode::kShapeMismatch, "initial state does not match the graph");
  }
  ExplicitState state = init;
  state.iterations = 0;
  state.residual = Residuals(p, state.landmarks, state.positions);
  double cost = 0.5 * state.residual.squaredNorm();
  double damping = options.initial_damping;

  while (state.iterations < options.max_iters) {
    NormalEquations ne =
        Linearize(p, state.landmarks, state.positions, state.residual);
    if (ne.GradientInfNorm() < options.tol) break;
    bool accepted = false;
    while (!accepted) {
      Points2 dl;
      Points2 dp;
      if (!SolveDamped(p, ne, damping, dl, dp)) {
        damping *= 10.0;
        if (damping > options.damping_cap) {
          Fail(ErrorCode::kSingularNormalEquations,
               "damping cap reached without a positive definite system");
        }
        continue;
      }
      const Points2 landmarks = state.landmarks + dl;
      const Points2 positions = state.positions + dp;
      Eigen::VectorXd r = Residuals(p, landmarks, positions);
      const double new_cost = 0.5 * r.squaredNorm();
      if (new_cost < cost) {
        state.landmarks = landmarks;
        state.positions = positions;
        state.residual = std::move(r);
        cost = new_cost;
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
      } else {
        damping *= 10.0;
        if (damping > options.damping_cap) break;
      }
    }
    ++state.iterations;
    if (!accepted) break;
  }
  return state;
}

ExplicitState RandomExplicitInit(const env::Bounds& bounds,
                                 std::size_t landmarks, std::size_t positions,
                                 Rng& rng) {
  auto draw = [&](std::size_t n) {
    Points2 pts(2, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      pts(0, i) = Uniform(rng, bounds.xmin, bounds.xmax);
      pts(1, i) = Uniform(rng, bounds.ymin, bounds.ymax);
    }
    return pts;
  };
  ExplicitState s;
  s.landmarks = draw(landmarks);
  s.positions = draw(positions);
  return s;
}

ExplicitState ExplicitSolveRestarts(const collect::ConstraintGraph& graph,
                                    const env::Bounds& bounds, int restarts,
                                    std::uint64_t seed,
                                    const ExplicitOptions& options) {
  if (restarts < 1) Fail(ErrorCode::kInvalidArgument, "restarts must be >= 1");
  ExplicitState best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng = MakeRng(seed, {static_cast<std::uint64_t>(r)});
    const ExplicitState init = RandomExplicitInit(
        bounds, static_cast<std::size_t>(graph.InputDim()), graph.size(), rng);
    ExplicitState s = ExplicitSolve(graph, init, options);
    if (s.ResidualNorm() < best_norm) {
      best_norm = s.ResidualNorm();
      best = std::move(s);
    }
  }
  return best;
}

Vec2 Triangulate(std::span<const Vec2> landmarks,
                 const Eigen::VectorXd& distances, double d_max) {
  if (static_cast<Eigen::Index>(landmarks.size()) != distances.size()) {
    Fail(ErrorCode::kLengthMismatch, "landmark and distance counts differ");
  }
  std::vector<Vec2> m;
  std::vector<double> d;
  for (std::size_t k = 0; k < landmarks.size(); ++k) {
    const double r = distances[static_cast<Eigen::Index>(k)];
    if (r < d_max) {
      m.push_back(landmarks[k]);
      d.push_back(r);
    }
  }
  if (m.size() < 3) {
    Fail(ErrorCode::kDegenerateGeometry, "fewer than 3 usable ranges");
  }
  const auto n = static_cast<Eigen::Index>(m.size());
  Vec2 mean = Vec2::Zero();
  for (const Vec2& v : m) mean += v;
  mean /= static_cast<double>(n);
  Eigen::MatrixX2d centered(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) centered.row(i) = (m[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::MatrixX2d> svd(centered);
  const auto sv = svd.singularValues();
  if (!(sv[1] >= 1e-9 * sv[0]) || sv[0] == 0.0) {
    Fail(ErrorCode::kDegenerateGeometry, "usable landmarks are collinear");
  }

  // |p - m_k|^2 = d_k^2, minus its average over k, is linear in p.
  double mean_d2 = 0.0;
  double mean_m2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    mean_d2 += d[i] * d[i];
    mean_m2 += m[i].squaredNorm();
  }
  mean_d2 /= static_cast<double>(n);
  mean_m2 /= static_cast<double>(n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs[i] = 0.5 * (mean_d2 - d[i] * d[i] + m[i].squaredNorm() - mean_m2);
  }
  Vec2 p = centered.colPivHouseholderQr().solve(rhs);

  for (int iter = 0; iter < 50; ++iter) {
    Eigen::MatrixX2d jac(n, 2);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 diff = p - m[i];
      const double dist = diff.norm();
      r[i] = dist - d[i];
      jac.row(i) = (dist > 0.0 ? Vec2(diff / dist) : Vec2(Vec2::Zero())).transpose();
    }
    const Vec2 step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    p += step;
    if (step.norm() <= 1e-15 * std::max(1.0, p.norm())) break;
  }
  return p;
}

EdmMatrix EdmMatrix::FromPoints(const Points2& points) {
  const Eigen::Index n = points.cols();
  EdmMatrix e;
  e.d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (points.col(i) - points.col(j)).norm();
      e.d(i, j) = dist;
      e.d(j, i) = dist;
    }
  }
  return e;
}

void EdmMatrix::Validate() const {
  if (d.rows() != d.cols()) Fail(ErrorCode::kShapeMismatch, "EDM not square");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) Fail(ErrorCode::kInvalidArgument, "EDM diagonal not 0");
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (!(d(i, j) >= 0.0) || std::abs(d(i, j) - d(j, i)) > 1e-12) {
        Fail(ErrorCode::kInvalidArgument, "EDM not symmetric nonnegative");
      }
    }
  }
}

MdsResult ClassicalMds(const EdmMatrix& edm, int dim) {
  edm.Validate();
  const Eigen::Index n = edm.d.rows();
  if (dim < 1 || dim > n) Fail(ErrorCode::kInvalidArgument, "invalid MDS dim");
  const Eigen::MatrixXd d2 = edm.d.array().square().matrix();
  // B = -1/2 J D2 J with J = I - 11^T / n, applied via row/column means.
  const Eigen::VectorXd row_mean = d2.rowwise().mean();
  const Eigen::RowVectorXd col_mean = d2.colwise().mean();
  const double total_mean = d2.mean();
  Eigen::MatrixXd b = d2;
  b.colwise() -= row_mean;
  b.rowwise() -= col_mean;
  b.array() += total_mean;
  b *= -0.5;
  b = 0.5 * (b + b.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  MdsResult out;
  out.eigenvalues = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  out.coords.resize(dim, n);
  for (int k = 0; k < dim; ++k) {
    const double lambda = std::max(0.0, out.eigenvalues[k]);
    out.coords.row(k) = std::sqrt(lambda) * vectors.col(k).transpose();
  }
  if (n >= 3 && out.eigenvalues[2] > 1e-6 * std::abs(out.eigenvalues[0])) {
    out.not_euclidean = true;
  }
  return out;
}

PcaBasis PcaFit(const Eigen::MatrixXd& data, int k) {
  const Eigen::Index d = data.rows();
  const Eigen::Index n = data.cols();
  if (n < 2) Fail(ErrorCode::kInvalidArgument, "PCA needs at least 2 samples");
  if (k < 1 || k > d) Fail(ErrorCode::kInvalidArgument, "PCA needs 1 <= k <= d");
  PcaBasis basis;
  basis.mean = data.rowwise().mean();
  const Eigen::MatrixXd centered = data.colwise() - basis.mean;
  Eigen::MatrixXd cov(d, d);
  cov.setZero();
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  basis.components = vectors.leftCols(k);
  basis.explained_variance = values.head(k).cwiseMax(0.0);
  for (int c = 0; c < k; ++c) {
    auto col = basis.components.col(c);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(col[i]) > 1e-12) {
        if (col[i] < 0.0) col *= -1.0;
        break;
      }
    }
  }
  basis.rank_deficient = basis.explained_variance[k - 1] < 1e-12;
  return basis;
}

Eigen::VectorXd PcaProject(const PcaBasis& basis, const Eigen::VectorXd& row) {
  if (row.size() != basis.mean.size()) {
    Fail(ErrorCode::kDimensionMismatch, "PCA input dimension mismatch");
  }
  return basis.components.transpose() * (row - basis.mean);
}

Eigen::MatrixXd PcaProjectAll(const PcaBasis& basis,
                              const Eigen::MatrixXd& data) {
  if (data.rows() != basis.mean.size()) {
    Fail(ErrorCode::kDimensionMismatch, "PCA input dimension mismatch");
  }
  Eigen::MatrixXd out(basis.components.cols(), data.cols());
  out.noalias() =
      basis.components.transpose() * (data.colwise() - basis.mean);
  return out;
}

KnnIndex::KnnIndex(Eigen::MatrixXd features, Points2 positions)
    : features_(std::move(features)), positions_(std::move(positions)) {
  if (features_.cols() == 0) {
    Fail(ErrorCode::kEmptyTrainingSet, "KNN needs a nonempty training set");
  }
  if (features_.cols() != positions_.cols()) {
    Fail(ErrorCode::kLengthMismatch, "feature and position counts differ");
  }
}

std::size_t KnnIndex::Nearest(const Eigen::VectorXd& query) const {
  if (query.size() != features_.rows()) {
    Fail(ErrorCode::kDimensionMismatch, "KNN query dimension mismatch");
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < features_.cols(); ++i) {
    const double dist = (features_.col(i) - query).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

Vec2 KnnIndex::Predict(const Eigen::VectorXd& query) const {
  return positions_.col(static_cast<Eigen::Index>(Nearest(query)));
}

Points2 KnnIndex::PredictBatch(const Eigen::MatrixXd& queries) const {
  if (queries.rows() != features_.rows()) {
    Fail(ErrorCode::kDimensionMismatch, "KNN query dimension mismatch");
  }
  // Blocked over training columns so a tile of features stays in cache
  // while every query is compared against it. Distances are summed in the
  // same order as Nearest, so results match it exactly.
  constexpr Eigen::Index kTile = 256;
  const Eigen::Index nq = queries.cols();
  std::vector<double> best_d(static_cast<std::size_t>(nq),
                             std::numeric_limits<double>::infinity());
  std::vector<Eigen::Index> best(static_cast<std::size_t>(nq), 0);
  for (Eigen::Index t0 = 0; t0 < features_.cols(); t0 += kTile) {
    const Eigen::Index t1 = std::min(features_.cols(), t0 + kTile);
    for (Eigen::Index q = 0; q < nq; ++q) {
      const auto query = queries.col(q);
      for (Eigen::Index i = t0; i < t1; ++i) {
        const double dist = (features_.col(i) - query).squaredNorm();
        if (dist < best_d[q]) {
          best_d[q] = dist;
          best[q] = i;
        }
      }
    }
  }
  Points2 out(2, nq);
  for (Eigen::Index q = 0; q < nq; ++q) out.col(q) = positions_.col(best[q]);
  return out;
}

std::size_t KnnIndex::FootprintScalars() const {
  return static_cast<std::size_t>(features_.size() + positions_.size());
}

Vec2 KnnPredict(const Eigen::MatrixXd& train_features,
                const Points2& train_positions, const Eigen::VectorXd& query) {
  return KnnIndex(train_features, train_positions).Predict(query);
}

}  // namespace wsloc::baselines
