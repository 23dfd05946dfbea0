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

#include "wsloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/SVD>

#include "json.hpp"

namespace wsloc::eval {
namespace {

constexpr Eigen::Index kGridChunk = 1024;

void Summarize(EvalReport& report) {
  const Eigen::Index n = report.errors.cols();
  if (n == 0) return;
  std::vector<double> norms(static_cast<std::size_t>(n));
  double sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    norms[i] = report.errors.col(i).norm();
    sq += norms[i] * norms[i];
  }
  report.ate_rms = std::sqrt(sq / static_cast<double>(n));
  report.ate_max = *std::max_element(norms.begin(), norms.end());
  const auto mid = norms.begin() + (n - 1) / 2;
  std::nth_element(norms.begin(), mid, norms.end());
  report.ate_median = *mid;
}

std::ofstream OpenCsv(const std::string& path, const char* header) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << header << '\n';
  return out;
}

void CheckIncreasing(std::span<const double> values) {
  if (values.empty()) Fail(ErrorCode::kInvalidConfig, "empty sweep list");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      Fail(ErrorCode::kInvalidConfig, "sweep values must strictly increase");
    }
  }
}

SweepRow RowFrom(double param, const EvalReport& r) {
  return {param, r.ate_rms, r.ate_median, r.ate_max, false};
}

}  // namespace

Points2 RigidTransform2D::Apply(const Points2& pts) const {
  Points2 out = rotation * pts;
  out.colwise() += translation;
  return out;
}

RigidTransform2D RigidAlign(const Points2& source, const Points2& target,
                            bool allow_reflection) {
  if (source.cols() != target.cols()) {
    Fail(ErrorCode::kLengthMismatch, "point sets differ in size");
  }
  if (source.cols() < 2) {
    Fail(ErrorCode::kInvalidArgument, "alignment needs at least 2 points");
  }
  const Vec2 src_mean = source.rowwise().mean();
  const Vec2 dst_mean = target.rowwise().mean();
  const Points2 src = source.colwise() - src_mean;
  const Points2 dst = target.colwise() - dst_mean;
  const double spread = src.colwise().norm().maxCoeff();
  if (!(spread > 1e-12 * std::max(1.0, src_mean.norm()))) {
    Fail(ErrorCode::kDegenerateCloud, "all source points coincide");
  }
  const Eigen::Matrix2d cross = src * dst.transpose();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d v = svd.matrixV();
  const Eigen::Matrix2d& u = svd.matrixU();
  if (!allow_reflection && (v * u.transpose()).determinant() < 0.0) {
    v.col(1) *= -1.0;
  }
  RigidTransform2D t;
  t.rotation = v * u.transpose();
  t.translation = dst_mean - t.rotation * src_mean;
  return t;
}

EvalReport AteStats(const Points2& pred, const Points2& gt, bool align) {
  if (pred.cols() != gt.cols()) {
    Fail(ErrorCode::kLengthMismatch, "prediction and ground truth differ in "
                                     "length");
  }
  if (pred.cols() < 1) Fail(ErrorCode::kInvalidArgument, "no points");
  EvalReport report;
  report.aligned = align;
  if (align) report.alignment = RigidAlign(pred, gt, /*allow_reflection=*/true);
  report.errors = report.alignment.Apply(pred) - gt;
  Summarize(report);
  return report;
}

EvalReport AteWithTransform(const Points2& pred, const Points2& gt,
                            const RigidTransform2D& transform) {
  if (pred.cols() != gt.cols()) {
    Fail(ErrorCode::kLengthMismatch, "prediction and ground truth differ in "
                                     "length");
  }
  EvalReport report;
  report.aligned = true;
  report.alignment = transform;
  report.errors = transform.Apply(pred) - gt;
  Summarize(report);
  return report;
}

std::vector<GridEntry> ErrorGrid(const env::Environment2D& env,
                                 const Predictor& predictor, int resolution,
                                 const collect::ObservationConfig& obs_cfg,
                                 const RigidTransform2D& alignment) {
  if (resolution < 2) {
    Fail(ErrorCode::kInvalidArgument, "grid resolution must be >= 2");
  }
  const env::Bounds& b = env.bounds();
  std::vector<Vec2> points;
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const Vec2 p(b.xmin + (col + 0.5) * b.Width() / resolution,
                   b.ymin + (row + 0.5) * b.Height() / resolution);
      if (env.IsFree(p)) points.push_back(p);
    }
  }

  Rng heading_rng = MakeRng(obs_cfg.heading_seed);
  std::vector<GridEntry> grid;
  grid.reserve(points.size());
  for (std::size_t start = 0; start < points.size(); start += kGridChunk) {
    const std::size_t end = std::min(points.size(), start + kGridChunk);
    Eigen::MatrixXd inputs;
    for (std::size_t i = start; i < end; ++i) {
      const collect::Observation obs =
          collect::Observe(env, points[i], obs_cfg, heading_rng);
      if (inputs.size() == 0) {
        inputs.resize(obs.values.size(), static_cast<Eigen::Index>(end - start));
      }
      inputs.col(static_cast<Eigen::Index>(i - start)) = obs.values;
    }
    const Points2 pred = alignment.Apply(predictor(inputs));
    for (std::size_t i = start; i < end; ++i) {
      GridEntry e;
      e.position = points[i];
      e.error = pred.col(static_cast<Eigen::Index>(i - start)) - points[i];
      e.magnitude = e.error.norm();
      grid.push_back(e);
    }
  }
  return grid;
}

EvalReport SummarizeGrid(std::vector<GridEntry> grid,
                         const RigidTransform2D& alignment) {
  EvalReport report;
  report.aligned = true;
  report.alignment = alignment;
  report.errors.resize(2, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    report.errors.col(static_cast<Eigen::Index>(i)) = grid[i].error;
  }
  Summarize(report);
  report.grid = std::move(grid);
  return report;
}

SweepTable NoiseSweep(std::span<const double> w_values, const SweepRunner& run) {
  CheckIncreasing(w_values);
  for (double w : w_values) {
    if (w < 0.0) Fail(ErrorCode::kInvalidConfig, "noise factor must be >= 0");
  }
  SweepTable table{"w", {}};
  for (double w : w_values) table.rows.push_back(RowFrom(w, run(w)));
  return table;
}

SweepTable SampleCountSweep(std::span<const std::size_t> n_values,
                            std::size_t available, const SweepRunner& run) {
  std::vector<double> as_double(n_values.begin(), n_values.end());
  CheckIncreasing(as_double);
  for (std::size_t n : n_values) {
    if (n > available) {
      Fail(ErrorCode::kSampleBudgetExceeded,
           "sample count " + std::to_string(n) + " exceeds the dataset (" +
               std::to_string(available) + ")");
    }
  }
  SweepTable table{"n", {}};
  for (std::size_t n : n_values) {
    SweepRow row = RowFrom(static_cast<double>(n), run(static_cast<double>(n)));
    if (!table.rows.empty() && row.rms > 1.5 * table.rows.back().rms) {
      row.flagged = true;
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void WriteAteSummaryCsv(const std::string& path,
                        std::span<const SummaryRow> rows) {
  auto out = OpenCsv(path, "method,dataset,rms,median,max");
  for (const SummaryRow& r : rows) {
    out << r.method << ',' << r.dataset << ',' << FormatNumber(r.rms) << ','
        << FormatNumber(r.median) << ',' << FormatNumber(r.max) << '\n';
  }
}

void WriteErrorGridCsv(const std::string& path,
                       std::span<const GridEntry> grid) {
  auto out = OpenCsv(path, "x,y,ex,ey,magnitude");
  for (const GridEntry& e : grid) {
    out << FormatNumber(e.position.x()) << ',' << FormatNumber(e.position.y())
        << ',' << FormatNumber(e.error.x()) << ',' << FormatNumber(e.error.y())
        << ',' << FormatNumber(e.magnitude) << '\n';
  }
}

void WriteSweepCsv(const std::string& path, const SweepTable& table) {
  auto out = OpenCsv(path, "param,rms,median,max");
  for (const SweepRow& r : table.rows) {
    out << FormatNumber(r.param) << ',' << FormatNumber(r.rms) << ','
        << FormatNumber(r.median) << ',' << FormatNumber(r.max) << '\n';
  }
}

std::string ReportToJson(const EvalReport& report) {
  nlohmann::json j;
  const auto& r = report.alignment.rotation;
  j["aligned"] = report.aligned;
  j["alignment"] = {
      {"rotation", {{r(0, 0), r(0, 1)}, {r(1, 0), r(1, 1)}}},
      {"translation",
       {report.alignment.translation.x(), report.alignment.translation.y()}},
      {"reflection", report.alignment.IsReflection()}};
  j["ate_rms"] = report.ate_rms;
  j["ate_median"] = report.ate_median;
  j["ate_max"] = report.ate_max;
  j["count"] = report.errors.cols();
  j["grid_entries"] = report.grid.size();
  j["config"] = nlohmann::json::parse(report.config_echo);
  return j.dump(2);
}

}  // namespace wsloc::eval
