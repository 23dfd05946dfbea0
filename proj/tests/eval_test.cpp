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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "test_util.hpp"
#include "wsloc/eval.hpp"

namespace wsloc::eval {
namespace {

Points2 RandomPoints(Eigen::Index n, Rng& rng) {
  Points2 p(2, n);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = Uniform(rng, -1.0, 1.0);
  return p;
}

Eigen::Matrix2d Rotation(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

double Rms(const Points2& a, const Points2& b) {
  return std::sqrt((a - b).colwise().squaredNorm().mean());
}

// Predictor that returns the true position of each lattice observation.
Predictor LookupStub(const env::Environment2D& env, int resolution,
                     const collect::ObservationConfig& cfg) {
  auto table = std::make_shared<std::map<std::vector<double>, Vec2>>();
  const env::Bounds& b = env.bounds();
  Rng rng = MakeRng(cfg.heading_seed);
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const Vec2 p(b.xmin + (col + 0.5) * b.Width() / resolution,
                   b.ymin + (row + 0.5) * b.Height() / resolution);
      if (!env.IsFree(p)) continue;
      const Eigen::VectorXd v = collect::Observe(env, p, cfg, rng).values;
      (*table)[std::vector<double>(v.data(), v.data() + v.size())] = p;
    }
  }
  return [table](const Eigen::MatrixXd& x) {
    Points2 out(2, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const std::vector<double> key(x.col(c).data(), x.col(c).data() + x.rows());
      out.col(c) = table->at(key);
    }
    return out;
  };
}

TEST_CASE("alignment of identical clouds is the identity") {
  Rng rng = MakeRng(1);
  const Points2 p = RandomPoints(20, rng);
  const RigidTransform2D t = RigidAlign(p, p, true);
  CHECK((t.rotation - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  CHECK(t.translation.norm() < 1e-12);
  CHECK(AteStats(p, p, true).ate_rms < 1e-12);
}

TEST_CASE("alignment recovers a known rigid motion") {
  Rng rng = MakeRng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Points2 src = RandomPoints(30, rng);
    const Eigen::Matrix2d r = Rotation(Uniform(rng, -kPi, kPi));
    const Vec2 t(Uniform(rng, -3, 3), Uniform(rng, -3, 3));
    const Points2 dst = (r * src).colwise() + t;
    const RigidTransform2D got = RigidAlign(src, dst, false);
    CHECK((got.rotation - r).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((got.translation - t).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((got.rotation.transpose() * got.rotation - Eigen::Matrix2d::Identity()).norm() <
          1e-10);
  }
}

TEST_CASE("mirror images need reflection") {
  Rng rng = MakeRng(3);
  const Points2 src = RandomPoints(25, rng);
  Points2 mirrored = src;
  mirrored.row(0) *= -1.0;
  const RigidTransform2D with = RigidAlign(src, mirrored, true);
  CHECK(with.IsReflection());
  CHECK(Rms(with.Apply(src), mirrored) < 1e-12);
  const RigidTransform2D without = RigidAlign(src, mirrored, false);
  CHECK_FALSE(without.IsReflection());
  CHECK(Rms(without.Apply(src), mirrored) > 1e-3);
}

TEST_CASE("alignment errors") {
  const Points2 same = Points2::Ones(2, 5);
  CHECK(test::CodeOf([&] { RigidAlign(same, same, true); }) == ErrorCode::kDegenerateCloud);
  CHECK(test::CodeOf([&] { RigidAlign(Points2::Zero(2, 1), Points2::Zero(2, 1), true); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(test::CodeOf([&] { AteStats(Points2::Zero(2, 3), Points2::Zero(2, 4), false); }) ==
        ErrorCode::kLengthMismatch);
}

TEST_CASE("ATE statistics by hand") {
  Points2 gt = Points2::Zero(2, 4);
  Points2 pred = gt;
  pred(0, 3) = 1.0;
  const EvalReport r = AteStats(pred, gt, false);
  CHECK(r.ate_rms == 0.5);
  CHECK(r.ate_median == 0.0);
  CHECK(r.ate_max == 1.0);
  const EvalReport zero = AteStats(gt, gt, false);
  CHECK(zero.ate_rms == 0.0);
  CHECK(zero.ate_max == 0.0);
  Points2 odd = Points2::Zero(2, 3);
  odd(1, 0) = 3.0;
  odd(1, 1) = 1.0;
  CHECK(AteStats(odd, Points2::Zero(2, 3), false).ate_median == 1.0);
}

TEST_CASE("aligned ATE is gauge invariant and a lower bound") {
  Rng rng = MakeRng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Points2 gt = RandomPoints(40, rng);
    const Points2 pred = gt + 0.05 * RandomPoints(40, rng);
    const EvalReport base = AteStats(pred, gt, true);
    Eigen::Matrix2d r = Rotation(Uniform(rng, -kPi, kPi));
    if (trial % 2) r.col(0) *= -1.0;
    const Points2 moved = (r * pred).colwise() + Vec2(Uniform(rng, -4, 4), Uniform(rng, -4, 4));
    const EvalReport again = AteStats(moved, gt, true);
    CHECK(std::abs(again.ate_rms - base.ate_rms) < 1e-9);
    CHECK(std::abs(again.ate_median - base.ate_median) < 1e-9);
    CHECK(std::abs(again.ate_max - base.ate_max) < 1e-9);
  }
  const Points2 gt = RandomPoints(30, rng);
  const Points2 pred = gt + 0.1 * RandomPoints(30, rng);
  const double best = AteStats(pred, gt, true).ate_rms;
  for (int t = 0; t < 1000; ++t) {
    RigidTransform2D any;
    any.rotation = Rotation(Uniform(rng, -kPi, kPi));
    if (t % 2) any.rotation.col(1) *= -1.0;
    any.translation = Vec2(Uniform(rng, -0.3, 0.3), Uniform(rng, -0.3, 0.3));
    CHECK(Rms(any.Apply(pred), gt) >= best - 1e-12);
  }
}

TEST_CASE("two points with equal spacing align exactly") {
  Points2 a(2, 2);
  Points2 b(2, 2);
  a << 0, 1, 0, 1;
  b << 5, 5, -2, -2 + std::sqrt(2.0);
  CHECK(AteStats(a, b, true).ate_rms < 1e-12);
}

TEST_CASE("fixed transform statistics") {
  Rng rng = MakeRng(5);
  const Points2 gt = RandomPoints(10, rng);
  RigidTransform2D t;
  t.translation = Vec2(1.0, 0.0);
  const EvalReport r = AteWithTransform(gt, gt, t);
  CHECK(r.ate_rms == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.ate_max == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("error grid over a landmark field") {
  const env::Environment2D field = env::GenerateLandmarkEnv({-1, 1, -1, 1}, 8, 2);
  collect::ObservationConfig cfg;
  const Predictor stub = LookupStub(field, 128, cfg);
  const auto grid = ErrorGrid(field, stub, 128, cfg, {});
  CHECK(grid.size() == 16384);
  for (const GridEntry& e : grid) CHECK(e.magnitude == 0.0);
  const EvalReport summary = SummarizeGrid(grid, {});
  CHECK(summary.ate_rms == 0.0);
  CHECK(test::CodeOf([&] { ErrorGrid(field, stub, 1, cfg, {}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("error grid over a lidar room") {
  env::RoomSpec spec;
  spec.rows = 32;
  spec.cols = 32;
  spec.random_obstacles = 3;
  const env::Environment2D room = env::GenerateRoomEnv(spec, 6);
  collect::ObservationConfig cfg;
  cfg.modality = collect::Modality::kLidar;
  cfg.n_beams = 16;
  cfg.orientations = 8;
  cfg.heading_seed = 44;
  const Predictor stub = LookupStub(room, 32, cfg);
  const auto grid = ErrorGrid(room, stub, 32, cfg, {});
  CHECK(grid.size() == room.occupancy()->FreeCellCount());
  for (const GridEntry& e : grid) {
    CHECK(room.IsFree(e.position));
    CHECK(e.magnitude == 0.0);
  }
  // Same inputs give the same grid.
  const auto again = ErrorGrid(room, stub, 32, cfg, {});
  REQUIRE(again.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(again[i].position == grid[i].position);
}

TEST_CASE("sweeps") {
  const double ws[] = {0.0, 0.02, 0.04};
  int calls = 0;
  const SweepTable noise = NoiseSweep(ws, [&](double w) {
    ++calls;
    EvalReport r;
    r.ate_rms = w;
    return r;
  });
  CHECK(calls == 3);
  CHECK(noise.rows.size() == 3);
  CHECK(noise.rows[2].rms == 0.04);
  const double unsorted[] = {0.1, 0.0};
  CHECK(test::CodeOf([&] { NoiseSweep(unsorted, [](double) { return EvalReport{}; }); }) ==
        ErrorCode::kInvalidConfig);
  CHECK(test::CodeOf([&] { NoiseSweep({}, [](double) { return EvalReport{}; }); }) ==
        ErrorCode::kInvalidConfig);

  const std::size_t ns[] = {100, 200, 300, 400};
  const double rms[] = {0.10, 0.05, 0.09, 0.08};
  int k = 0;
  const SweepTable samples = SampleCountSweep(ns, 400, [&](double) {
    EvalReport r;
    r.ate_rms = rms[k++];
    return r;
  });
  CHECK_FALSE(samples.rows[1].flagged);
  CHECK(samples.rows[2].flagged);
  CHECK_FALSE(samples.rows[3].flagged);
  CHECK(test::CodeOf([&] {
          SampleCountSweep(ns, 399, [](double) { return EvalReport{}; });
        }) == ErrorCode::kSampleBudgetExceeded);
}

TEST_CASE("CSV writers use fixed columns") {
  const std::string path = test::TempPath("sweep.csv");
  SweepTable t{"w", {{0.0, 0.5, 0.25, 1.0, false}}};
  WriteSweepCsv(path, t);
  std::ifstream in(path);
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "param,rms,median,max");
  CHECK(row == "0,0.5,0.25,1");
  std::filesystem::remove(path);
  CHECK(FormatNumber(1.0 / 3.0) == "0.333333333");
}

}  // namespace
}  // namespace wsloc::eval
