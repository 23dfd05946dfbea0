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

#include <filesystem>

#include "doctest.h"
#include "test_util.hpp"
#include "wsloc/train.hpp"

namespace wsloc::train {
namespace {

struct Fixture {
  env::Environment2D field = env::GenerateLandmarkEnv({-1, 1, -1, 1}, 16, 1);
  collect::ConstraintGraph graph = [this] {
    collect::DenseConfig dense;
    dense.segments = 0;
    dense.sample_budget = 400;
    return collect::CollectDense(field, dense, {}, {}, 2);
  }();

  static TrainOptions Options(int epochs) {
    TrainOptions o;
    o.spec.epochs = epochs;
    o.spec.batch_size = 100;
    o.spec.lr_schedule = {{0, 1e-3}, {3, 5e-4}};
    o.shuffle_seed = 7;
    return o;
  }

  net::Checkpoint Start() const {
    net::Checkpoint c;
    c.model = net::InitParams({16, 32, 32, 2}, 3);
    return c;
  }
};

TEST_CASE("training is reproducible and follows the schedule") {
  Fixture f;
  const TrainResult a = Train(f.graph.WithoutGroundTruth(), f.Start(), Fixture::Options(5));
  const TrainResult b = Train(f.graph.WithoutGroundTruth(), f.Start(), Fixture::Options(5));
  REQUIRE(a.trace.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) {
    CHECK(a.trace[e].loss == b.trace[e].loss);
    CHECK(a.trace[e].epoch == static_cast<int>(e));
    CHECK(a.trace[e].lr == (e < 3 ? 1e-3 : 5e-4));
  }
  CHECK(a.checkpoint.model.weights()[0] == b.checkpoint.model.weights()[0]);
  CHECK(a.checkpoint.epoch == 5);
}

TEST_CASE("weak training lowers the loss") {
  Fixture f;
  TrainOptions o = Fixture::Options(40);
  o.spec.lr_schedule = {{0, 1e-3}};
  const TrainResult r = Train(f.graph, f.Start(), o);
  CHECK(r.trace.back().loss < 0.5 * r.trace.front().loss);
}

TEST_CASE("resuming from a checkpoint matches an uninterrupted run") {
  Fixture f;
  const TrainResult full = Train(f.graph, f.Start(), Fixture::Options(6));
  const TrainResult first = Train(f.graph, f.Start(), Fixture::Options(3));
  const std::string path = test::TempPath("resume.bin");
  net::SaveCheckpoint(first.checkpoint, path);
  const TrainResult rest = Train(f.graph, net::LoadCheckpoint(path), Fixture::Options(6));
  REQUIRE(rest.trace.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(first.trace[e].loss == full.trace[e].loss);
    CHECK(rest.trace[e].loss == full.trace[e + 3].loss);
  }
  CHECK(rest.checkpoint.model.weights()[2] == full.checkpoint.model.weights()[2]);
  std::filesystem::remove(path);
}

TEST_CASE("supervised training needs ground truth") {
  Fixture f;
  TrainOptions o = Fixture::Options(2);
  o.objective = Objective::kSupervised;
  const TrainResult r = Train(f.graph, f.Start(), o);
  CHECK(r.trace.size() == 2);
  CHECK(test::CodeOf([&] { Train(f.graph.WithoutGroundTruth(), f.Start(), o); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("training preconditions") {
  Fixture f;
  net::Checkpoint wrong;
  wrong.model = net::InitParams({8, 4, 2}, 1);
  CHECK(test::CodeOf([&] { Train(f.graph, wrong, Fixture::Options(1)); }) ==
        ErrorCode::kDimensionMismatch);

  std::vector<collect::Observation> obs = f.graph.observations();
  obs[5].values[0] = std::numeric_limits<double>::quiet_NaN();
  const collect::ConstraintGraph poisoned(collect::Modality::kLandmarks,
                                          f.graph.obs_config(), obs,
                                          f.graph.segments(), {});
  CHECK(test::CodeOf([&] { Train(poisoned, f.Start(), Fixture::Options(1)); }) ==
        ErrorCode::kNonFiniteLoss);

  env::RoomSpec spec;
  spec.rows = 12;
  spec.cols = 12;
  const env::Environment2D room = env::GenerateRoomEnv(spec, 1);
  collect::ObservationConfig lidar;
  lidar.modality = collect::Modality::kLidar;
  lidar.n_beams = 8;
  lidar.orientations = 4;
  lidar.orientation_samples = 2;
  collect::DenseConfig dense;
  dense.segments = 2;
  dense.spacing = 0.1;
  const collect::ConstraintGraph scans = collect::CollectDense(room, dense, lidar, {}, 1);
  net::Checkpoint small;
  small.model = net::InitParams({16, 8, 2}, 1);
  CHECK(test::CodeOf([&] { Train(scans, small, Fixture::Options(1)); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("lidar training re-renders headings deterministically") {
  env::RoomSpec spec;
  spec.rows = 16;
  spec.cols = 16;
  auto room = std::make_shared<const env::Environment2D>(env::GenerateRoomEnv(spec, 2));
  collect::ObservationConfig lidar;
  lidar.modality = collect::Modality::kLidar;
  lidar.n_beams = 8;
  lidar.orientations = 6;
  lidar.orientation_samples = 3;
  collect::DenseConfig dense;
  dense.segments = 0;
  dense.sample_budget = 60;
  dense.spacing = 0.1;
  const collect::ConstraintGraph g = collect::CollectDense(*room, dense, lidar, {}, 3);
  const collect::LidarRenderer renderer(room, g);
  net::Checkpoint start;
  start.model = net::InitParams({16, 16, 2}, 4);
  TrainOptions o = Fixture::Options(3);
  o.spec.batch_size = 30;
  o.orientation_seed = 9;
  const TrainResult a = Train(g.WithoutGroundTruth(), start, o, &renderer);
  const TrainResult b = Train(g.WithoutGroundTruth(), start, o, &renderer);
  REQUIRE(a.trace.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) CHECK(a.trace[e].loss == b.trace[e].loss);
  o.orientation_seed = 10;
  const TrainResult c = Train(g.WithoutGroundTruth(), start, o, &renderer);
  CHECK(c.trace[0].loss != a.trace[0].loss);
}

TEST_CASE("prediction and loss trace files") {
  Fixture f;
  const net::MlpModel m = f.Start().model;
  const Eigen::MatrixXd x = StoredInputs(f.graph);
  CHECK(x.cols() == static_cast<Eigen::Index>(f.graph.size()));
  CHECK(Predict(m, x) == net::Forward(m, x));

  const std::vector<EpochRecord> trace{{0, 0.123456789012345678, 1e-3}, {1, 1.0 / 3.0, 1e-4}};
  const std::string path = test::TempPath("loss.csv");
  WriteLossCsv(path, trace);
  const std::vector<EpochRecord> back = ReadLossCsv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].loss == trace[0].loss);
  CHECK(back[1].loss == trace[1].loss);
  CHECK(back[1].lr == 1e-4);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace wsloc::train
