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

#include "doctest.h"
#include "test_util.hpp"
#include "wsloc/net.hpp"

namespace wsloc::net {
namespace {

Eigen::MatrixXd RandomMatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Uniform(rng, -1.0, 1.0);
  return m;
}

// Scalar loss <g, f(x)> so that dL/d(output) = g.
double Objective(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
  return (Forward(m, x).array() * g.array()).sum();
}

// ReLU on/off pattern of every hidden unit.
std::vector<bool> Pattern(const MlpModel& m, const Eigen::MatrixXd& x) {
  ForwardCache cache;
  Forward(m, x, &cache);
  std::vector<bool> out;
  for (std::size_t l = 1; l + 1 < cache.activations.size(); ++l) {
    const Eigen::MatrixXd& a = cache.activations[l];
    for (Eigen::Index i = 0; i < a.size(); ++i) out.push_back(a.data()[i] > 0.0);
  }
  return out;
}

struct GradCheck {
  double max_rel = 0.0;
  int checked = 0;
  int skipped = 0;
};

// Central differences with h = 1e-5 on every parameter. Parameters whose
// perturbation flips a ReLU are skipped, since the objective is not
// differentiable across the kink.
GradCheck CheckGradients(MlpModel model, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& g) {
  constexpr double h = 1e-5;
  ForwardCache cache;
  Forward(model, x, &cache);
  const Gradients analytic = Backward(model, cache, g);
  const std::vector<bool> base = Pattern(model, x);
  GradCheck result;
  auto probe = [&](double& param, double grad) {
    const double saved = param;
    param = saved + h;
    const double up = Objective(model, x, g);
    const bool up_same = Pattern(model, x) == base;
    param = saved - h;
    const double down = Objective(model, x, g);
    const bool down_same = Pattern(model, x) == base;
    param = saved;
    if (!up_same || !down_same) {
      ++result.skipped;
      return;
    }
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(grad), std::abs(numeric), 1e-4});
    result.max_rel = std::max(result.max_rel, std::abs(grad - numeric) / denom);
    ++result.checked;
  };
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < model.weights()[l].size(); ++i) {
      probe(model.weights()[l].data()[i], analytic.weights[l].data()[i]);
    }
    for (Eigen::Index i = 0; i < model.biases()[l].size(); ++i) {
      probe(model.biases()[l].data()[i], analytic.biases[l].data()[i]);
    }
  }
  return result;
}

TEST_CASE("forward with zero weights returns the output bias") {
  MlpModel m({3, 4, 2});
  m.biases()[1] << 0.7, -1.3;
  Rng rng = MakeRng(1);
  const Eigen::MatrixXd out = Forward(m, RandomMatrix(3, 5, rng));
  for (Eigen::Index c = 0; c < 5; ++c) {
    CHECK(out(0, c) == 0.7);
    CHECK(out(1, c) == -1.3);
  }
}

TEST_CASE("single identity layer passes inputs through") {
  MlpModel m({2, 2});
  m.weights()[0].setIdentity();
  Rng rng = MakeRng(2);
  const Eigen::MatrixXd x = RandomMatrix(2, 7, rng);
  CHECK(Forward(m, x) == x);
}

TEST_CASE("three-layer forward matches hand arithmetic") {
  MlpModel m({2, 2, 2, 2});
  m.weights()[0] << 1, -1, 2, 0.5;
  m.biases()[0] << 0, -1;
  m.weights()[1] << 0.5, 1, -1, 3;
  m.biases()[1] << 1, 0;
  m.weights()[2] << 1, -1, 0.25, 0.5;
  m.biases()[2] << 0.5, -2;
  Eigen::MatrixXd x(2, 1);
  x << 1, 2;
  // Layer 1: (-1, 2) -> relu (0, 2). Layer 2: (3, 6). Output: (-2.5, 1.75).
  const Eigen::MatrixXd out = Forward(m, x);
  CHECK(out(0, 0) == -2.5);
  CHECK(out(1, 0) == 1.75);
  CHECK(test::CodeOf([&] { Forward(m, Eigen::MatrixXd::Zero(3, 1)); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("backward closed forms") {
  Rng rng = MakeRng(3);
  const MlpModel m = InitParams({4, 8, 2}, 5);
  const Eigen::MatrixXd x = RandomMatrix(4, 6, rng);
  ForwardCache cache;
  Forward(m, x, &cache);
  const Gradients zero = Backward(m, cache, Eigen::MatrixXd::Zero(2, 6));
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(zero.weights[l].isZero(0.0));
    CHECK(zero.biases[l].isZero(0.0));
  }
  CHECK(test::CodeOf([&] { Backward(m, cache, Eigen::MatrixXd::Zero(2, 5)); }) ==
        ErrorCode::kStaleCache);

  // Linear layer, loss = sum of outputs: every weight row is the summed input.
  MlpModel linear = InitParams({4, 2}, 9);
  ForwardCache lc;
  Forward(linear, x, &lc);
  const Gradients g = Backward(linear, lc, Eigen::MatrixXd::Ones(2, 6));
  const Eigen::RowVectorXd row = x.rowwise().sum().transpose();
  CHECK((g.weights[0].row(0) - row).norm() < 1e-14);
  CHECK((g.weights[0].row(1) - row).norm() < 1e-14);
  CHECK(g.biases[0] == Eigen::Vector2d(6, 6));
}

TEST_CASE("backward matches central differences on a 4-8-2 net") {
  Rng rng = MakeRng(4);
  const MlpModel m = InitParams({4, 8, 2}, 17);
  const GradCheck r = CheckGradients(m, RandomMatrix(4, 3, rng), RandomMatrix(2, 3, rng));
  CHECK(r.max_rel < 1e-5);
  CHECK(r.checked > 0);
}

TEST_CASE("gradient check over 20 seeds on both reduced architectures") {
  const std::vector<std::vector<int>> archs = {
      {16, 32, 32, 32, 16, 16, 16, 8, 2},
      {24, 16, 16, 32, 16, 16, 8, 8, 4, 2},
  };
  for (const auto& layers : archs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng = MakeRng(seed, {layers.size()});
      MlpModel m = InitParams(layers, seed);
      for (auto& b : m.biases()) b = RandomMatrix(b.size(), 1, rng) * 0.1;
      const GradCheck r =
          CheckGradients(m, RandomMatrix(layers.front(), 4, rng), RandomMatrix(2, 4, rng));
      CAPTURE(seed);
      CHECK(r.max_rel < 1e-5);
      CHECK(r.skipped * 100 <= r.checked);
    }
  }
}

TEST_CASE("adam: zero gradient is a no-op, first step is lr * sign(g)") {
  MlpModel m = InitParams({3, 2}, 1);
  const MlpModel before = m;
  AdamState s = AdamState::For(m);
  AdamStep(m, s, Gradients::ZerosLike(m), 1e-3);
  CHECK(m.weights()[0] == before.weights()[0]);
  CHECK(s.step == 1);

  MlpModel one({1, 1}, Activation::kIdentity);
  AdamState t = AdamState::For(one);
  Gradients g = Gradients::ZerosLike(one);
  g.weights[0](0, 0) = -0.37;
  AdamStep(one, t, g, 1e-3);
  const double expected = 1e-3 * 0.37 / (0.37 + 1e-8);
  CHECK(std::abs(one.weights()[0](0, 0) - expected) < 1e-15);
}

TEST_CASE("adam: two steps follow the bias-corrected recurrence") {
  MlpModel m({1, 1}, Activation::kIdentity);
  m.weights()[0](0, 0) = 1.0;
  AdamState s = AdamState::For(m);
  const double lr = 0.1;
  const double grads[2] = {0.5, -0.2};
  double theta = 1.0;
  double mom = 0.0;
  double vel = 0.0;
  for (int k = 1; k <= 2; ++k) {
    Gradients g = Gradients::ZerosLike(m);
    g.weights[0](0, 0) = grads[k - 1];
    AdamStep(m, s, g, lr);
    mom = 0.9 * mom + 0.1 * grads[k - 1];
    vel = 0.999 * vel + 0.001 * grads[k - 1] * grads[k - 1];
    const double mhat = mom / (1.0 - std::pow(0.9, k));
    const double vhat = vel / (1.0 - std::pow(0.999, k));
    theta -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(std::abs(m.weights()[0](0, 0) - theta) < 1e-12);
  }
  CHECK(test::CodeOf([&] { AdamStep(m, s, Gradients::ZerosLike(m), 0.0); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("initialization: deterministic, zero biases, He variance") {
  const std::vector<int> layers{512, 256, 2};
  const MlpModel a = InitParams(layers, 33);
  const MlpModel b = InitParams(layers, 33);
  CHECK(a.weights()[0] == b.weights()[0]);
  CHECK(a.weights()[1] == b.weights()[1]);
  CHECK_FALSE(InitParams(layers, 34).weights()[0] == a.weights()[0]);
  for (const auto& bias : a.biases()) CHECK(bias.isZero(0.0));
  const Eigen::MatrixXd& w = a.weights()[0];
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / static_cast<double>(w.size());
  CHECK(std::abs(var - 2.0 / 512) < 0.1 * 2.0 / 512);
  CHECK(a.ParameterCount() == 512 * 256 + 256 + 256 * 2 + 2);
}

TEST_CASE("checkpoint round trip is bitwise and checks shape") {
  Checkpoint c;
  c.model = InitParams({5, 7, 2}, 3);
  c.adam = AdamState::For(c.model);
  c.adam.beta1 = 0.85;
  Gradients g = Gradients::ZerosLike(c.model);
  Rng rng = MakeRng(8);
  for (auto& w : g.weights) w = RandomMatrix(w.rows(), w.cols(), rng);
  AdamStep(c.model, c.adam, g, 1e-2);
  AdamStep(c.model, c.adam, g, 1e-2);
  c.epoch = 12;
  c.config_echo = "{\"k\":1}";
  const std::string path = test::TempPath("ckpt_roundtrip.bin");
  SaveCheckpoint(c, path);
  const Checkpoint back = LoadCheckpoint(path, {5, 7, 2});
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(back.model.weights()[l] == c.model.weights()[l]);
    CHECK(back.model.biases()[l] == c.model.biases()[l]);
    CHECK(back.adam.first_moment.weights[l] == c.adam.first_moment.weights[l]);
    CHECK(back.adam.second_moment.biases[l] == c.adam.second_moment.biases[l]);
  }
  CHECK(back.adam.step == 2);
  CHECK(back.adam.beta1 == 0.85);
  CHECK(back.epoch == 12);
  CHECK(back.config_echo == c.config_echo);
  CHECK(back.model.hidden_activation() == Activation::kRelu);
  CHECK(test::CodeOf([&] { LoadCheckpoint(path, {5, 8, 2}); }) ==
        ErrorCode::kSchemaMismatch);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK(test::CodeOf([&] { LoadCheckpoint(path); }) == ErrorCode::kSchemaMismatch);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace wsloc::net
