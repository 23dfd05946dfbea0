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

#ifndef WSLOC_NET_HPP_
#define WSLOC_NET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wsloc/common.hpp"

namespace wsloc::net {

enum class Activation { kRelu, kIdentity };

std::string ActivationName(Activation a);
Activation ParseActivation(const std::string& name);

// Fully connected network. Samples travel as columns: a batch is an
// (input_dim x batch) matrix and the output is (2 x batch).
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(std::vector<int> layer_sizes, Activation hidden = Activation::kRelu);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation hidden_activation() const { return hidden_; }
  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t ParameterCount() const;

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  bool AllFinite() const;

 private:
  std::vector<int> layer_sizes_;
  Activation hidden_ = Activation::kRelu;
  std::vector<Eigen::MatrixXd> weights_;  // (out x in)
  std::vector<Eigen::VectorXd> biases_;
};

// Same layout as the model parameters.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients ZerosLike(const MlpModel& model);
};

// Activations kept by Forward for the matching Backward call.
// activations[0] is the input, activations[l] the output of layer l.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
};

Eigen::MatrixXd Forward(const MlpModel& model, const Eigen::MatrixXd& inputs,
                        ForwardCache* cache = nullptr);

// Gradients of a scalar loss given dL/d(output) (2 x batch).
Gradients Backward(const MlpModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_gradient);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState For(const MlpModel& model);
};

void AdamStep(MlpModel& model, AdamState& state, const Gradients& grads,
              double lr);

// He-style uniform weights (variance 2 / fan_in), zero biases.
MlpModel InitParams(const std::vector<int>& layer_sizes, std::uint64_t seed,
                    Activation hidden = Activation::kRelu);

struct Checkpoint {
  MlpModel model;
  AdamState adam;
  // Completed epochs when the checkpoint was written.
  std::uint64_t epoch = 0;
  std::string config_echo = "{}";
};

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
// With `expected_layers` non-empty, a shape disagreement is SchemaMismatch.
Checkpoint LoadCheckpoint(const std::string& path,
                          const std::vector<int>& expected_layers = {});

}  // namespace wsloc::net

#endif  // WSLOC_NET_HPP_
