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

#include "wsloc/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace wsloc::net {
namespace {

constexpr char kMagic[8] = {'W', 'S', 'L', 'C', 'K', 'P', 'T', '\n'};
constexpr int kCheckpointVersion = 1;

void WriteU64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t ReadU64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) Fail(ErrorCode::kSchemaMismatch, "checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void WriteDoubles(std::ostream& out, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    WriteU64(out, std::bit_cast<std::uint64_t>(data[i]));
  }
}

void ReadDoubles(std::istream& in, double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = std::bit_cast<double>(ReadU64(in));
  }
}

void WriteParams(std::ostream& out, const std::vector<Eigen::MatrixXd>& w,
                 const std::vector<Eigen::VectorXd>& b) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    WriteDoubles(out, w[l].data(), static_cast<std::size_t>(w[l].size()));
    WriteDoubles(out, b[l].data(), static_cast<std::size_t>(b[l].size()));
  }
}

void ReadParams(std::istream& in, std::vector<Eigen::MatrixXd>& w,
                std::vector<Eigen::VectorXd>& b) {
  for (std::size_t l = 0; l < w.size(); ++l) {
    ReadDoubles(in, w[l].data(), static_cast<std::size_t>(w[l].size()));
    ReadDoubles(in, b[l].data(), static_cast<std::size_t>(b[l].size()));
  }
}

}  // namespace

std::string ActivationName(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  Fail(ErrorCode::kInvalidConfig, "unknown activation '" + name + "'");
}

MlpModel::MlpModel(std::vector<int> layer_sizes, Activation hidden)
    : layer_sizes_(std::move(layer_sizes)), hidden_(hidden) {
  if (layer_sizes_.size() < 2) {
    Fail(ErrorCode::kInvalidArgument, "an MLP needs at least 2 layer sizes");
  }
  for (int s : layer_sizes_) {
    if (s <= 0) Fail(ErrorCode::kInvalidArgument, "layer sizes must be > 0");
  }
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    weights_.push_back(
        Eigen::MatrixXd::Zero(layer_sizes_[l + 1], layer_sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(layer_sizes_[l + 1]));
  }
}

std::size_t MlpModel::ParameterCount() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

bool MlpModel::AllFinite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

Gradients Gradients::ZerosLike(const MlpModel& model) {
  Gradients g;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(model.weights()[l].rows(),
                                              model.weights()[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(model.biases()[l].size()));
  }
  return g;
}

Eigen::MatrixXd Forward(const MlpModel& model, const Eigen::MatrixXd& inputs,
                        ForwardCache* cache) {
  if (inputs.rows() != model.input_dim()) {
    Fail(ErrorCode::kDimensionMismatch,
         "input dimension " + std::to_string(inputs.rows()) +
             " does not match model input " +
             std::to_string(model.input_dim()));
  }
  const std::size_t layers = model.num_layers();
  if (cache != nullptr) {
    cache->activations.resize(layers + 1);
    cache->activations[0] = inputs;
  }
  Eigen::MatrixXd current = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z(model.weights()[l].rows(), inputs.cols());
    z.noalias() = model.weights()[l] * current;
    z.colwise() += model.biases()[l];
    if (l + 1 < layers && model.hidden_activation() == Activation::kRelu) {
      z = z.cwiseMax(0.0);
    }
    if (cache != nullptr) cache->activations[l + 1] = z;
    current = std::move(z);
  }
  return current;
}

Gradients Backward(const MlpModel& model, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_gradient) {
  const std::size_t layers = model.num_layers();
  if (cache.activations.size() != layers + 1 ||
      output_gradient.rows() != model.output_dim() ||
      output_gradient.cols() != cache.activations.back().cols()) {
    Fail(ErrorCode::kStaleCache, "forward cache does not match the gradient");
  }
  for (std::size_t l = 0; l <= layers; ++l) {
    if (cache.activations[l].rows() != model.layer_sizes()[l]) {
      Fail(ErrorCode::kStaleCache, "forward cache shape mismatch");
    }
  }
  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  Eigen::MatrixXd delta = output_gradient;
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd& input = cache.activations[l];
    grads.weights[l].noalias() = delta * input.transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream(input.rows(), input.cols());
    upstream.noalias() = model.weights()[l].transpose() * delta;
    if (model.hidden_activation() == Activation::kRelu) {
      upstream = (input.array() > 0.0).select(upstream, 0.0);
    }
    delta = std::move(upstream);
  }
  return grads;
}

AdamState AdamState::For(const MlpModel& model) {
  AdamState s;
  s.first_moment = Gradients::ZerosLike(model);
  s.second_moment = Gradients::ZerosLike(model);
  return s;
}

void AdamStep(MlpModel& model, AdamState& state, const Gradients& grads,
              double lr) {
  if (!(lr > 0.0)) Fail(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (state.first_moment.weights.size() != model.num_layers() ||
      grads.weights.size() != model.num_layers()) {
    Fail(ErrorCode::kShapeMismatch, "optimizer state does not match model");
  }
  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double eps = state.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (param.size() != g.size() || m.size() != g.size()) {
      Fail(ErrorCode::kShapeMismatch, "gradient shape mismatch");
    }
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    update(model.weights()[l], state.first_moment.weights[l],
           state.second_moment.weights[l], grads.weights[l]);
    update(model.biases()[l], state.first_moment.biases[l],
           state.second_moment.biases[l], grads.biases[l]);
  }
}

MlpModel InitParams(const std::vector<int>& layer_sizes, std::uint64_t seed,
                    Activation hidden) {
  MlpModel model(layer_sizes, hidden);
  Rng rng = MakeRng(seed);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const double fan_in = static_cast<double>(layer_sizes[l]);
    const double limit = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd& w = model.weights()[l];
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = Uniform(rng, -limit, limit);
      }
    }
  }
  return model;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  const MlpModel& m = ckpt.model;
  nlohmann::json header;
  header["schema_version"] = kCheckpointVersion;
  header["layer_sizes"] = m.layer_sizes();
  header["activation"] = ActivationName(m.hidden_activation());
  header["step"] = ckpt.adam.step;
  header["epoch"] = ckpt.epoch;
  header["hyperparameters"] = {{"beta1", ckpt.adam.beta1},
                               {"beta2", ckpt.adam.beta2},
                               {"epsilon", ckpt.adam.epsilon}};
  header["config"] = nlohmann::json::parse(ckpt.config_echo);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  WriteU64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  WriteParams(out, m.weights(), m.biases());
  WriteParams(out, ckpt.adam.first_moment.weights,
              ckpt.adam.first_moment.biases);
  WriteParams(out, ckpt.adam.second_moment.weights,
              ckpt.adam.second_moment.biases);
  if (!out) Fail(ErrorCode::kIo, "failed writing " + path);
}

Checkpoint LoadCheckpoint(const std::string& path,
                          const std::vector<int>& expected_layers) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    Fail(ErrorCode::kSchemaMismatch, path + " is not a checkpoint");
  }
  const std::uint64_t len = ReadU64(in);
  if (len > (1u << 26)) Fail(ErrorCode::kSchemaMismatch, "header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) Fail(ErrorCode::kSchemaMismatch, "checkpoint truncated");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("schema_version").get<int>() != kCheckpointVersion) {
      Fail(ErrorCode::kSchemaMismatch, "unsupported checkpoint version");
    }
    const auto sizes = header.at("layer_sizes").get<std::vector<int>>();
    if (!expected_layers.empty() && sizes != expected_layers) {
      Fail(ErrorCode::kSchemaMismatch,
           "checkpoint layer sizes differ from the requested model");
    }
    ckpt.model = MlpModel(
        sizes, ParseActivation(header.at("activation").get<std::string>()));
    ckpt.adam = AdamState::For(ckpt.model);
    ckpt.adam.step = header.at("step").get<std::uint64_t>();
    ckpt.epoch = header.at("epoch").get<std::uint64_t>();
    const auto& hp = header.at("hyperparameters");
    ckpt.adam.beta1 = hp.at("beta1").get<double>();
    ckpt.adam.beta2 = hp.at("beta2").get<double>();
    ckpt.adam.epsilon = hp.at("epsilon").get<double>();
    ckpt.config_echo = header.at("config").dump();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kSchemaMismatch,
         std::string("malformed checkpoint header: ") + e.what());
  }
  ReadParams(in, ckpt.model.weights(), ckpt.model.biases());
  ReadParams(in, ckpt.adam.first_moment.weights, ckpt.adam.first_moment.biases);
  ReadParams(in, ckpt.adam.second_moment.weights,
             ckpt.adam.second_moment.biases);
  return ckpt;
}

}  // namespace wsloc::net
