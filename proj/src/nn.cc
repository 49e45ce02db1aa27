// Copyright 2026 The dsbi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dsbi/nn.h"

#include <cmath>

namespace dsbi {

Mlp::Mlp(std::vector<int> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ArgumentError("network needs >= 2 sizes");
  for (int s : sizes_) {
    if (s < 1) throw ArgumentError("layer sizes must be positive");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    Layer layer;
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    layer.weight.resize(out, in);
    for (int c = 0; c < in; ++c) {
      for (int r = 0; r < out; ++r) layer.weight(r, c) = scale * normal(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.d_weight = Eigen::MatrixXd::Zero(out, in);
    layer.d_bias = Eigen::VectorXd::Zero(out);
    layers_.push_back(std::move(layer));
  }
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x) {
  if (x.rows() != input_dim()) {
    throw ArgumentError("network expects " + std::to_string(input_dim()) +
                        " inputs, got " + std::to_string(x.rows()));
  }
  cached_.clear();
  cached_.push_back(x);
  for (size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd h = layers_[l].weight * cached_.back();
    h.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) h = h.array().tanh();
    cached_.push_back(std::move(h));
  }
  return cached_.back();
}

Eigen::MatrixXd Mlp::Predict(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim()) {
    throw ArgumentError("network expects " + std::to_string(input_dim()) +
                        " inputs, got " + std::to_string(x.rows()));
  }
  Eigen::MatrixXd h = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd next = layers_[l].weight * h;
    next.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) next = next.array().tanh();
    h = std::move(next);
  }
  return h;
}

Eigen::MatrixXd Mlp::Backward(const Eigen::MatrixXd& d_output) {
  if (cached_.size() != layers_.size() + 1) {
    throw ArgumentError("Backward called without Forward");
  }
  Eigen::MatrixXd delta = d_output;
  for (size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) {
      // tanh' = 1 - tanh^2
      delta.array() *= 1.0 - cached_[l + 1].array().square();
    }
    layers_[l].d_weight.noalias() += delta * cached_[l].transpose();
    layers_[l].d_bias += delta.rowwise().sum();
    delta = layers_[l].weight.transpose() * delta;
  }
  return delta;
}

void Mlp::ZeroGrad() {
  for (auto& layer : layers_) {
    layer.d_weight.setZero();
    layer.d_bias.setZero();
  }
}

std::vector<ParamView> Mlp::Params() {
  std::vector<ParamView> params;
  for (size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    params.push_back({"layer" + std::to_string(l) + ".weight",
                      {layer.weight.data(), static_cast<size_t>(layer.weight.size())},
                      {layer.d_weight.data(), static_cast<size_t>(layer.d_weight.size())}});
    params.push_back({"layer" + std::to_string(l) + ".bias",
                      {layer.bias.data(), static_cast<size_t>(layer.bias.size())},
                      {layer.d_bias.data(), static_cast<size_t>(layer.d_bias.size())}});
  }
  return params;
}

void Mlp::InitOutputLayer(double weight_scale, const Eigen::VectorXd& bias,
                          Rng& rng) {
  Layer& last = layers_.back();
  if (bias.size() != last.bias.size()) {
    throw ArgumentError("output bias has the wrong length");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale =
      weight_scale / std::sqrt(static_cast<double>(last.weight.cols()));
  for (int c = 0; c < last.weight.cols(); ++c) {
    for (int r = 0; r < last.weight.rows(); ++r) {
      last.weight(r, c) = scale * normal(rng);
    }
  }
  last.bias = bias;
}

nlohmann::json Mlp::ToJson() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    // row-major weights
    std::vector<double> w;
    w.reserve(layer.weight.size());
    for (int r = 0; r < layer.weight.rows(); ++r) {
      for (int c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    layers.push_back(
        {{"weight", w},
         {"bias", std::vector<double>(layer.bias.data(),
                                      layer.bias.data() + layer.bias.size())}});
  }
  return {{"sizes", sizes_}, {"activation", "tanh"}, {"layers", layers}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  Mlp mlp;
  mlp.sizes_ = j.at("sizes").get<std::vector<int>>();
  const auto& layers = j.at("layers");
  if (layers.size() + 1 != mlp.sizes_.size()) {
    throw ConfigError("layer count does not match sizes");
  }
  for (size_t l = 0; l < layers.size(); ++l) {
    const int in = mlp.sizes_[l];
    const int out = mlp.sizes_[l + 1];
    auto w = layers[l].at("weight").get<std::vector<double>>();
    auto b = layers[l].at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<size_t>(in) * out ||
        b.size() != static_cast<size_t>(out)) {
      throw ConfigError("layer weights have the wrong shape");
    }
    Layer layer;
    layer.weight.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = w[r * in + c];
    }
    layer.bias = Eigen::Map<Eigen::VectorXd>(b.data(), out);
    layer.d_weight = Eigen::MatrixXd::Zero(out, in);
    layer.d_bias = Eigen::VectorXd::Zero(out);
    mlp.layers_.push_back(std::move(layer));
  }
  return mlp;
}

void Adam::Step(const std::vector<ParamView>& params) {
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.emplace_back(p.value.size(), 0.0);
      second_.emplace_back(p.value.size(), 0.0);
    }
  }
  if (first_.size() != params.size()) {
    throw ArgumentError("parameter layout changed between Adam steps");
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, step_);
  const double correction2 = 1.0 - std::pow(b2, step_);
  for (size_t p = 0; p < params.size(); ++p) {
    auto& m = first_[p];
    auto& v = second_[p];
    const auto& value = params[p].value;
    const auto& grad = params[p].grad;
    for (size_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * grad[i];
      v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= options_.learning_rate * m_hat /
                  (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace dsbi
