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

#include "dsbi/mdn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "train_loop.h"

namespace dsbi {
namespace {

constexpr double kDiagonalFloor = 1e-4;

double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// inverse of softplus for y > 0
double InverseSoftplus(double y) { return y + std::log(-std::expm1(-y)); }

}  // namespace

void NetworkConfig::Validate() const {
  if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
  if (width < 1) throw ConfigError("width must be >= 1");
  if (components < 1) throw ConfigError("components must be >= 1");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(validation_fraction > 0 && validation_fraction <= 0.5)) {
    throw ConfigError("validation_fraction must lie in (0, 0.5]");
  }
}

nlohmann::json ToJson(const NetworkConfig& config) {
  return {{"hidden_layers", config.hidden_layers},
          {"width", config.width},
          {"components", config.components}};
}

NetworkConfig NetworkConfigFromJson(const nlohmann::json& j) {
  NetworkConfig c;
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.width = j.value("width", c.width);
  c.components = j.value("components", c.components);
  c.Validate();
  return c;
}

nlohmann::json ToJson(const TrainConfig& config) {
  return {{"optimizer", "adam"},
          {"learning_rate", config.learning_rate},
          {"epochs", config.epochs},
          {"batch_size", config.batch_size},
          {"validation_fraction", config.validation_fraction},
          {"seed", config.seed},
          {"keep_best", config.keep_best}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.seed = j.value("seed", c.seed);
  c.keep_best = j.value("keep_best", c.keep_best);
  c.Validate();
  return c;
}

void Dataset::Add(ModelInput input, Eigen::VectorXd target) {
  inputs.push_back(std::move(input));
  targets.push_back(std::move(target));
}

DataSplit SplitDataset(int n, double validation_fraction, uint64_t seed) {
  const int n_val = std::max(
      1, static_cast<int>(std::lround(validation_fraction * n)));
  if (n - n_val < 1) {
    throw ArgumentError("dataset of " + std::to_string(n) +
                        " is too small for a train/validation split");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(seed, 0x5917));
  std::shuffle(order.begin(), order.end(), rng);
  DataSplit split;
  split.validation.assign(order.begin(), order.begin() + n_val);
  split.train.assign(order.begin() + n_val, order.end());
  return split;
}

int MixtureDensityNetwork::HeadSize(int components, int target_dim) {
  const int d = target_dim;
  return components * (1 + 2 * d + d * (d - 1) / 2);
}

MixtureDensityNetwork::MixtureDensityNetwork(InputEncoder encoder,
                                             const ModelInput& prototype,
                                             int target_dim,
                                             const NetworkConfig& config,
                                             uint64_t seed)
    : encoder_(std::move(encoder)),
      target_dim_(target_dim),
      components_(config.components) {
  config.Validate();
  if (target_dim < 1) throw ArgumentError("target_dim must be >= 1");
  Rng rng(seed);
  std::vector<int> sizes = {encoder_.FeatureDim(prototype)};
  for (int l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.width);
  sizes.push_back(HeadSize(components_, target_dim_));
  backbone_ = Mlp(sizes, rng);

  // spread the component means over [-0.5, 0.5]^D with unit-ish scales so
  // components start distinct
  const int d = target_dim_;
  const int block = 1 + 2 * d + d * (d - 1) / 2;
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(HeadSize(components_, d));
  std::uniform_real_distribution<double> spread(-0.5, 0.5);
  for (int c = 0; c < components_; ++c) {
    for (int k = 0; k < d; ++k) bias[c * block + 1 + k] = spread(rng);
    for (int k = 0; k < d; ++k) {
      bias[c * block + 1 + d + k] = InverseSoftplus(0.5);
    }
  }
  backbone_.InitOutputLayer(0.1, bias, rng);
}

void MixtureDensityNetwork::ZeroHead() {
  auto params = backbone_.Params();
  // the last two views are the output weight and bias
  for (size_t p = params.size() - 2; p < params.size(); ++p) {
    std::fill(params[p].value.begin(), params[p].value.end(), 0.0);
  }
}

MixturePosterior MixtureDensityNetwork::HeadToMixture(
    const Eigen::VectorXd& head) const {
  const int d = target_dim_;
  const int block = 1 + 2 * d + d * (d - 1) / 2;
  MixturePosterior mix;
  Eigen::VectorXd logits(components_);
  for (int c = 0; c < components_; ++c) {
    const int o = c * block;
    logits[c] = head[o];
    mix.means.push_back(head.segment(o + 1, d));
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) {
      l(k, k) = Softplus(head[o + 1 + d + k]) + kDiagonalFloor;
    }
    int idx = o + 1 + 2 * d;
    for (int r = 1; r < d; ++r) {
      for (int k = 0; k < r; ++k) l(r, k) = head[idx++];
    }
    mix.chol.push_back(std::move(l));
  }
  const double top = logits.maxCoeff();
  mix.weights = (logits.array() - top).exp();
  mix.weights /= mix.weights.sum();
  return mix;
}

double MixtureHeadNll(const Eigen::VectorXd& head, int components,
                      const Eigen::VectorXd& theta, Eigen::VectorXd* d_head) {
  const int d = static_cast<int>(theta.size());
  const int block = 1 + 2 * d + d * (d - 1) / 2;
  if (head.size() != components * block) {
    throw ArgumentError("head size does not match components and dimension");
  }
  Eigen::VectorXd logits(components);
  std::vector<Eigen::MatrixXd> ls(components);
  std::vector<Eigen::VectorXd> zs(components);
  Eigen::VectorXd log_terms(components);
  for (int c = 0; c < components; ++c) {
    const int o = c * block;
    logits[c] = head[o];
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) {
      l(k, k) = Softplus(head[o + 1 + d + k]) + kDiagonalFloor;
    }
    int idx = o + 1 + 2 * d;
    for (int r = 1; r < d; ++r) {
      for (int k = 0; k < r; ++k) l(r, k) = head[idx++];
    }
    zs[c] = l.triangularView<Eigen::Lower>().solve(theta - head.segment(o + 1, d));
    log_terms[c] = -0.5 * d * std::log(2.0 * std::numbers::pi) -
                   l.diagonal().array().log().sum() - 0.5 * zs[c].squaredNorm();
    ls[c] = std::move(l);
  }
  const double top = logits.maxCoeff();
  const double log_norm = top + std::log((logits.array() - top).exp().sum());
  const Eigen::VectorXd log_alpha = logits.array() - log_norm;
  const Eigen::VectorXd joint = log_alpha + log_terms;
  const double jtop = joint.maxCoeff();
  const double lse = jtop + std::log((joint.array() - jtop).exp().sum());
  const double nll = -lse;

  if (d_head != nullptr) {
    d_head->setZero(head.size());
    for (int c = 0; c < components; ++c) {
      const int o = c * block;
      const double gamma = std::exp(joint[c] - lse);
      const double alpha = std::exp(log_alpha[c]);
      (*d_head)[o] = alpha - gamma;
      // d log N / d mu = u, d log N / d L = u z^T (lower) - diag(1 / L_ii),
      // with u = L^-T z
      const Eigen::VectorXd u =
          ls[c].transpose().triangularView<Eigen::Upper>().solve(zs[c]);
      d_head->segment(o + 1, d) = -gamma * u;
      for (int k = 0; k < d; ++k) {
        const double d_lkk = u[k] * zs[c][k] - 1.0 / ls[c](k, k);
        (*d_head)[o + 1 + d + k] = -gamma * d_lkk * Sigmoid(head[o + 1 + d + k]);
      }
      int idx = o + 1 + 2 * d;
      for (int r = 1; r < d; ++r) {
        for (int k = 0; k < r; ++k) (*d_head)[idx++] = -gamma * u[r] * zs[c][k];
      }
    }
  }
  return nll;
}

MixturePosterior MixtureDensityNetwork::Forward(const ModelInput& input) const {
  const ModelInput* batch[] = {&input};
  const Eigen::MatrixXd head = backbone_.Predict(encoder_.Encode(batch));
  return HeadToMixture(head.col(0));
}

double MixtureDensityNetwork::Loss(
    std::span<const ModelInput* const> inputs,
    std::span<const Eigen::VectorXd* const> targets) const {
  const Eigen::MatrixXd head = backbone_.Predict(encoder_.Encode(inputs));
  double total = 0;
  for (size_t b = 0; b < inputs.size(); ++b) {
    total += MixtureHeadNll(head.col(b), components_, *targets[b], nullptr);
  }
  return total / static_cast<double>(inputs.size());
}

double MixtureDensityNetwork::LossAndGrad(
    std::span<const ModelInput* const> inputs,
    std::span<const Eigen::VectorXd* const> targets) {
  const Eigen::MatrixXd features = encoder_.Encode(inputs);
  const Eigen::MatrixXd head = backbone_.Forward(features);
  const double n = static_cast<double>(inputs.size());
  Eigen::MatrixXd d_head(head.rows(), head.cols());
  Eigen::VectorXd grad;
  double total = 0;
  for (size_t b = 0; b < inputs.size(); ++b) {
    total += MixtureHeadNll(head.col(b), components_, *targets[b], &grad);
    d_head.col(b) = grad / n;
  }
  const Eigen::MatrixXd d_features = backbone_.Backward(d_head);
  encoder_.Backward(inputs, d_features);
  return total / n;
}

void MixtureDensityNetwork::ZeroGrad() {
  backbone_.ZeroGrad();
  encoder_.ZeroGrad();
}

std::vector<ParamView> MixtureDensityNetwork::Params() {
  std::vector<ParamView> params = backbone_.Params();
  for (auto& p : encoder_.Params()) params.push_back(p);
  return params;
}

nlohmann::json MixtureDensityNetwork::ToJson() const {
  return {{"architecture",
           {{"type", "mdn"},
            {"components", components_},
            {"target_dim", target_dim_},
            {"sizes", backbone_.sizes()}}},
          {"backbone", backbone_.ToJson()},
          {"encoder", encoder_.ToJson()}};
}

TrainMetrics Train(MixtureDensityNetwork& model, const Dataset& data,
                   const TrainConfig& config) {
  config.Validate();
  if (data.size() == 0) throw ArgumentError("cannot train on an empty dataset");
  return internal::RunTraining(
      model, data, config,
      SplitDataset(data.size(), config.validation_fraction, config.seed));
}

}  // namespace dsbi
