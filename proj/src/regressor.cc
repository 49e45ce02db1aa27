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

#include "dsbi/regressor.h"

#include <algorithm>
#include <cmath>

#include "train_loop.h"

namespace dsbi {
namespace {

constexpr double kMinStddev = 1e-6;

double Sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

GaussianRegressor::GaussianRegressor(InputEncoder encoder,
                                     const ModelInput& prototype,
                                     int target_dim,
                                     const NetworkConfig& config,
                                     uint64_t seed)
    : encoder_(std::move(encoder)), target_dim_(target_dim) {
  config.Validate();
  if (target_dim < 1) throw ArgumentError("target_dim must be >= 1");
  Rng rng(seed);
  std::vector<int> sizes = {encoder_.FeatureDim(prototype)};
  for (int l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.width);
  sizes.push_back(target_dim);
  backbone_ = Mlp(sizes, rng);
  backbone_.InitOutputLayer(0.1, Eigen::VectorXd::Zero(target_dim), rng);
  stddev_ = Eigen::VectorXd::Ones(target_dim);
}

Eigen::VectorXd GaussianRegressor::Predict(const ModelInput& input) const {
  const ModelInput* batch[] = {&input};
  return backbone_.Predict(encoder_.Encode(batch)).col(0);
}

MixturePosterior GaussianRegressor::Posterior(const ModelInput& input) const {
  return DiagonalGaussian(Predict(input), stddev_);
}

double GaussianRegressor::Loss(
    std::span<const ModelInput* const> inputs,
    std::span<const Eigen::VectorXd* const> targets) const {
  const Eigen::MatrixXd pred = backbone_.Predict(encoder_.Encode(inputs));
  double total = 0;
  for (size_t b = 0; b < inputs.size(); ++b) {
    total += (pred.col(b) - *targets[b]).cwiseAbs().sum();
  }
  return total / static_cast<double>(inputs.size());
}

double GaussianRegressor::LossAndGrad(
    std::span<const ModelInput* const> inputs,
    std::span<const Eigen::VectorXd* const> targets) {
  const Eigen::MatrixXd features = encoder_.Encode(inputs);
  const Eigen::MatrixXd pred = backbone_.Forward(features);
  const double n = static_cast<double>(inputs.size());
  Eigen::MatrixXd d_pred(pred.rows(), pred.cols());
  double total = 0;
  for (size_t b = 0; b < inputs.size(); ++b) {
    const Eigen::VectorXd r = pred.col(b) - *targets[b];
    total += r.cwiseAbs().sum();
    d_pred.col(b) = r.unaryExpr(&Sign) / n;
  }
  encoder_.Backward(inputs, backbone_.Backward(d_pred));
  return total / n;
}

void GaussianRegressor::ZeroGrad() {
  backbone_.ZeroGrad();
  encoder_.ZeroGrad();
}

std::vector<ParamView> GaussianRegressor::Params() {
  std::vector<ParamView> params = backbone_.Params();
  for (auto& p : encoder_.Params()) params.push_back(p);
  return params;
}

nlohmann::json GaussianRegressor::ToJson() const {
  return {{"architecture",
           {{"type", "regressor"},
            {"target_dim", target_dim_},
            {"sizes", backbone_.sizes()}}},
          {"backbone", backbone_.ToJson()},
          {"encoder", encoder_.ToJson()},
          {"stddev", std::vector<double>(stddev_.data(),
                                         stddev_.data() + stddev_.size())}};
}

TrainMetrics Train(GaussianRegressor& model, const Dataset& data,
                   const TrainConfig& config) {
  config.Validate();
  if (data.size() == 0) throw ArgumentError("cannot train on an empty dataset");
  DataSplit split =
      SplitDataset(data.size(), config.validation_fraction, config.seed);
  TrainMetrics metrics = internal::RunTraining(model, data, config, split);

  Eigen::VectorXd mae = Eigen::VectorXd::Zero(model.target_dim());
  for (int i : split.validation) {
    mae += (model.Predict(data.inputs[i]) - data.targets[i]).cwiseAbs();
  }
  mae /= static_cast<double>(split.validation.size());
  model.set_stddev(mae.cwiseMax(kMinStddev));
  return metrics;
}

}  // namespace dsbi
