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

#ifndef DSBI_REGRESSOR_H_
#define DSBI_REGRESSOR_H_

#include <span>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/encoder.h"
#include "dsbi/mdn.h"
#include "dsbi/mixture.h"
#include "dsbi/nn.h"

namespace dsbi {

// Unimodal point regressor: encoder -> tanh backbone -> theta. Trained with
// an L1 loss; its posterior is N(prediction, diag(validation MAE)^2).
class GaussianRegressor {
 public:
  GaussianRegressor(InputEncoder encoder, const ModelInput& prototype,
                    int target_dim, const NetworkConfig& config,
                    uint64_t seed);

  int target_dim() const { return target_dim_; }

  Eigen::VectorXd Predict(const ModelInput& input) const;
  MixturePosterior Posterior(const ModelInput& input) const;

  // per-dimension posterior standard deviation
  const Eigen::VectorXd& stddev() const { return stddev_; }
  void set_stddev(Eigen::VectorXd stddev) { stddev_ = std::move(stddev); }

  // mean over the batch of sum_d |prediction_d - theta_d|
  double Loss(std::span<const ModelInput* const> inputs,
              std::span<const Eigen::VectorXd* const> targets) const;
  double LossAndGrad(std::span<const ModelInput* const> inputs,
                     std::span<const Eigen::VectorXd* const> targets);

  void ZeroGrad();
  std::vector<ParamView> Params();
  void Project() { encoder_.Project(); }
  InputEncoder& encoder() { return encoder_; }
  const InputEncoder& encoder() const { return encoder_; }
  Mlp& backbone() { return backbone_; }

  nlohmann::json ToJson() const;

 private:
  InputEncoder encoder_;
  Mlp backbone_;
  int target_dim_ = 0;
  Eigen::VectorXd stddev_;
};

// trains with Adam and then sets stddev() to the per-dimension mean absolute
// error on the validation split
TrainMetrics Train(GaussianRegressor& model, const Dataset& data,
                   const TrainConfig& config);

}  // namespace dsbi

#endif  // DSBI_REGRESSOR_H_
