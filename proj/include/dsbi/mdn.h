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

#ifndef DSBI_MDN_H_
#define DSBI_MDN_H_

#include <span>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/encoder.h"
#include "dsbi/mixture.h"
#include "dsbi/nn.h"

namespace dsbi {

struct NetworkConfig {
  int hidden_layers = 3;
  int width = 1024;
  int components = 4;

  void Validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-6;  // Adam
  int epochs = 200;
  int batch_size = 64;
  double validation_fraction = 0.2;
  uint64_t seed = 0;
  // restore the parameters of the epoch with the lowest validation loss
  bool keep_best = true;

  void Validate() const;
};

nlohmann::json ToJson(const NetworkConfig& config);
NetworkConfig NetworkConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

// (input, target) pairs
struct Dataset {
  std::vector<ModelInput> inputs;
  std::vector<Eigen::VectorXd> targets;

  int size() const { return static_cast<int>(inputs.size()); }
  void Add(ModelInput input, Eigen::VectorXd target);
};

struct TrainMetrics {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> validation_loss;
  int train_size = 0;
  int validation_size = 0;
  int best_epoch = -1;

  // losses of the returned parameters
  double final_train() const { return At(train_loss); }
  double final_validation() const { return At(validation_loss); }

 private:
  double At(const std::vector<double>& losses) const {
    if (losses.empty()) return 0;
    return best_epoch >= 0 ? losses[best_epoch] : losses.back();
  }
};

// deterministic split of [0, n): validation indices first
struct DataSplit {
  std::vector<int> train;
  std::vector<int> validation;
};
DataSplit SplitDataset(int n, double validation_fraction, uint64_t seed);

// Conditional density q(theta | x): encoder -> tanh backbone -> mixture head.
// Head outputs per component: logit, mean (D), raw diagonal (D, softplus +
// 1e-4) and the strictly lower entries of L (row-major).
class MixtureDensityNetwork {
 public:
  MixtureDensityNetwork(InputEncoder encoder, const ModelInput& prototype,
                        int target_dim, const NetworkConfig& config,
                        uint64_t seed);

  int target_dim() const { return target_dim_; }
  int components() const { return components_; }
  static int HeadSize(int components, int target_dim);

  MixturePosterior Forward(const ModelInput& input) const;
  MixturePosterior HeadToMixture(const Eigen::VectorXd& head) const;

  // mean NLL over the batch
  double Loss(std::span<const ModelInput* const> inputs,
              std::span<const Eigen::VectorXd* const> targets) const;
  // mean NLL; accumulates gradients of that mean into every parameter
  double LossAndGrad(std::span<const ModelInput* const> inputs,
                     std::span<const Eigen::VectorXd* const> targets);

  void ZeroGrad();
  std::vector<ParamView> Params();
  void Project() { encoder_.Project(); }
  InputEncoder& encoder() { return encoder_; }
  const InputEncoder& encoder() const { return encoder_; }
  Mlp& backbone() { return backbone_; }

  // sets every head weight and bias to zero
  void ZeroHead();

  nlohmann::json ToJson() const;

 private:
  InputEncoder encoder_;
  Mlp backbone_;
  int target_dim_ = 0;
  int components_ = 0;
};

// per-sample NLL of the head output and its gradient w.r.t. the head
double MixtureHeadNll(const Eigen::VectorXd& head, int components,
                      const Eigen::VectorXd& theta, Eigen::VectorXd* d_head);

// minimizes mean NLL with Adam; the standardizer is fit on the training split
// first. Throws TrainingDiverged on a non-finite loss.
TrainMetrics Train(MixtureDensityNetwork& model, const Dataset& data,
                   const TrainConfig& config);

}  // namespace dsbi

#endif  // DSBI_MDN_H_
