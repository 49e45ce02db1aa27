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

#ifndef DSBI_NN_H_
#define DSBI_NN_H_

#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/common.h"

namespace dsbi {

// a trainable tensor seen as flat value/gradient storage
struct ParamView {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// fully connected network, tanh between layers, linear output
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., output}; weights ~ N(0, 1/fan_in)
  Mlp(std::vector<int> sizes, Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }

  // x is input_dim x batch; caches activations for Backward
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd Predict(const Eigen::MatrixXd& x) const;
  // accumulates parameter gradients and returns d loss / d input
  Eigen::MatrixXd Backward(const Eigen::MatrixXd& d_output);

  void ZeroGrad();
  std::vector<ParamView> Params();

  // scales the last layer's weights and sets its bias
  void InitOutputLayer(double weight_scale, const Eigen::VectorXd& bias,
                       Rng& rng);

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

 private:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
    Eigen::MatrixXd d_weight;
    Eigen::VectorXd d_bias;
  };

  std::vector<int> sizes_;
  std::vector<Layer> layers_;
  // inputs to each layer from the last Forward; cached_.back() is the output
  std::vector<Eigen::MatrixXd> cached_;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(options) {}
  // one update over `params`; the list must keep the same layout across calls
  void Step(const std::vector<ParamView>& params);
  int steps() const { return step_; }

 private:
  AdamOptions options_;
  int step_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace dsbi

#endif  // DSBI_NN_H_
