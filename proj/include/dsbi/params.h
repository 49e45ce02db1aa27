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

#ifndef DSBI_PARAMS_H_
#define DSBI_PARAMS_H_

#include <array>
#include <string_view>

#include <Eigen/Core>
#include <json.hpp>

#include "dsbi/common.h"

namespace dsbi {

inline constexpr int kNumSimParams = 4;

// index of each physical parameter in a parameter vector
enum SimParamIndex : int {
  kBendStiffness = 0,
  kElasticStiffness = 1,
  kFriction = 2,
  kScale = 3,
};

inline constexpr std::array<std::string_view, kNumSimParams> kSimParamNames = {
    "bend_stiffness", "elastic_stiffness", "friction", "scale"};

// physical parameters of a deformable scene
struct SimParams {
  double bend_stiffness = 1.0;     // N/m, bending springs
  double elastic_stiffness = 100;  // N/m, structural springs
  double friction = 0.5;           // Coulomb coefficient
  double scale = 1.0;              // rest geometry multiplier

  Eigen::VectorXd ToVector() const;
  static SimParams FromVector(const Eigen::VectorXd& v);

  // throws ConfigError unless every field is finite, stiffnesses and scale
  // are positive and friction is non-negative
  void Validate() const;
};

// axis-aligned box with a uniform density over it
struct PriorBox {
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  // elastic in [10, 500] N/m, bend in [0.1, 50] N/m, friction in [0.05, 1.5],
  // scale in [0.5, 2]
  static PriorBox Default();

  int dim() const { return static_cast<int>(low.size()); }
  void Validate() const;
  bool Contains(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd Width() const { return high - low; }
  Eigen::VectorXd Center() const { return 0.5 * (low + high); }
  // marginal standard deviations of the uniform density
  Eigen::VectorXd Stddev() const;
  // log density inside the box (constant)
  double LogDensity() const;
  Eigen::VectorXd Sample(Rng& rng) const;
  // box shrunk toward its center by `fraction` of the width on each side
  PriorBox Shrunk(double fraction) const;
};

nlohmann::json ToJson(const SimParams& params);
SimParams SimParamsFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const PriorBox& box);
PriorBox PriorBoxFromJson(const nlohmann::json& j);

}  // namespace dsbi

#endif  // DSBI_PARAMS_H_
