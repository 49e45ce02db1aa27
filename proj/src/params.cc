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

#include "dsbi/params.h"

#include <cmath>
#include <string>

namespace dsbi {

Eigen::VectorXd SimParams::ToVector() const {
  Eigen::VectorXd v(kNumSimParams);
  v << bend_stiffness, elastic_stiffness, friction, scale;
  return v;
}

SimParams SimParams::FromVector(const Eigen::VectorXd& v) {
  if (v.size() != kNumSimParams) {
    throw ArgumentError("parameter vector must have 4 entries, got " +
                        std::to_string(v.size()));
  }
  SimParams p;
  p.bend_stiffness = v[kBendStiffness];
  p.elastic_stiffness = v[kElasticStiffness];
  p.friction = v[kFriction];
  p.scale = v[kScale];
  return p;
}

void SimParams::Validate() const {
  if (!ToVector().allFinite()) {
    throw ConfigError("simulation parameters must be finite");
  }
  if (bend_stiffness <= 0 || elastic_stiffness <= 0) {
    throw ConfigError("stiffnesses must be positive");
  }
  if (friction < 0) throw ConfigError("friction must be non-negative");
  if (scale <= 0) throw ConfigError("scale must be positive");
}

PriorBox PriorBox::Default() {
  PriorBox box;
  box.low.resize(kNumSimParams);
  box.high.resize(kNumSimParams);
  box.low << 0.1, 10.0, 0.05, 0.5;
  box.high << 50.0, 500.0, 1.5, 2.0;
  return box;
}

void PriorBox::Validate() const {
  if (low.size() != high.size() || low.size() == 0) {
    throw ConfigError("prior box bounds must be non-empty and equal length");
  }
  if (!low.allFinite() || !high.allFinite()) {
    throw ConfigError("prior box bounds must be finite");
  }
  for (int i = 0; i < low.size(); ++i) {
    if (!(low[i] < high[i])) {
      throw ConfigError("prior box requires low < high in dimension " +
                        std::to_string(i));
    }
  }
}

bool PriorBox::Contains(const Eigen::VectorXd& theta) const {
  if (theta.size() != low.size()) return false;
  for (int i = 0; i < low.size(); ++i) {
    if (!(theta[i] >= low[i] && theta[i] <= high[i])) return false;
  }
  return true;
}

Eigen::VectorXd PriorBox::Stddev() const { return Width() / std::sqrt(12.0); }

double PriorBox::LogDensity() const {
  return -Width().array().log().sum();
}

Eigen::VectorXd PriorBox::Sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd theta(dim());
  for (int i = 0; i < dim(); ++i) {
    theta[i] = low[i] + unit(rng) * (high[i] - low[i]);
  }
  return theta;
}

PriorBox PriorBox::Shrunk(double fraction) const {
  PriorBox box = *this;
  box.low = low + fraction * Width();
  box.high = high - fraction * Width();
  return box;
}

nlohmann::json ToJson(const SimParams& params) {
  return {{"bend_stiffness", params.bend_stiffness},
          {"elastic_stiffness", params.elastic_stiffness},
          {"friction", params.friction},
          {"scale", params.scale}};
}

SimParams SimParamsFromJson(const nlohmann::json& j) {
  SimParams p;
  if (j.is_array()) {
    if (j.size() != kNumSimParams) {
      throw ConfigError("parameter array must have 4 entries");
    }
    Eigen::VectorXd v(kNumSimParams);
    for (int i = 0; i < kNumSimParams; ++i) v[i] = j[i].get<double>();
    p = SimParams::FromVector(v);
  } else {
    p.bend_stiffness = j.at("bend_stiffness").get<double>();
    p.elastic_stiffness = j.at("elastic_stiffness").get<double>();
    p.friction = j.at("friction").get<double>();
    p.scale = j.at("scale").get<double>();
  }
  p.Validate();
  return p;
}

nlohmann::json ToJson(const PriorBox& box) {
  return {{"low", std::vector<double>(box.low.data(),
                                      box.low.data() + box.low.size())},
          {"high", std::vector<double>(box.high.data(),
                                       box.high.data() + box.high.size())}};
}

PriorBox PriorBoxFromJson(const nlohmann::json& j) {
  auto low = j.at("low").get<std::vector<double>>();
  auto high = j.at("high").get<std::vector<double>>();
  PriorBox box;
  box.low = Eigen::Map<Eigen::VectorXd>(low.data(), low.size());
  box.high = Eigen::Map<Eigen::VectorXd>(high.data(), high.size());
  box.Validate();
  return box;
}

}  // namespace dsbi
