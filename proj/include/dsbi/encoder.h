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

#ifndef DSBI_ENCODER_H_
#define DSBI_ENCODER_H_

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/nn.h"
#include "dsbi/rkhs.h"

namespace dsbi {

// one time step of a distributional input: non-distributional values and the
// keypoint set to embed (one point per column)
struct Frame {
  Eigen::VectorXd statics;
  Eigen::MatrixXd points;
};

// network input: embedded frames followed by a plain feature vector
struct ModelInput {
  std::vector<Frame> frames;
  Eigen::VectorXd dense;
};

// Maps ModelInputs to network features. Each frame contributes
// [statics, MeanEmbed(points)] and `dense` is appended; the result is then
// standardized with a fixed per-feature affine map. With a trainable basis
// the layer back-propagates into the frequencies and the bandwidth.
class InputEncoder {
 public:
  InputEncoder() = default;
  explicit InputEncoder(RffBasis basis);

  bool has_embedding() const { return basis_.has_value(); }
  const RffBasis& basis() const { return *basis_; }

  Eigen::VectorXd RawFeatures(const ModelInput& input) const;
  int FeatureDim(const ModelInput& prototype) const;

  // per-feature mean and std (std floored to 1 when ~0); identity until called
  void FitStandardizer(std::span<const ModelInput* const> inputs);
  bool standardized() const { return shift_.size() > 0; }

  // features x batch
  Eigen::MatrixXd Encode(std::span<const ModelInput* const> batch) const;
  void Backward(std::span<const ModelInput* const> batch,
                const Eigen::MatrixXd& d_encoded);

  void ZeroGrad();
  // empty unless the basis is trainable
  std::vector<ParamView> Params();
  // keeps the bandwidth positive after an optimizer step
  void Project();

  nlohmann::json ToJson() const;
  static InputEncoder FromJson(const nlohmann::json& j);

 private:
  std::optional<RffBasis> basis_;
  Eigen::MatrixXd d_frequencies_;
  double d_sigma_ = 0;
  double sigma_floor_ = 0;
  Eigen::VectorXd shift_;
  Eigen::VectorXd inv_scale_;
};

}  // namespace dsbi

#endif  // DSBI_ENCODER_H_
