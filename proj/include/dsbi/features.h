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

#ifndef DSBI_FEATURES_H_
#define DSBI_FEATURES_H_

#include <vector>

#include <Eigen/Core>

#include "dsbi/encoder.h"
#include "dsbi/observation.h"
#include "dsbi/rkhs.h"

namespace dsbi {

// Inner products <tau_i, a_j> over time of the state differences
// tau_t = s_t - s_{t-1} with the actions a_{t-1}, followed by the per-dimension
// mean and population variance of tau. `states` holds T rows of length D_s;
// `actions` holds T - 1 or T rows (the last is then unused). Length
// D_s * D_a + 2 * D_s.
Eigen::VectorXd SummaryStats(const std::vector<Eigen::VectorXd>& states,
                             const std::vector<Eigen::VectorXd>& actions);
// on the assembled observation states [gripper, keypoints]
Eigen::VectorXd SummaryStats(const ObservedTrajectory& observed);

// round(j (T - 1) / (T_f - 1)) for j in [0, T_f); {0} when T_f = 1
std::vector<int> SubsampleIndices(int steps, int frames);

// T_f frames of statics [gripper_pose, action] and the frame's keypoints
ModelInput RkhsInput(const ObservedTrajectory& observed, int frames);
// per frame [gripper_pose, action, MeanEmbed(keypoints)], length
// T_f * (4 + 2M)
Eigen::VectorXd RkhsFeatures(const ObservedTrajectory& observed,
                             const RffBasis& basis, int frames);

// all assembled states in time order, then all actions
Eigen::VectorXd FlattenTrajectory(const ObservedTrajectory& observed);
// RffMap of the flattened trajectory; throws ArgumentError if the basis
// dimension does not match
Eigen::VectorXd MdrffFeatures(const ObservedTrajectory& observed,
                              const RffBasis& basis);

}  // namespace dsbi

#endif  // DSBI_FEATURES_H_
