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

#include "dsbi/features.h"

#include <cmath>
#include <string>

namespace dsbi {

Eigen::VectorXd SummaryStats(const std::vector<Eigen::VectorXd>& states,
                             const std::vector<Eigen::VectorXd>& actions) {
  const int t = static_cast<int>(states.size());
  if (t < 2) throw ArgumentError("summary statistics need T >= 2");
  const int na = static_cast<int>(actions.size());
  if (na != t && na != t - 1) {
    throw ArgumentError("expected T or T - 1 actions, got " +
                        std::to_string(na));
  }
  const int ds = static_cast<int>(states[0].size());
  const int da = static_cast<int>(actions[0].size());

  Eigen::MatrixXd tau(ds, t - 1);
  Eigen::MatrixXd act(da, t - 1);
  for (int i = 1; i < t; ++i) {
    tau.col(i - 1) = states[i] - states[i - 1];
    act.col(i - 1) = actions[i - 1];
  }
  const Eigen::MatrixXd inner = tau * act.transpose();  // ds x da
  const Eigen::VectorXd mean = tau.rowwise().mean();
  const Eigen::VectorXd var =
      (tau.colwise() - mean).array().square().rowwise().mean();

  Eigen::VectorXd out(ds * da + 2 * ds);
  for (int i = 0; i < ds; ++i) {
    for (int j = 0; j < da; ++j) out[i * da + j] = inner(i, j);
  }
  out.segment(ds * da, ds) = mean;
  out.segment(ds * da + ds, ds) = var;
  return out;
}

Eigen::VectorXd SummaryStats(const ObservedTrajectory& observed) {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;
  for (int t = 0; t < observed.steps(); ++t) {
    states.push_back(AssembleState(observed.gripper_pose[t],
                                   observed.keypoints[t]));
    actions.push_back(observed.actions[t]);
  }
  return SummaryStats(states, actions);
}

std::vector<int> SubsampleIndices(int steps, int frames) {
  if (frames < 1) throw ArgumentError("frames must be >= 1");
  if (steps < frames) {
    throw ArgumentError("trajectory of " + std::to_string(steps) +
                        " steps is shorter than " + std::to_string(frames) +
                        " frames");
  }
  if (frames == 1) return {0};
  std::vector<int> idx(frames);
  for (int j = 0; j < frames; ++j) {
    idx[j] = static_cast<int>(std::lround(static_cast<double>(j) * (steps - 1) /
                                          (frames - 1)));
  }
  return idx;
}

ModelInput RkhsInput(const ObservedTrajectory& observed, int frames) {
  ModelInput input;
  for (int t : SubsampleIndices(observed.steps(), frames)) {
    Frame frame;
    frame.statics.resize(4);
    frame.statics << observed.gripper_pose[t], observed.actions[t];
    frame.points = observed.keypoints[t];
    input.frames.push_back(std::move(frame));
  }
  return input;
}

Eigen::VectorXd RkhsFeatures(const ObservedTrajectory& observed,
                             const RffBasis& basis, int frames) {
  const std::vector<int> idx = SubsampleIndices(observed.steps(), frames);
  const int per = 4 + basis.feature_dim();
  Eigen::VectorXd out(per * frames);
  for (int j = 0; j < frames; ++j) {
    const int t = idx[j];
    out.segment(j * per, 2) = observed.gripper_pose[t];
    out.segment(j * per + 2, 2) = observed.actions[t];
    out.segment(j * per + 4, basis.feature_dim()) =
        MeanEmbed(observed.keypoints[t], basis);
  }
  return out;
}

Eigen::VectorXd FlattenTrajectory(const ObservedTrajectory& observed) {
  const int t = observed.steps();
  const int ds = 2 + 2 * observed.num_keypoints();
  Eigen::VectorXd out(t * ds + 2 * t);
  for (int i = 0; i < t; ++i) {
    out.segment(i * ds, ds) =
        AssembleState(observed.gripper_pose[i], observed.keypoints[i]);
    out.segment(t * ds + 2 * i, 2) = observed.actions[i];
  }
  return out;
}

Eigen::VectorXd MdrffFeatures(const ObservedTrajectory& observed,
                              const RffBasis& basis) {
  const Eigen::VectorXd flat = FlattenTrajectory(observed);
  if (flat.size() != basis.dim()) {
    throw ArgumentError("flattened trajectory has length " +
                        std::to_string(flat.size()) + " but the basis expects " +
                        std::to_string(basis.dim()));
  }
  return RffMap(flat, basis);
}

}  // namespace dsbi
