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

#ifndef DSBI_OBSERVATION_H_
#define DSBI_OBSERVATION_H_

#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsbi/common.h"
#include "dsbi/sim.h"

namespace dsbi {

// semantic: keypoints sit on fixed template particles (cloth perimeter
// starting at the corners, evenly spaced rope particles); diffuse: keypoints
// are uniform particle draws, fresh every frame
enum class KeypointMode { kSemantic, kDiffuse };

KeypointMode ParseKeypointMode(std::string_view name);
std::string_view KeypointModeName(KeypointMode mode);

struct ObjectLayout {
  Topology topology = Topology::kGrid;
  int grid_size = 0;
  int num_particles = 0;

  static ObjectLayout For(Scenario scenario, const SimConfig& config);
};

// failure model of a learned keypoint extractor
struct ObservationNoise {
  double gaussian_std = 0;  // m
  bool permute = false;     // shuffle keypoint order every frame
  // chance per keypoint and frame of landing on a random particle
  double relocation_prob = 0;
  // chance per keypoint and frame of being replaced by a random point on
  // the object surface
  double dropout_resample_prob = 0;
  uint64_t seed = 0;

  void Validate() const;
};

// "none", "supervised" or "unsupervised"; magnitudes are fractions of the
// scale-1 object diameter
ObservationNoise NoiseProfile(std::string_view name, Scenario scenario,
                              const SimConfig& config);

// accepts a profile name or an object with explicit fields (optionally
// starting from {"profile": name})
ObservationNoise NoiseFromJson(const nlohmann::json& j, Scenario scenario,
                               const SimConfig& config);
nlohmann::json ToJson(const ObservationNoise& noise);

std::vector<int> SemanticKeypointIndices(const ObjectLayout& layout, int k);

// returns k keypoints for one frame; throws ConfigError if k exceeds the
// particle count
Points2 ExtractKeypoints(const Points2& particles, const ObjectLayout& layout,
                         KeypointMode mode, int k,
                         const ObservationNoise& noise, Rng& frame_rng);

struct StateVector {
  Vec2 gripper_pose = Vec2::Zero();
  Points2 keypoints;
};

// [gripper_pose, k_1, ..., k_K], length 2 + 2K
Eigen::VectorXd AssembleState(const Vec2& gripper_pose,
                              const Points2& keypoints);
StateVector DisassembleState(const Eigen::VectorXd& state);

// full particle set; for evaluation only, never fed to an estimator
Points2 GroundTruthPoints(const Points2& particles);

struct ObservedTrajectory {
  std::vector<Vec2> gripper_pose;
  std::vector<Vec2> actions;
  std::vector<Points2> keypoints;
  bool diverged = false;

  int steps() const { return static_cast<int>(gripper_pose.size()); }
  int num_keypoints() const {
    return keypoints.empty() ? 0 : static_cast<int>(keypoints[0].cols());
  }
};

// applies ExtractKeypoints to every frame with a per-frame stream derived
// from noise.seed
ObservedTrajectory Observe(const Trajectory& trajectory,
                           const ObjectLayout& layout, KeypointMode mode,
                           int k, const ObservationNoise& noise);

// {t, gripper_pose, keypoints} per line
void WriteObservationJsonl(const ObservedTrajectory& observed,
                           std::ostream& out);

}  // namespace dsbi

#endif  // DSBI_OBSERVATION_H_
