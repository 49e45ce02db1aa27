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

#ifndef DSBI_SIM_H_
#define DSBI_SIM_H_

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dsbi/common.h"
#include "dsbi/params.h"

namespace dsbi {

enum class Scenario { kWipe, kWind, kFling };

// throws ConfigError on an unknown tag
Scenario ParseScenario(std::string_view name);
std::string_view ScenarioName(Scenario scenario);

enum class Topology { kGrid, kChain };

struct Spring {
  int i = 0;
  int j = 0;
  double rest_length = 0;  // m
};

struct CircleObstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0;
};

// particle system with kinematically driven anchors
struct DeformableMesh {
  Topology topology = Topology::kGrid;
  int grid_size = 0;  // particles per side, grid topology only

  Points2 position;
  Points2 velocity;
  Eigen::VectorXd mass;  // kg

  std::vector<Spring> structural_springs;
  std::vector<Spring> bending_springs;
  double elastic_stiffness = 0;  // N/m
  double bend_stiffness = 0;     // N/m
  double friction = 0;

  // anchor i sits at gripper + anchor_offsets.col(i)
  std::vector<int> anchor_indices;
  Points2 anchor_offsets;
  Vec2 gripper = Vec2::Zero();

  std::optional<CircleObstacle> obstacle;

  int num_particles() const { return static_cast<int>(position.cols()); }
  bool IsAnchor(int index) const;
  // throws ConfigError when an invariant is broken
  void Validate() const;
};

struct ScriptedMotion {
  Scenario scenario = Scenario::kWipe;
  std::vector<Vec2> waypoints;  // one anchor target per step, m

  int duration() const { return static_cast<int>(waypoints.size()); }
};

struct SimConfig {
  double dt = 1.0 / 240.0;  // integration step, s
  int substeps = 4;         // integration steps per control step
  double damping = 0.5;     // 1/s
  double gravity = 9.81;    // m/s^2
  double table_height = 0;  // m
  uint64_t seed = 0;
  int cloth_resolution = 8;
  int rope_particles = 16;

  void Validate() const;
};

nlohmann::json ToJson(const SimConfig& config);
SimConfig SimConfigFromJson(const nlohmann::json& j);

struct Scene {
  DeformableMesh mesh;
  ScriptedMotion motion;
};

// canonical rest geometry at scale 1
Points2 TemplateVertices(Scenario scenario, const SimConfig& config);

// object diameter of the scale-1 template
double TemplateDiameter(Scenario scenario, const SimConfig& config);

// half-width of the box around the gripper start that every coordinate of a
// healthy rollout stays inside: ten object diameters at the given scale
double WorkspaceBound(Scenario scenario, const SimConfig& config,
                      double scale);

Vec2 GripperStart(const SimConfig& config);

Scene BuildScene(Scenario scenario, const SimParams& params,
                 const SimConfig& config, int steps = 200);

// advances one control step, moving the anchors to `anchor_target` over
// `config.substeps` semi-implicit Euler substeps; throws SimulationDiverged
// tagged with `step_index` if the state becomes non-finite
DeformableMesh Step(DeformableMesh mesh, const Vec2& anchor_target,
                    const SimConfig& config, int step_index = 0);

struct Trajectory {
  Scenario scenario = Scenario::kWipe;
  SimParams params;
  std::vector<Vec2> gripper_pose;  // s_t gripper part
  std::vector<Vec2> actions;       // a_t, anchor target for the next step
  std::vector<Points2> particles;  // full state, evaluation only
  bool diverged = false;
  int diverged_step = -1;

  int steps() const { return static_cast<int>(gripper_pose.size()); }
};

// runs `steps` control steps; throws SimulationDiverged on failure
Trajectory Rollout(Scenario scenario, const SimParams& params, int steps,
                   const SimConfig& config);

// like Rollout, but a diverged run is returned with `diverged` set and its
// last finite state held for the remaining steps
Trajectory RolloutFlagged(Scenario scenario, const SimParams& params,
                          int steps, const SimConfig& config);

// one JSON object per line: {t, gripper_pose, action, particles}
void WriteTrajectoryJsonl(const Trajectory& trajectory, std::ostream& out);

}  // namespace dsbi

#endif  // DSBI_SIM_H_
