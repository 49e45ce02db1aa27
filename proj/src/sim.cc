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

#include "dsbi/sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace dsbi {
namespace {

// scale-1 template dimensions
constexpr double kClothSide = 0.3;       // m
constexpr double kClothParticleMass = 0.05;  // kg
constexpr double kRopeLength = 0.4;      // m
constexpr double kRopeParticleMass = 0.015;  // kg

// wind scene: anchor circles the pole center at this radius
constexpr double kWindPathRadius = 0.1;
constexpr double kPoleRadius = 0.04;
constexpr double kWindTurns = 1.5;

double SmoothStep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

Vec2 Lerp(const Vec2& a, const Vec2& b, double u) { return a + (b - a) * u; }

Topology TopologyFor(Scenario scenario) {
  return scenario == Scenario::kWind ? Topology::kChain : Topology::kGrid;
}

Vec2 PoleCenter(const SimConfig& config) {
  return GripperStart(config) + Vec2(0.0, kWindPathRadius);
}

// template offsets from the gripper start, scale 1
Points2 TemplateOffsets(Scenario scenario, const SimConfig& config) {
  if (TopologyFor(scenario) == Topology::kGrid) {
    const int n = config.cloth_resolution;
    const double h = kClothSide / (n - 1);
    Points2 offsets(2, n * n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        offsets.col(r * n + c) = Vec2(-0.5 * kClothSide + c * h, r * h);
      }
    }
    return offsets;
  }
  const int n = config.rope_particles;
  const double h = kRopeLength / (n - 1);
  Points2 offsets(2, n);
  for (int i = 0; i < n; ++i) offsets.col(i) = Vec2(-(n - 1 - i) * h, 0.0);
  return offsets;
}

std::vector<Vec2> MotionWaypoints(Scenario scenario, const SimConfig& config,
                                  int steps) {
  const Vec2 start = GripperStart(config);
  std::vector<Vec2> waypoints(steps);
  for (int t = 0; t < steps; ++t) {
    const double u = steps > 1 ? static_cast<double>(t) / (steps - 1) : 0.0;
    switch (scenario) {
      case Scenario::kWipe:
        waypoints[t] = start + Vec2(0.3 * SmoothStep(u), 0.0);
        break;
      case Scenario::kWind: {
        const double angle = -0.5 * std::numbers::pi +
                             2.0 * std::numbers::pi * kWindTurns * SmoothStep(u);
        waypoints[t] = PoleCenter(config) +
                       kWindPathRadius * Vec2(std::cos(angle), std::sin(angle));
        break;
      }
      case Scenario::kFling: {
        // rise, lower, drag
        const Vec2 top = start + Vec2(0.1, 0.45);
        const Vec2 down = start + Vec2(0.2, 0.0);
        const Vec2 end = start + Vec2(0.45, 0.0);
        if (u < 0.3) {
          waypoints[t] = Lerp(start, top, SmoothStep(u / 0.3));
        } else if (u < 0.6) {
          waypoints[t] = Lerp(top, down, SmoothStep((u - 0.3) / 0.3));
        } else {
          waypoints[t] = Lerp(down, end, SmoothStep((u - 0.6) / 0.4));
        }
        break;
      }
    }
  }
  return waypoints;
}

void AddSpringForces(const std::vector<Spring>& springs, double stiffness,
                     const Points2& x, Points2& force) {
  for (const Spring& s : springs) {
    const Vec2 d = x.col(s.j) - x.col(s.i);
    const double len = d.norm();
    if (len < 1e-12) continue;
    const Vec2 f = stiffness * (len - s.rest_length) / len * d;
    force.col(s.i) += f;
    force.col(s.j) -= f;
  }
}

}  // namespace

Scenario ParseScenario(std::string_view name) {
  if (name == "wipe") return Scenario::kWipe;
  if (name == "wind") return Scenario::kWind;
  if (name == "fling") return Scenario::kFling;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string_view ScenarioName(Scenario scenario) {
  switch (scenario) {
    case Scenario::kWipe:
      return "wipe";
    case Scenario::kWind:
      return "wind";
    case Scenario::kFling:
      return "fling";
  }
  return "unknown";
}

bool DeformableMesh::IsAnchor(int index) const {
  return std::find(anchor_indices.begin(), anchor_indices.end(), index) !=
         anchor_indices.end();
}

void DeformableMesh::Validate() const {
  const int n = num_particles();
  if (velocity.cols() != n || mass.size() != n) {
    throw ConfigError("mesh arrays disagree on particle count");
  }
  if (anchor_indices.empty()) throw ConfigError("mesh has no anchors");
  if (anchor_offsets.cols() != static_cast<int>(anchor_indices.size())) {
    throw ConfigError("one anchor offset per anchor required");
  }
  for (int a : anchor_indices) {
    if (a < 0 || a >= n) throw ConfigError("anchor index out of range");
  }
  auto check = [n](const std::vector<Spring>& springs) {
    for (const Spring& s : springs) {
      if (s.i < 0 || s.j < 0 || s.i >= n || s.j >= n || s.i == s.j) {
        throw ConfigError("spring endpoint invalid");
      }
      if (!(s.rest_length > 0)) throw ConfigError("rest length must be > 0");
    }
  };
  check(structural_springs);
  check(bending_springs);
  if ((mass.array() <= 0).any()) throw ConfigError("masses must be positive");
}

void SimConfig::Validate() const {
  if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  if (substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(damping >= 0)) throw ConfigError("damping must be >= 0");
  if (!std::isfinite(gravity) || !std::isfinite(table_height)) {
    throw ConfigError("gravity and table height must be finite");
  }
  if (cloth_resolution < 3) throw ConfigError("cloth_resolution must be >= 3");
  if (rope_particles < 3) throw ConfigError("rope_particles must be >= 3");
}

nlohmann::json ToJson(const SimConfig& config) {
  return {{"dt", config.dt},
          {"substeps", config.substeps},
          {"damping", config.damping},
          {"gravity", config.gravity},
          {"table_height", config.table_height},
          {"seed", config.seed},
          {"cloth_resolution", config.cloth_resolution},
          {"rope_particles", config.rope_particles}};
}

SimConfig SimConfigFromJson(const nlohmann::json& j) {
  SimConfig c;
  c.dt = j.value("dt", c.dt);
  c.substeps = j.value("substeps", c.substeps);
  c.damping = j.value("damping", c.damping);
  c.gravity = j.value("gravity", c.gravity);
  c.table_height = j.value("table_height", c.table_height);
  c.seed = j.value("seed", c.seed);
  c.cloth_resolution = j.value("cloth_resolution", c.cloth_resolution);
  c.rope_particles = j.value("rope_particles", c.rope_particles);
  c.Validate();
  return c;
}

Vec2 GripperStart(const SimConfig& config) {
  return Vec2(0.0, config.table_height);
}

Points2 TemplateVertices(Scenario scenario, const SimConfig& config) {
  Points2 offsets = TemplateOffsets(scenario, config);
  return offsets.colwise() + GripperStart(config);
}

double TemplateDiameter(Scenario scenario, const SimConfig& /*config*/) {
  return TopologyFor(scenario) == Topology::kGrid
             ? kClothSide * std::sqrt(2.0)
             : kRopeLength;
}

double WorkspaceBound(Scenario scenario, const SimConfig& config,
                      double scale) {
  return 10.0 * TemplateDiameter(scenario, config) * scale;
}

Scene BuildScene(Scenario scenario, const SimParams& params,
                 const SimConfig& config, int steps) {
  params.Validate();
  config.Validate();
  if (steps < 1) throw ArgumentError("scene needs at least one step");

  Scene scene;
  DeformableMesh& mesh = scene.mesh;
  const Vec2 start = GripperStart(config);
  const Points2 offsets = TemplateOffsets(scenario, config) * params.scale;
  const int n = static_cast<int>(offsets.cols());

  mesh.topology = TopologyFor(scenario);
  mesh.position = offsets.colwise() + start;
  mesh.velocity = Points2::Zero(2, n);
  mesh.elastic_stiffness = params.elastic_stiffness;
  mesh.bend_stiffness = params.bend_stiffness;
  mesh.friction = params.friction;
  mesh.gripper = start;

  auto add = [&mesh](std::vector<Spring>& springs, int i, int j) {
    const double rest = (mesh.position.col(j) - mesh.position.col(i)).norm();
    springs.push_back({i, j, rest});
  };

  if (mesh.topology == Topology::kGrid) {
    const int g = config.cloth_resolution;
    mesh.grid_size = g;
    mesh.mass = Eigen::VectorXd::Constant(n, kClothParticleMass);
    auto id = [g](int r, int c) { return r * g + c; };
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) {
        if (c + 1 < g) add(mesh.structural_springs, id(r, c), id(r, c + 1));
        if (r + 1 < g) add(mesh.structural_springs, id(r, c), id(r + 1, c));
        // shear diagonals
        if (r + 1 < g && c + 1 < g) {
          add(mesh.structural_springs, id(r, c), id(r + 1, c + 1));
          add(mesh.structural_springs, id(r, c + 1), id(r + 1, c));
        }
        if (c + 2 < g) add(mesh.bending_springs, id(r, c), id(r, c + 2));
        if (r + 2 < g) add(mesh.bending_springs, id(r, c), id(r + 2, c));
      }
    }
    // bottom edge midpoint
    if (g % 2 == 0) {
      mesh.anchor_indices = {id(0, g / 2 - 1), id(0, g / 2)};
    } else {
      mesh.anchor_indices = {id(0, g / 2)};
    }
  } else {
    mesh.mass = Eigen::VectorXd::Constant(n, kRopeParticleMass);
    for (int i = 0; i + 1 < n; ++i) add(mesh.structural_springs, i, i + 1);
    for (int i = 0; i + 2 < n; ++i) add(mesh.bending_springs, i, i + 2);
    mesh.anchor_indices = {n - 1};
    mesh.obstacle = CircleObstacle{PoleCenter(config), kPoleRadius};
  }

  mesh.anchor_offsets.resize(2, mesh.anchor_indices.size());
  for (size_t a = 0; a < mesh.anchor_indices.size(); ++a) {
    mesh.anchor_offsets.col(a) = mesh.position.col(mesh.anchor_indices[a]) - start;
  }
  mesh.Validate();

  scene.motion.scenario = scenario;
  scene.motion.waypoints = MotionWaypoints(scenario, config, steps);
  return scene;
}

DeformableMesh Step(DeformableMesh mesh, const Vec2& anchor_target,
                    const SimConfig& config, int step_index) {
  const int n = mesh.num_particles();
  const double h = config.dt;
  const Vec2 gravity(0.0, -config.gravity);
  const Vec2 gripper_begin = mesh.gripper;
  std::vector<char> anchored(n, 0);
  for (int a : mesh.anchor_indices) anchored[a] = 1;

  Points2 force(2, n);
  for (int sub = 0; sub < config.substeps; ++sub) {
    const double u = static_cast<double>(sub + 1) / config.substeps;
    const Vec2 gripper = gripper_begin + (anchor_target - gripper_begin) * u;

    // anchors move kinematically
    for (size_t a = 0; a < mesh.anchor_indices.size(); ++a) {
      const int i = mesh.anchor_indices[a];
      const Vec2 next = gripper + mesh.anchor_offsets.col(a);
      mesh.velocity.col(i) = (next - mesh.position.col(i)) / h;
      mesh.position.col(i) = next;
    }

    force.setZero();
    AddSpringForces(mesh.structural_springs, mesh.elastic_stiffness,
                    mesh.position, force);
    AddSpringForces(mesh.bending_springs, mesh.bend_stiffness, mesh.position,
                    force);

    for (int i = 0; i < n; ++i) {
      if (anchored[i]) continue;
      const double m = mesh.mass[i];
      Vec2 f = force.col(i) + m * gravity - config.damping * m * mesh.velocity.col(i);
      Vec2 v = mesh.velocity.col(i);

      // table contact: the table cancels the pressing force and friction
      // opposes sliding with |f_t| <= mu |f_n|
      const bool on_table = mesh.position(1, i) <= config.table_height + 1e-12;
      bool stick = false;
      if (on_table && f.y() < 0) {
        const double normal = -f.y();
        f.y() = 0.0;
        if (v.y() < 0) v.y() = 0.0;
        const double limit = mesh.friction * normal;
        // tangential force needed to stop within this substep
        const double stop = m * v.x() / h + f.x();
        if (std::abs(stop) <= limit) {
          stick = true;
        } else {
          f.x() -= std::copysign(limit, stop);
        }
      }

      v += f / m * h;
      if (stick) v.x() = 0.0;
      Vec2 x = mesh.position.col(i) + v * h;

      if (x.y() < config.table_height) {
        x.y() = config.table_height;
        if (v.y() < 0) v.y() = 0.0;
      }
      if (mesh.obstacle) {
        const Vec2 d = x - mesh.obstacle->center;
        const double dist = d.norm();
        if (dist < mesh.obstacle->radius && dist > 1e-12) {
          const Vec2 normal = d / dist;
          x = mesh.obstacle->center + normal * mesh.obstacle->radius;
          const double vn = v.dot(normal);
          if (vn < 0) v -= vn * normal;
        }
      }
      mesh.position.col(i) = x;
      mesh.velocity.col(i) = v;
    }
    mesh.gripper = gripper;
  }

  if (!mesh.position.allFinite() || !mesh.velocity.allFinite()) {
    throw SimulationDiverged(step_index);
  }
  return mesh;
}

namespace {

Trajectory RunRollout(Scenario scenario, const SimParams& params, int steps,
                      const SimConfig& config, bool flag_divergence) {
  if (steps < 2) throw ArgumentError("rollout needs at least 2 steps");
  Scene scene = BuildScene(scenario, params, config, steps);
  const auto& waypoints = scene.motion.waypoints;

  Trajectory traj;
  traj.scenario = scenario;
  traj.params = params;
  traj.gripper_pose.reserve(steps);
  traj.actions.reserve(steps);
  traj.particles.reserve(steps);

  DeformableMesh mesh = std::move(scene.mesh);
  for (int t = 0; t < steps; ++t) {
    if (t > 0 && !traj.diverged) {
      try {
        mesh = Step(std::move(mesh), waypoints[t], config, t);
      } catch (const SimulationDiverged& e) {
        if (!flag_divergence) throw;
        traj.diverged = true;
        traj.diverged_step = e.step();
      }
    }
    if (traj.diverged) {
      // hold the last finite state
      traj.gripper_pose.push_back(traj.gripper_pose.back());
      traj.particles.push_back(traj.particles.back());
    } else {
      traj.gripper_pose.push_back(mesh.gripper);
      traj.particles.push_back(mesh.position);
    }
    traj.actions.push_back(waypoints[std::min(t + 1, steps - 1)]);
  }
  return traj;
}

}  // namespace

Trajectory Rollout(Scenario scenario, const SimParams& params, int steps,
                   const SimConfig& config) {
  return RunRollout(scenario, params, steps, config, false);
}

Trajectory RolloutFlagged(Scenario scenario, const SimParams& params,
                          int steps, const SimConfig& config) {
  return RunRollout(scenario, params, steps, config, true);
}

void WriteTrajectoryJsonl(const Trajectory& trajectory, std::ostream& out) {
  for (int t = 0; t < trajectory.steps(); ++t) {
    nlohmann::json particles = nlohmann::json::array();
    const Points2& p = trajectory.particles[t];
    for (int i = 0; i < p.cols(); ++i) particles.push_back({p(0, i), p(1, i)});
    nlohmann::json line = {
        {"t", t},
        {"gripper_pose",
         {trajectory.gripper_pose[t].x(), trajectory.gripper_pose[t].y()}},
        {"action", {trajectory.actions[t].x(), trajectory.actions[t].y()}},
        {"particles", std::move(particles)}};
    out << line.dump() << '\n';
  }
}

}  // namespace dsbi
