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

#include "dsbi/observation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace dsbi {
namespace {

// a uniformly placed point on the object: inside a random grid cell or on a
// random rope segment
Vec2 SurfaceSample(const Points2& particles, const ObjectLayout& layout,
                   Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (layout.topology == Topology::kGrid) {
    const int g = layout.grid_size;
    std::uniform_int_distribution<int> cell(0, g - 2);
    const int r = cell(rng);
    const int c = cell(rng);
    const double u = unit(rng);
    const double v = unit(rng);
    auto p = [&](int rr, int cc) -> Vec2 { return particles.col(rr * g + cc); };
    return (1 - u) * (1 - v) * p(r, c) + u * (1 - v) * p(r, c + 1) +
           (1 - u) * v * p(r + 1, c) + u * v * p(r + 1, c + 1);
  }
  std::uniform_int_distribution<int> seg(0, layout.num_particles - 2);
  const int i = seg(rng);
  const double u = unit(rng);
  return (1 - u) * particles.col(i) + u * particles.col(i + 1);
}

}  // namespace

KeypointMode ParseKeypointMode(std::string_view name) {
  if (name == "semantic") return KeypointMode::kSemantic;
  if (name == "diffuse") return KeypointMode::kDiffuse;
  throw ConfigError("unknown keypoint mode '" + std::string(name) + "'");
}

std::string_view KeypointModeName(KeypointMode mode) {
  return mode == KeypointMode::kSemantic ? "semantic" : "diffuse";
}

ObjectLayout ObjectLayout::For(Scenario scenario, const SimConfig& config) {
  ObjectLayout layout;
  if (scenario == Scenario::kWind) {
    layout.topology = Topology::kChain;
    layout.num_particles = config.rope_particles;
  } else {
    layout.topology = Topology::kGrid;
    layout.grid_size = config.cloth_resolution;
    layout.num_particles = config.cloth_resolution * config.cloth_resolution;
  }
  return layout;
}

void ObservationNoise::Validate() const {
  if (!(gaussian_std >= 0) || !std::isfinite(gaussian_std)) {
    throw ConfigError("gaussian_std must be finite and >= 0");
  }
  auto prob = [](double p, const char* name) {
    if (!(p >= 0 && p <= 1)) {
      throw ConfigError(std::string(name) + " must lie in [0, 1]");
    }
  };
  prob(relocation_prob, "relocation_prob");
  prob(dropout_resample_prob, "dropout_resample_prob");
}

ObservationNoise NoiseProfile(std::string_view name, Scenario scenario,
                              const SimConfig& config) {
  const double diameter = TemplateDiameter(scenario, config);
  ObservationNoise noise;
  if (name == "none") return noise;
  if (name == "supervised") {
    noise.gaussian_std = 0.01 * diameter;
    noise.relocation_prob = 0.02;
    noise.permute = true;
    return noise;
  }
  if (name == "unsupervised") {
    noise.gaussian_std = 0.02 * diameter;
    noise.relocation_prob = 0.1;
    noise.permute = true;
    return noise;
  }
  throw ConfigError("unknown noise profile '" + std::string(name) + "'");
}

ObservationNoise NoiseFromJson(const nlohmann::json& j, Scenario scenario,
                               const SimConfig& config) {
  if (j.is_string()) {
    return NoiseProfile(j.get<std::string>(), scenario, config);
  }
  ObservationNoise noise;
  if (j.contains("profile")) {
    noise = NoiseProfile(j["profile"].get<std::string>(), scenario, config);
  }
  noise.gaussian_std = j.value("gaussian_std", noise.gaussian_std);
  noise.permute = j.value("permute", noise.permute);
  noise.relocation_prob = j.value("relocation_prob", noise.relocation_prob);
  noise.dropout_resample_prob =
      j.value("dropout_resample_prob", noise.dropout_resample_prob);
  noise.seed = j.value("seed", noise.seed);
  noise.Validate();
  return noise;
}

nlohmann::json ToJson(const ObservationNoise& noise) {
  return {{"gaussian_std", noise.gaussian_std},
          {"permute", noise.permute},
          {"relocation_prob", noise.relocation_prob},
          {"dropout_resample_prob", noise.dropout_resample_prob},
          {"seed", noise.seed}};
}

std::vector<int> SemanticKeypointIndices(const ObjectLayout& layout, int k) {
  if (k < 1 || k > layout.num_particles) {
    throw ConfigError("keypoint count " + std::to_string(k) +
                      " must lie in [1, " +
                      std::to_string(layout.num_particles) + "]");
  }
  std::vector<int> indices(k);
  if (layout.topology == Topology::kChain) {
    const int n = layout.num_particles;
    for (int j = 0; j < k; ++j) {
      indices[j] = k == 1 ? n / 2
                          : static_cast<int>(std::lround(
                                static_cast<double>(j) * (n - 1) / (k - 1)));
    }
    return indices;
  }
  const int g = layout.grid_size;
  const int perimeter = 4 * (g - 1);
  if (k > perimeter) {
    for (int j = 0; j < k; ++j) {
      indices[j] = static_cast<int>(
          std::lround(static_cast<double>(j) * layout.num_particles / k));
    }
    return indices;
  }
  // walk the boundary counter-clockwise from the bottom-left corner
  std::vector<int> loop;
  loop.reserve(perimeter);
  for (int c = 0; c < g - 1; ++c) loop.push_back(c);
  for (int r = 0; r < g - 1; ++r) loop.push_back(r * g + (g - 1));
  for (int c = g - 1; c > 0; --c) loop.push_back((g - 1) * g + c);
  for (int r = g - 1; r > 0; --r) loop.push_back(r * g);
  for (int j = 0; j < k; ++j) {
    const int pos = static_cast<int>(
        std::lround(static_cast<double>(j) * perimeter / k)) % perimeter;
    indices[j] = loop[pos];
  }
  return indices;
}

Points2 ExtractKeypoints(const Points2& particles, const ObjectLayout& layout,
                         KeypointMode mode, int k,
                         const ObservationNoise& noise, Rng& frame_rng) {
  const int n = static_cast<int>(particles.cols());
  if (k < 1 || k > n) {
    throw ConfigError("keypoint count " + std::to_string(k) +
                      " exceeds particle count " + std::to_string(n));
  }
  std::vector<int> indices;
  if (mode == KeypointMode::kSemantic) {
    indices = SemanticKeypointIndices(layout, k);
  } else {
    // k distinct particles, uniformly
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int j = 0; j < k; ++j) {
      std::uniform_int_distribution<int> pick(j, n - 1);
      std::swap(all[j], all[pick(frame_rng)]);
    }
    indices.assign(all.begin(), all.begin() + k);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_particle(0, n - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Points2 keypoints(2, k);
  for (int j = 0; j < k; ++j) {
    Vec2 p = particles.col(indices[j]);
    if (noise.relocation_prob > 0 && unit(frame_rng) < noise.relocation_prob) {
      p = particles.col(any_particle(frame_rng));
    }
    if (noise.dropout_resample_prob > 0 &&
        unit(frame_rng) < noise.dropout_resample_prob) {
      p = SurfaceSample(particles, layout, frame_rng);
    }
    if (noise.gaussian_std > 0) {
      p.x() += noise.gaussian_std * gauss(frame_rng);
      p.y() += noise.gaussian_std * gauss(frame_rng);
    }
    keypoints.col(j) = p;
  }
  if (noise.permute) {
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), frame_rng);
    Points2 shuffled(2, k);
    for (int j = 0; j < k; ++j) shuffled.col(j) = keypoints.col(order[j]);
    keypoints = std::move(shuffled);
  }
  return keypoints;
}

Eigen::VectorXd AssembleState(const Vec2& gripper_pose,
                              const Points2& keypoints) {
  const int k = static_cast<int>(keypoints.cols());
  Eigen::VectorXd state(2 + 2 * k);
  state.head<2>() = gripper_pose;
  state.tail(2 * k) = Eigen::Map<const Eigen::VectorXd>(keypoints.data(), 2 * k);
  return state;
}

StateVector DisassembleState(const Eigen::VectorXd& state) {
  if (state.size() < 2 || state.size() % 2 != 0) {
    throw ArgumentError("state vector length must be 2 + 2K");
  }
  StateVector out;
  out.gripper_pose = state.head<2>();
  const int k = static_cast<int>(state.size() / 2 - 1);
  out.keypoints = Eigen::Map<const Points2>(state.data() + 2, 2, k);
  return out;
}

Points2 GroundTruthPoints(const Points2& particles) { return particles; }

ObservedTrajectory Observe(const Trajectory& trajectory,
                           const ObjectLayout& layout, KeypointMode mode,
                           int k, const ObservationNoise& noise) {
  noise.Validate();
  ObservedTrajectory out;
  out.gripper_pose = trajectory.gripper_pose;
  out.actions = trajectory.actions;
  out.diverged = trajectory.diverged;
  out.keypoints.reserve(trajectory.steps());
  for (int t = 0; t < trajectory.steps(); ++t) {
    Rng frame_rng(DeriveSeed(noise.seed, static_cast<uint64_t>(t)));
    out.keypoints.push_back(ExtractKeypoints(trajectory.particles[t], layout,
                                             mode, k, noise, frame_rng));
  }
  return out;
}

void WriteObservationJsonl(const ObservedTrajectory& observed,
                           std::ostream& out) {
  for (int t = 0; t < observed.steps(); ++t) {
    nlohmann::json keypoints = nlohmann::json::array();
    const Points2& k = observed.keypoints[t];
    for (int i = 0; i < k.cols(); ++i) keypoints.push_back({k(0, i), k(1, i)});
    nlohmann::json line = {
        {"t", t},
        {"gripper_pose",
         {observed.gripper_pose[t].x(), observed.gripper_pose[t].y()}},
        {"keypoints", std::move(keypoints)}};
    out << line.dump() << '\n';
  }
}

}  // namespace dsbi
