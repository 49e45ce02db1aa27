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

#ifndef DSBI_INFERENCE_H_
#define DSBI_INFERENCE_H_

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/correction.h"
#include "dsbi/mdn.h"
#include "dsbi/mixture.h"
#include "dsbi/observation.h"
#include "dsbi/params.h"
#include "dsbi/rkhs.h"
#include "dsbi/sim.h"

namespace dsbi {

enum class Method {
  kBayesSimMdnn,
  kBayesSimMdrff,
  kBayesSimRkhs,
  kBayesZoomRkhs,
  kNnBulk,
  kGpBulk,
};

inline constexpr std::array<Method, 6> kAllMethods = {
    Method::kBayesSimMdnn, Method::kBayesSimMdrff, Method::kBayesSimRkhs,
    Method::kBayesZoomRkhs, Method::kNnBulk,       Method::kGpBulk};

// "bayessim-mdnn", "bayessim-mdrff", "bayessim-rkhs", "bayeszoom-rkhs",
// "nn-bulk", "gp-bulk"
Method ParseMethod(std::string_view name);
std::string_view MethodName(Method method);
bool IsBulk(Method method);

struct InferenceConfig {
  Scenario scenario = Scenario::kWipe;
  SimConfig sim;
  int steps = 200;
  PriorBox prior = PriorBox::Default();
  KeypointMode keypoint_mode = KeypointMode::kSemantic;
  int keypoints = 4;
  // observation model of the sequential methods and of the real trajectory
  ObservationNoise noise;
  // observation model of the bulk baselines
  ObservationNoise bulk_noise;
  int rounds = 15;
  int budget = 100;        // trajectories per round
  int bulk_budget = 1500;  // trajectories of a bulk method
  int frames = 10;         // embedded frames per trajectory
  int rff_features = 128;  // M
  NetworkConfig network;
  TrainConfig train;
  int correction_samples = 10000;
  int workers = 1;  // rollout threads

  void Validate() const;
  // unsupervised noise for the sequential methods, supervised for the bulk
  // baselines
  static InferenceConfig ForScenario(Scenario scenario);
};

// Scenario-dependent fields are resolved after "scenario" is read; the noise
// fields accept profile names.
InferenceConfig InferenceConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const InferenceConfig& config);

// affine map of the prior box onto [-1, 1]^D
struct ParamNormalizer {
  PriorBox box;

  Eigen::VectorXd Normalize(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd Denormalize(const Eigen::VectorXd& z) const;
  MixturePosterior ToPhysical(const MixturePosterior& normalized) const;
  static PriorBox UnitBox(int dim);
};

// rollout at `params` observed through `noise`; the simulator and noise
// streams derive from `seed`
ObservedTrajectory SimulateObservation(const InferenceConfig& config,
                                       const SimParams& params,
                                       const ObservationNoise& noise,
                                       uint64_t seed);
// observes an existing trajectory with a noise stream derived from `seed`
ObservedTrajectory ObserveWith(const InferenceConfig& config,
                               const Trajectory& trajectory,
                               const ObservationNoise& noise, uint64_t seed);

struct RoundState {
  int round = 0;  // rounds completed
  Dataset data;   // targets in normalized coordinates
  int diverged = 0;
  // proposals the accumulated data was drawn from, weighted by budget
  PooledProposal history;
  // proposal of the next round, normalized coordinates
  Proposal proposal = UniformProposal{};
  std::optional<RffBasis> mdrff_basis;
};

struct RoundResult {
  int round = 0;  // 1-based
  Method method = Method::kBayesSimRkhs;
  int budget = 0;
  int dataset_size = 0;
  int diverged = 0;
  MixturePosterior posterior;  // physical units
  TrainMetrics metrics;
  bool degenerate = false;  // correction failed; posterior fell back to prior
  double effective_sample_size = 0;
  double wall_time_s = 0;
};

// one sequential round: sample `budget` parameters from the current proposal,
// simulate, featurize, retrain from scratch on all data, evaluate at `real`
// and correct for the proposal
RoundResult RunRound(RoundState& state, Method method,
                     const InferenceConfig& config,
                     const ObservedTrajectory& real, int budget,
                     uint64_t seed);

// `config.rounds` rounds; `on_round` sees each result as it completes
std::vector<RoundResult> RunSequential(
    Method method, const InferenceConfig& config,
    const ObservedTrajectory& real, uint64_t seed,
    const std::function<void(const RoundResult&)>& on_round = {});

// single-shot fit on `budget` uniform-prior trajectories observed with
// config.bulk_noise; `real` must be observed the same way
RoundResult RunBulk(Method method, const InferenceConfig& config,
                    const ObservedTrajectory& real, int budget, uint64_t seed);

// {round, method, budget, dataset_size, train_nll, val_nll, posterior,
//  wall_time_s, ...}
nlohmann::json RoundLogEntry(const RoundResult& result);

}  // namespace dsbi

#endif  // DSBI_INFERENCE_H_
