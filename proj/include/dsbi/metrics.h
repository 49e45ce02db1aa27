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

#ifndef DSBI_METRICS_H_
#define DSBI_METRICS_H_

#include <vector>

#include "dsbi/common.h"
#include "dsbi/mixture.h"
#include "dsbi/params.h"
#include "dsbi/sim.h"

namespace dsbi {

// mean nearest-neighbor distance from a to b plus from b to a (brute force);
// throws ArgumentError on an empty set
double Chamfer(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct EvalSpec {
  Scenario scenario = Scenario::kWipe;
  SimConfig sim;
  int steps = 200;
  PriorBox prior = PriorBox::Default();
};

struct EvalResult {
  double mean = 0;
  double std = 0;  // population standard deviation over samples
  std::vector<double> distances;
  int diverged = 0;
};

// Draws n parameters from the posterior truncated to the prior box, rolls
// each out with the reference motion and scores the time-averaged Chamfer
// distance between full particle sets against the rollout at `truth`.
// Diverged rollouts score the workspace bound.
EvalResult EvaluatePosterior(const MixturePosterior& posterior,
                             const EvalSpec& spec, const SimParams& truth,
                             int n, uint64_t seed);

// time-averaged Chamfer distance between two rollouts of equal length
double TrajectoryDistance(const Trajectory& reference,
                          const Trajectory& sample);

}  // namespace dsbi

#endif  // DSBI_METRICS_H_
