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

#include "dsbi/metrics.h"

#include <cmath>
#include <limits>

#include "dsbi/correction.h"
#include "dsbi/observation.h"

namespace dsbi {
namespace {

double DirectedMean(const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) {
  double total = 0;
  for (Eigen::Index i = 0; i < from.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < to.cols(); ++j) {
      best = std::min(best, (from.col(i) - to.col(j)).squaredNorm());
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.cols());
}

}  // namespace

double Chamfer(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 || b.cols() == 0) {
    throw ArgumentError("chamfer distance of an empty point set");
  }
  if (a.rows() != b.rows()) throw ArgumentError("point dimension mismatch");
  return DirectedMean(a, b) + DirectedMean(b, a);
}

double TrajectoryDistance(const Trajectory& reference,
                          const Trajectory& sample) {
  if (reference.steps() != sample.steps() || reference.steps() == 0) {
    throw ArgumentError("trajectories differ in length");
  }
  double total = 0;
  for (int t = 0; t < reference.steps(); ++t) {
    total += Chamfer(GroundTruthPoints(reference.particles[t]),
                     GroundTruthPoints(sample.particles[t]));
  }
  return total / reference.steps();
}

EvalResult EvaluatePosterior(const MixturePosterior& posterior,
                             const EvalSpec& spec, const SimParams& truth,
                             int n, uint64_t seed) {
  if (n < 1) throw ArgumentError("evaluation needs n >= 1");
  SimConfig sim = spec.sim;
  const Trajectory reference =
      RolloutFlagged(spec.scenario, truth, spec.steps, sim);

  Rng rng(DeriveSeed(seed, 1));
  const Eigen::MatrixXd thetas =
      SampleProposal(MixtureProposal{posterior, 1.0}, spec.prior, n, rng);

  EvalResult result;
  for (int i = 0; i < n; ++i) {
    const SimParams params = SimParams::FromVector(thetas.col(i));
    const Trajectory sample =
        RolloutFlagged(spec.scenario, params, spec.steps, sim);
    double d;
    if (sample.diverged) {
      ++result.diverged;
      d = WorkspaceBound(spec.scenario, sim, params.scale);
    } else {
      d = TrajectoryDistance(reference, sample);
    }
    result.distances.push_back(d);
  }
  double sum = 0;
  for (double d : result.distances) sum += d;
  result.mean = sum / n;
  double sq = 0;
  for (double d : result.distances) sq += (d - result.mean) * (d - result.mean);
  result.std = std::sqrt(sq / n);
  return result;
}

}  // namespace dsbi
