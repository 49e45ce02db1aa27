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

#ifndef DSBI_CORRECTION_H_
#define DSBI_CORRECTION_H_

#include <variant>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/mixture.h"
#include "dsbi/params.h"

namespace dsbi {

// Densities of every proposal are truncated to the prior box and
// renormalized; `box_mass` is the in-box probability of the untruncated
// distribution.
struct UniformProposal {};

struct MixtureProposal {
  MixturePosterior mixture;
  double box_mass = 1.0;
};

struct GaussianProposal {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  double box_mass = 1.0;
};

using ProposalPart =
    std::variant<UniformProposal, MixtureProposal, GaussianProposal>;

// budget-weighted mixture of the proposals data was drawn from
struct PooledProposal {
  std::vector<double> weights;
  std::vector<ProposalPart> parts;
};

using Proposal = std::variant<UniformProposal, MixtureProposal,
                              GaussianProposal, PooledProposal>;

// Monte Carlo estimate of the in-box mass of a mixture from `samples` draws
double EstimateBoxMass(const MixturePosterior& mixture, const PriorBox& box,
                       int samples, uint64_t seed);
MixtureProposal MakeMixtureProposal(MixturePosterior mixture,
                                    const PriorBox& box, uint64_t seed,
                                    int samples = 20000);
GaussianProposal MakeGaussianProposal(Eigen::VectorXd mean,
                                      Eigen::VectorXd stddev,
                                      const PriorBox& box, uint64_t seed,
                                      int samples = 20000);

// log of the truncated density; -inf outside the box
double ProposalLogDensity(const Proposal& proposal, const PriorBox& box,
                          const Eigen::VectorXd& theta);

// n draws restricted to the box by rejection, one per column; throws
// DegeneratePosteriorError if the acceptance rate is too small to finish
Eigen::MatrixXd SampleProposal(const Proposal& proposal, const PriorBox& box,
                               int n, Rng& rng);

// indices of n equally weighted draws; weights must sum to 1
std::vector<int> SystematicResample(const Eigen::VectorXd& weights, int n,
                                    Rng& rng);

struct CorrectionResult {
  Eigen::MatrixXd raw_samples;  // draws from q
  Eigen::VectorXd weights;      // self-normalized p / p~
  Eigen::MatrixXd samples;      // resampled, equally weighted
  MixturePosterior fit;
  double effective_sample_size = 0;
};

// Reweights n draws of q by prior / proposal (zero outside the box),
// resamples systematically and refits a `components`-component mixture by EM.
// Throws DegeneratePosteriorError if every weight is zero.
CorrectionResult CorrectPosterior(const MixturePosterior& q,
                                  const PriorBox& box,
                                  const Proposal& proposal, int n,
                                  int components, uint64_t seed);

nlohmann::json ToJson(const Proposal& proposal);

}  // namespace dsbi

#endif  // DSBI_CORRECTION_H_
