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

#ifndef DSBI_MIXTURE_H_
#define DSBI_MIXTURE_H_

#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/common.h"

namespace dsbi {

// Gaussian mixture with full covariances Sigma_c = L_c L_c^T
struct MixturePosterior {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> chol;  // lower triangular, positive diagonal

  int size() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
  Eigen::MatrixXd Covariance(int c) const;
  // mixture moments
  Eigen::VectorXd Mean() const;
  Eigen::MatrixXd TotalCovariance() const;
  // throws ArgumentError unless weights lie on the simplex (1e-9) and every
  // factor is lower triangular with a positive diagonal
  void Validate() const;
};

// log N(theta; mean, L L^T)
double GaussianLogDensity(const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& chol,
                          const Eigen::VectorXd& theta);

double MixtureLogDensity(const MixturePosterior& mixture,
                         const Eigen::VectorXd& theta);

// -log sum_c alpha_c N(theta; mu_c, Sigma_c), via log-sum-exp
double MixtureNll(const MixturePosterior& mixture,
                  const Eigen::VectorXd& theta);

// ancestral sampling; one draw per column
Eigen::MatrixXd MixtureSample(const MixturePosterior& mixture, int n, Rng& rng);

// the mixture of offset + scale .* theta
MixturePosterior TransformAffine(const MixturePosterior& mixture,
                                 const Eigen::VectorXd& offset,
                                 const Eigen::VectorXd& scale);

// single Gaussian with diagonal covariance
MixturePosterior DiagonalGaussian(const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& stddev);

struct EmOptions {
  int max_iterations = 200;
  double tolerance = 1e-7;  // on mean log-likelihood
  // added to covariance diagonals, relative to the per-dimension data variance
  double covariance_floor = 1e-6;
};

// maximum-likelihood fit of a `components`-component mixture to the columns of
// `samples`; k-means++ seeding from `seed`
MixturePosterior FitMixtureEm(const Eigen::MatrixXd& samples, int components,
                              uint64_t seed, const EmOptions& options = {});

// {weights, means, covariances}
nlohmann::json ToJson(const MixturePosterior& mixture);
MixturePosterior MixtureFromJson(const nlohmann::json& j);

}  // namespace dsbi

#endif  // DSBI_MIXTURE_H_
