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

#ifndef DSBI_RKHS_H_
#define DSBI_RKHS_H_

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/common.h"

namespace dsbi {

// Random Fourier feature basis for the RBF kernel
//   k(x, x') = exp(-|x - x'|^2 / (2 sigma^2)).
// Row m of `frequencies` is a standard normal draw; the applied frequency is
// frequencies.row(m) / sigma.
struct RffBasis {
  Eigen::MatrixXd frequencies;  // M x d
  double sigma = 1.0;
  bool trainable = false;
  uint64_t seed = 0;

  int num_frequencies() const { return static_cast<int>(frequencies.rows()); }
  int dim() const { return static_cast<int>(frequencies.cols()); }
  // 2M
  int feature_dim() const { return 2 * num_frequencies(); }
};

RffBasis SampleBasis(int num_frequencies, int dim, double sigma,
                     uint64_t seed, bool trainable = false);

// (1/sqrt(M)) [cos(w_1.x/sigma), sin(w_1.x/sigma), ..., sin(w_M.x/sigma)]
Eigen::VectorXd RffMap(const Eigen::VectorXd& x, const RffBasis& basis);

// empirical mean embedding of a point set (one point per column), summed in
// column order; throws ArgumentError on an empty set
Eigen::VectorXd MeanEmbed(const Eigen::MatrixXd& points, const RffBasis& basis);

// |MeanEmbed(a) - MeanEmbed(b)|
double Mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
           const RffBasis& basis);

// full Jacobians of MeanEmbed
struct EmbedJacobian {
  Eigen::MatrixXd d_frequencies;  // 2M x (M*d), column m*d + j
  Eigen::VectorXd d_sigma;        // 2M
  Eigen::MatrixXd d_points;       // 2M x (K*d), column k*d + j
};

EmbedJacobian EmbedGradients(const Eigen::MatrixXd& points,
                             const RffBasis& basis);

// gradient of upstream . MeanEmbed(points) with respect to the basis, added
// into d_frequencies (M x d) and d_sigma
void MeanEmbedBackward(const Eigen::MatrixXd& points, const RffBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& upstream,
                       Eigen::MatrixXd& d_frequencies, double& d_sigma);

// median heuristic over all point pairs; 1 if every distance is zero
double MedianPairwiseDistance(const Eigen::MatrixXd& points);

// {M, d, sigma, frequencies (row-major), seed}
nlohmann::json ToJson(const RffBasis& basis);
RffBasis RffBasisFromJson(const nlohmann::json& j);

}  // namespace dsbi

#endif  // DSBI_RKHS_H_
