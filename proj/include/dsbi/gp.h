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

#ifndef DSBI_GP_H_
#define DSBI_GP_H_

#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include "dsbi/common.h"

namespace dsbi {

struct GpHyper {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;
};

// exact GP regression with an RBF kernel and a constant mean equal to the
// training-target mean
struct GpModel {
  Eigen::MatrixXd inputs;  // d x n
  Eigen::VectorXd targets;
  GpHyper hyper;
  double mean = 0;
  double jitter = 0;  // diagonal jitter that made the Gram matrix factor
  Eigen::MatrixXd chol;  // lower factor of K + (noise + jitter) I
  Eigen::VectorXd alpha;
  double log_marginal_likelihood = 0;

  int size() const { return static_cast<int>(targets.size()); }
};

struct GpPrediction {
  double mean = 0;
  double variance = 0;
};

double RbfKernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const GpHyper& hyper);

// factors the Gram matrix with jitter 1e-6, escalating tenfold up to 1e-3;
// throws NumericalError if it still fails
GpModel GpFitFixed(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                   const GpHyper& hyper);

// lengthscale {0.1, 0.3, 1, 3, 10} x median input distance, signal
// {0.5, 1, 2} x var(y), noise {1e-4, 1e-2, 1e-1} x var(y)
std::vector<GpHyper> DefaultHyperGrid(const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& targets);

// picks the grid entry with the largest log marginal likelihood; needs at
// least two training points
GpModel GpFit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
              const std::vector<GpHyper>& grid);

GpPrediction GpPredict(const GpModel& model, const Eigen::VectorXd& x);

}  // namespace dsbi

#endif  // DSBI_GP_H_
