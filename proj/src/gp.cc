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

#include "dsbi/gp.h"

#include <cmath>
#include <numbers>

#include "dsbi/rkhs.h"

namespace dsbi {
namespace {

constexpr double kInitialJitter = 1e-6;
constexpr double kMaxJitter = 1e-3;

}  // namespace

double RbfKernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const GpHyper& hyper) {
  const double r2 = (a - b).squaredNorm();
  return hyper.signal_variance *
         std::exp(-0.5 * r2 / (hyper.lengthscale * hyper.lengthscale));
}

GpModel GpFitFixed(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                   const GpHyper& hyper) {
  const int n = static_cast<int>(inputs.cols());
  if (n < 1 || targets.size() != n) {
    throw ArgumentError("GP needs matching, non-empty inputs and targets");
  }
  if (!(hyper.lengthscale > 0 && hyper.signal_variance > 0 &&
        hyper.noise_variance >= 0)) {
    throw ArgumentError("invalid GP hyperparameters");
  }
  GpModel model;
  model.inputs = inputs;
  model.targets = targets;
  model.hyper = hyper;
  model.mean = targets.mean();

  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = RbfKernel(inputs.col(i), inputs.col(j), hyper);
    }
  }
  for (double jitter = kInitialJitter; jitter <= kMaxJitter * 1.0001;
       jitter *= 10) {
    Eigen::MatrixXd k = gram;
    k.diagonal().array() += hyper.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) continue;
    model.chol = llt.matrixL();
    if (!model.chol.allFinite()) continue;
    const Eigen::VectorXd centered = targets.array() - model.mean;
    model.alpha = llt.solve(centered);
    model.jitter = jitter;
    model.log_marginal_likelihood =
        -0.5 * centered.dot(model.alpha) -
        model.chol.diagonal().array().log().sum() -
        0.5 * n * std::log(2.0 * std::numbers::pi);
    return model;
  }
  throw NumericalError("GP Gram matrix is not positive definite even with "
                       "jitter 1e-3");
}

std::vector<GpHyper> DefaultHyperGrid(const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& targets) {
  const double distance = MedianPairwiseDistance(inputs);
  double variance = (targets.array() - targets.mean()).square().mean();
  if (!(variance > 0)) variance = 1.0;
  std::vector<GpHyper> grid;
  for (double l : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    for (double s : {0.5, 1.0, 2.0}) {
      for (double e : {1e-4, 1e-2, 1e-1}) {
        grid.push_back({.lengthscale = l * distance,
                        .signal_variance = s * variance,
                        .noise_variance = e * variance});
      }
    }
  }
  return grid;
}

GpModel GpFit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
              const std::vector<GpHyper>& grid) {
  if (inputs.cols() < 2) throw ArgumentError("GP fit needs >= 2 points");
  if (grid.empty()) throw ArgumentError("empty GP hyperparameter grid");
  GpModel best;
  bool found = false;
  for (const GpHyper& hyper : grid) {
    GpModel model;
    try {
      model = GpFitFixed(inputs, targets, hyper);
    } catch (const NumericalError&) {
      continue;
    }
    if (!found || model.log_marginal_likelihood > best.log_marginal_likelihood) {
      best = std::move(model);
      found = true;
    }
  }
  if (!found) throw NumericalError("no GP hyperparameter setting factored");
  return best;
}

GpPrediction GpPredict(const GpModel& model, const Eigen::VectorXd& x) {
  const int n = model.size();
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) {
    k_star[i] = RbfKernel(model.inputs.col(i), x, model.hyper);
  }
  const Eigen::VectorXd v =
      model.chol.triangularView<Eigen::Lower>().solve(k_star);
  GpPrediction out;
  out.mean = model.mean + k_star.dot(model.alpha);
  out.variance = std::max(0.0, model.hyper.signal_variance - v.squaredNorm());
  return out;
}

}  // namespace dsbi
