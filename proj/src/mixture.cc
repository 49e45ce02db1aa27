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

#include "dsbi/mixture.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace dsbi {
namespace {

double LogSumExp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

Eigen::MatrixXd CholeskyOf(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

Eigen::MatrixXd MixturePosterior::Covariance(int c) const {
  return chol[c] * chol[c].transpose();
}

Eigen::VectorXd MixturePosterior::Mean() const {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim());
  for (int c = 0; c < size(); ++c) mean += weights[c] * means[c];
  return mean;
}

Eigen::MatrixXd MixturePosterior::TotalCovariance() const {
  const Eigen::VectorXd mean = Mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim(), dim());
  for (int c = 0; c < size(); ++c) {
    const Eigen::VectorXd d = means[c] - mean;
    cov += weights[c] * (Covariance(c) + d * d.transpose());
  }
  return cov;
}

void MixturePosterior::Validate() const {
  const int c_count = size();
  if (c_count == 0) throw ArgumentError("mixture has no components");
  if (static_cast<int>(means.size()) != c_count ||
      static_cast<int>(chol.size()) != c_count) {
    throw ArgumentError("mixture arrays disagree on component count");
  }
  if ((weights.array() < 0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw ArgumentError("mixture weights must lie on the simplex");
  }
  const int d = dim();
  for (int c = 0; c < c_count; ++c) {
    if (means[c].size() != d || chol[c].rows() != d || chol[c].cols() != d) {
      throw ArgumentError("mixture component has the wrong dimension");
    }
    for (int r = 0; r < d; ++r) {
      if (!(chol[c](r, r) > 0)) {
        throw ArgumentError("scale factor diagonal must be positive");
      }
      for (int k = r + 1; k < d; ++k) {
        if (chol[c](r, k) != 0) {
          throw ArgumentError("scale factor must be lower triangular");
        }
      }
    }
  }
}

double GaussianLogDensity(const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& chol,
                          const Eigen::VectorXd& theta) {
  const int d = static_cast<int>(mean.size());
  const Eigen::VectorXd z =
      chol.triangularView<Eigen::Lower>().solve(theta - mean);
  return -0.5 * d * std::log(2.0 * std::numbers::pi) -
         chol.diagonal().array().log().sum() - 0.5 * z.squaredNorm();
}

double MixtureLogDensity(const MixturePosterior& mixture,
                         const Eigen::VectorXd& theta) {
  if (theta.size() != mixture.dim()) {
    throw ArgumentError("theta dimension does not match the mixture");
  }
  Eigen::VectorXd terms(mixture.size());
  for (int c = 0; c < mixture.size(); ++c) {
    terms[c] = mixture.weights[c] > 0
                   ? std::log(mixture.weights[c]) +
                         GaussianLogDensity(mixture.means[c], mixture.chol[c],
                                            theta)
                   : -std::numeric_limits<double>::infinity();
  }
  return LogSumExp(terms);
}

double MixtureNll(const MixturePosterior& mixture,
                  const Eigen::VectorXd& theta) {
  return -MixtureLogDensity(mixture, theta);
}

Eigen::MatrixXd MixtureSample(const MixturePosterior& mixture, int n,
                              Rng& rng) {
  if (n < 1) throw ArgumentError("sample count must be >= 1");
  std::discrete_distribution<int> pick(mixture.weights.data(),
                                       mixture.weights.data() + mixture.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = mixture.dim();
  Eigen::MatrixXd out(d, n);
  Eigen::VectorXd eps(d);
  for (int i = 0; i < n; ++i) {
    const int c = pick(rng);
    for (int k = 0; k < d; ++k) eps[k] = normal(rng);
    out.col(i) = mixture.means[c] +
                 mixture.chol[c].triangularView<Eigen::Lower>() * eps;
  }
  return out;
}

MixturePosterior TransformAffine(const MixturePosterior& mixture,
                                 const Eigen::VectorXd& offset,
                                 const Eigen::VectorXd& scale) {
  MixturePosterior out = mixture;
  for (int c = 0; c < mixture.size(); ++c) {
    out.means[c] = offset + scale.cwiseProduct(mixture.means[c]);
    // diag(s) L stays lower triangular with positive diagonal when s > 0
    out.chol[c] = scale.asDiagonal() * mixture.chol[c];
  }
  return out;
}

MixturePosterior DiagonalGaussian(const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& stddev) {
  MixturePosterior g;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = {mean};
  g.chol = {Eigen::MatrixXd(stddev.asDiagonal())};
  return g;
}

MixturePosterior FitMixtureEm(const Eigen::MatrixXd& samples, int components,
                              uint64_t seed, const EmOptions& options) {
  const int d = static_cast<int>(samples.rows());
  const int n = static_cast<int>(samples.cols());
  if (components < 1) throw ArgumentError("need at least one component");
  if (n < components) {
    throw ArgumentError("fewer samples than mixture components");
  }
  Rng rng(seed);

  const Eigen::VectorXd data_mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - data_mean;
  const Eigen::MatrixXd data_cov = centered * centered.transpose() / n;
  Eigen::VectorXd floor = options.covariance_floor * data_cov.diagonal();
  for (int k = 0; k < d; ++k) floor[k] = std::max(floor[k], 1e-12);

  // k-means++ seeding
  std::vector<int> centers;
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.push_back(first(rng));
  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(
      n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < components) {
    const auto last = samples.col(centers.back());
    for (int i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (samples.col(i) - last).squaredNorm());
    }
    if (nearest.sum() <= 0) {
      centers.push_back(first(rng));
      continue;
    }
    std::discrete_distribution<int> pick(nearest.data(), nearest.data() + n);
    centers.push_back(pick(rng));
  }

  MixturePosterior mix;
  mix.weights = Eigen::VectorXd::Constant(components, 1.0 / components);
  const Eigen::MatrixXd init_cov =
      Eigen::MatrixXd(data_cov.diagonal().asDiagonal()) / components +
      Eigen::MatrixXd(floor.asDiagonal());
  for (int c = 0; c < components; ++c) {
    mix.means.push_back(samples.col(centers[c]));
    mix.chol.push_back(CholeskyOf(init_cov));
  }

  Eigen::MatrixXd log_resp(components, n);
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // E step
    double total = 0;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < components; ++c) {
        log_resp(c, i) =
            mix.weights[c] > 0
                ? std::log(mix.weights[c]) +
                      GaussianLogDensity(mix.means[c], mix.chol[c], samples.col(i))
                : -std::numeric_limits<double>::infinity();
      }
      const double lse = LogSumExp(log_resp.col(i));
      log_resp.col(i).array() -= lse;
      total += lse;
    }
    const Eigen::MatrixXd resp = log_resp.array().exp();

    // M step
    for (int c = 0; c < components; ++c) {
      const double nk = resp.row(c).sum();
      if (nk < 1e-10) {
        mix.weights[c] = 0.0;
        continue;
      }
      mix.weights[c] = nk / n;
      mix.means[c] = samples * resp.row(c).transpose() / nk;
      const Eigen::MatrixXd diff = samples.colwise() - mix.means[c];
      Eigen::MatrixXd cov =
          diff * resp.row(c).transpose().asDiagonal() * diff.transpose() / nk;
      cov.diagonal() += floor;
      mix.chol[c] = CholeskyOf(cov);
    }
    mix.weights /= mix.weights.sum();

    const double mean_ll = total / n;
    if (std::abs(mean_ll - previous) < options.tolerance) break;
    previous = mean_ll;
  }
  return mix;
}

nlohmann::json ToJson(const MixturePosterior& mixture) {
  nlohmann::json means = nlohmann::json::array();
  nlohmann::json covs = nlohmann::json::array();
  for (int c = 0; c < mixture.size(); ++c) {
    means.push_back(std::vector<double>(
        mixture.means[c].data(), mixture.means[c].data() + mixture.dim()));
    const Eigen::MatrixXd cov = mixture.Covariance(c);
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < cov.rows(); ++r) {
      std::vector<double> row(cov.cols());
      for (int k = 0; k < cov.cols(); ++k) row[k] = cov(r, k);
      rows.push_back(row);
    }
    covs.push_back(rows);
  }
  return {{"weights", std::vector<double>(mixture.weights.data(),
                                          mixture.weights.data() + mixture.size())},
          {"means", means},
          {"covariances", covs}};
}

MixturePosterior MixtureFromJson(const nlohmann::json& j) {
  MixturePosterior mix;
  auto w = j.at("weights").get<std::vector<double>>();
  mix.weights = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  for (const auto& m : j.at("means")) {
    auto v = m.get<std::vector<double>>();
    mix.means.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), v.size()));
  }
  for (const auto& cov_json : j.at("covariances")) {
    auto rows = cov_json.get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd cov(rows.size(), rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.size()) {
        throw ConfigError("covariance must be square");
      }
      for (size_t k = 0; k < rows.size(); ++k) cov(r, k) = rows[r][k];
    }
    mix.chol.push_back(CholeskyOf(cov));
  }
  mix.Validate();
  return mix;
}

}  // namespace dsbi
