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

#include "dsbi/rkhs.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace dsbi {

RffBasis SampleBasis(int num_frequencies, int dim, double sigma,
                     uint64_t seed, bool trainable) {
  if (num_frequencies < 1 || dim < 1) {
    throw ArgumentError("basis needs M >= 1 and d >= 1");
  }
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    throw ArgumentError("bandwidth must be positive");
  }
  RffBasis basis;
  basis.frequencies.resize(num_frequencies, dim);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // row-major fill keeps a row's draws contiguous in the stream
  for (int m = 0; m < num_frequencies; ++m) {
    for (int j = 0; j < dim; ++j) basis.frequencies(m, j) = normal(rng);
  }
  basis.sigma = sigma;
  basis.trainable = trainable;
  basis.seed = seed;
  return basis;
}

Eigen::VectorXd RffMap(const Eigen::VectorXd& x, const RffBasis& basis) {
  if (x.size() != basis.dim()) {
    throw ArgumentError("input dimension " + std::to_string(x.size()) +
                        " does not match basis dimension " +
                        std::to_string(basis.dim()));
  }
  const int m_count = basis.num_frequencies();
  const double norm = 1.0 / std::sqrt(static_cast<double>(m_count));
  const Eigen::VectorXd z = basis.frequencies * x / basis.sigma;
  Eigen::VectorXd phi(2 * m_count);
  for (int m = 0; m < m_count; ++m) {
    phi[2 * m] = norm * std::cos(z[m]);
    phi[2 * m + 1] = norm * std::sin(z[m]);
  }
  return phi;
}

Eigen::VectorXd MeanEmbed(const Eigen::MatrixXd& points,
                          const RffBasis& basis) {
  const int k = static_cast<int>(points.cols());
  if (k == 0) throw ArgumentError("cannot embed an empty point set");
  if (points.rows() != basis.dim()) {
    throw ArgumentError("point dimension does not match basis dimension");
  }
  const int m_count = basis.num_frequencies();
  const Eigen::MatrixXd z = basis.frequencies * points / basis.sigma;  // M x K
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2 * m_count);
  for (int i = 0; i < k; ++i) {
    for (int m = 0; m < m_count; ++m) {
      mu[2 * m] += std::cos(z(m, i));
      mu[2 * m + 1] += std::sin(z(m, i));
    }
  }
  mu /= k * std::sqrt(static_cast<double>(m_count));
  return mu;
}

double Mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
           const RffBasis& basis) {
  return (MeanEmbed(a, basis) - MeanEmbed(b, basis)).norm();
}

EmbedJacobian EmbedGradients(const Eigen::MatrixXd& points,
                             const RffBasis& basis) {
  const int k = static_cast<int>(points.cols());
  if (k == 0) throw ArgumentError("cannot embed an empty point set");
  const int m_count = basis.num_frequencies();
  const int d = basis.dim();
  const double sigma = basis.sigma;
  const double c = 1.0 / (k * std::sqrt(static_cast<double>(m_count)));
  const Eigen::MatrixXd z = basis.frequencies * points / sigma;

  EmbedJacobian jac;
  jac.d_frequencies = Eigen::MatrixXd::Zero(2 * m_count, m_count * d);
  jac.d_sigma = Eigen::VectorXd::Zero(2 * m_count);
  jac.d_points = Eigen::MatrixXd::Zero(2 * m_count, k * d);
  for (int i = 0; i < k; ++i) {
    for (int m = 0; m < m_count; ++m) {
      const double s = std::sin(z(m, i));
      const double co = std::cos(z(m, i));
      // dz/dw_mj = x_j / sigma, dz/dsigma = -z / sigma, dz/dx_j = w_mj / sigma
      for (int j = 0; j < d; ++j) {
        const double dz_dw = points(j, i) / sigma;
        jac.d_frequencies(2 * m, m * d + j) += -c * s * dz_dw;
        jac.d_frequencies(2 * m + 1, m * d + j) += c * co * dz_dw;
        const double dz_dx = basis.frequencies(m, j) / sigma;
        jac.d_points(2 * m, i * d + j) = -c * s * dz_dx;
        jac.d_points(2 * m + 1, i * d + j) = c * co * dz_dx;
      }
      const double dz_ds = -z(m, i) / sigma;
      jac.d_sigma[2 * m] += -c * s * dz_ds;
      jac.d_sigma[2 * m + 1] += c * co * dz_ds;
    }
  }
  return jac;
}

void MeanEmbedBackward(const Eigen::MatrixXd& points, const RffBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& upstream,
                       Eigen::MatrixXd& d_frequencies, double& d_sigma) {
  const int k = static_cast<int>(points.cols());
  const int m_count = basis.num_frequencies();
  const double sigma = basis.sigma;
  const double c = 1.0 / (k * std::sqrt(static_cast<double>(m_count)));
  const Eigen::MatrixXd z = basis.frequencies * points / sigma;  // M x K
  // g(m, i) = d(upstream . mu) / dz(m, i)
  Eigen::MatrixXd g(m_count, k);
  for (int i = 0; i < k; ++i) {
    for (int m = 0; m < m_count; ++m) {
      g(m, i) = c * (-upstream[2 * m] * std::sin(z(m, i)) +
                     upstream[2 * m + 1] * std::cos(z(m, i)));
    }
  }
  d_frequencies.noalias() += g * points.transpose() / sigma;
  d_sigma += -(g.array() * z.array()).sum() / sigma;
}

double MedianPairwiseDistance(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.cols());
  std::vector<double> dist;
  dist.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dist.push_back((points.col(i) - points.col(j)).norm());
    }
  }
  if (dist.empty()) return 1.0;
  auto mid = dist.begin() + dist.size() / 2;
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid > 0 ? *mid : 1.0;
}

nlohmann::json ToJson(const RffBasis& basis) {
  std::vector<double> flat;
  flat.reserve(basis.frequencies.size());
  for (int m = 0; m < basis.num_frequencies(); ++m) {
    for (int j = 0; j < basis.dim(); ++j) {
      flat.push_back(basis.frequencies(m, j));
    }
  }
  return {{"M", basis.num_frequencies()},
          {"d", basis.dim()},
          {"sigma", basis.sigma},
          {"frequencies", flat},
          {"seed", basis.seed},
          {"trainable", basis.trainable}};
}

RffBasis RffBasisFromJson(const nlohmann::json& j) {
  RffBasis basis;
  const int m_count = j.at("M").get<int>();
  const int d = j.at("d").get<int>();
  const auto flat = j.at("frequencies").get<std::vector<double>>();
  if (m_count < 1 || d < 1 ||
      flat.size() != static_cast<size_t>(m_count) * d) {
    throw ConfigError("basis frequencies do not match M x d");
  }
  basis.frequencies.resize(m_count, d);
  for (int m = 0; m < m_count; ++m) {
    for (int k = 0; k < d; ++k) basis.frequencies(m, k) = flat[m * d + k];
  }
  basis.sigma = j.at("sigma").get<double>();
  if (!(basis.sigma > 0)) throw ConfigError("basis sigma must be positive");
  basis.seed = j.value("seed", uint64_t{0});
  basis.trainable = j.value("trainable", false);
  return basis;
}

}  // namespace dsbi
