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

#include "dsbi/correction.h"

#include <cmath>
#include <limits>
#include <string>

namespace dsbi {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxRejectionRounds = 1000;

double LogSumExp(const Eigen::VectorXd& x) {
  const double top = x.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((x.array() - top).exp().sum());
}

double PartLogDensity(const ProposalPart& part, const PriorBox& box,
                      const Eigen::VectorXd& theta) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformProposal>) {
          return box.LogDensity();
        } else if constexpr (std::is_same_v<T, MixtureProposal>) {
          return MixtureLogDensity(p.mixture, theta) - std::log(p.box_mass);
        } else {
          const Eigen::ArrayXd z = (theta - p.mean).array() / p.stddev.array();
          return -0.5 * z.square().sum() - p.stddev.array().log().sum() -
                 0.5 * theta.size() * std::log(2.0 * M_PI) -
                 std::log(p.box_mass);
        }
      },
      part);
}

// one untruncated draw
Eigen::VectorXd PartDraw(const ProposalPart& part, const PriorBox& box,
                         Rng& rng) {
  return std::visit(
      [&](const auto& p) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformProposal>) {
          return box.Sample(rng);
        } else if constexpr (std::is_same_v<T, MixtureProposal>) {
          return MixtureSample(p.mixture, 1, rng).col(0);
        } else {
          std::normal_distribution<double> normal;
          Eigen::VectorXd x(p.mean.size());
          for (int i = 0; i < x.size(); ++i) {
            x[i] = p.mean[i] + p.stddev[i] * normal(rng);
          }
          return x;
        }
      },
      part);
}

double ClampMass(double mass) {
  if (!(mass > 0)) {
    throw DegeneratePosteriorError("proposal has no mass inside the box");
  }
  return std::min(mass, 1.0);
}

}  // namespace

double EstimateBoxMass(const MixturePosterior& mixture, const PriorBox& box,
                       int samples, uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd draws = MixtureSample(mixture, samples, rng);
  int inside = 0;
  for (int i = 0; i < samples; ++i) inside += box.Contains(draws.col(i));
  return static_cast<double>(inside) / samples;
}

MixtureProposal MakeMixtureProposal(MixturePosterior mixture,
                                    const PriorBox& box, uint64_t seed,
                                    int samples) {
  const double mass = EstimateBoxMass(mixture, box, samples, seed);
  return {std::move(mixture), ClampMass(mass)};
}

GaussianProposal MakeGaussianProposal(Eigen::VectorXd mean,
                                      Eigen::VectorXd stddev,
                                      const PriorBox& box, uint64_t seed,
                                      int samples) {
  const double mass =
      EstimateBoxMass(DiagonalGaussian(mean, stddev), box, samples, seed);
  return {std::move(mean), std::move(stddev), ClampMass(mass)};
}

double ProposalLogDensity(const Proposal& proposal, const PriorBox& box,
                          const Eigen::VectorXd& theta) {
  if (!box.Contains(theta)) return kNegInf;
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PooledProposal>) {
          double total = 0;
          for (double w : p.weights) total += w;
          Eigen::VectorXd terms(p.parts.size());
          for (size_t i = 0; i < p.parts.size(); ++i) {
            terms[i] = std::log(p.weights[i] / total) +
                       PartLogDensity(p.parts[i], box, theta);
          }
          return LogSumExp(terms);
        } else {
          return PartLogDensity(p, box, theta);
        }
      },
      proposal);
}

Eigen::MatrixXd SampleProposal(const Proposal& proposal, const PriorBox& box,
                               int n, Rng& rng) {
  Eigen::MatrixXd out(box.dim(), n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_inside = [&](const ProposalPart& part) -> Eigen::VectorXd {
    for (int attempt = 0; attempt < kMaxRejectionRounds; ++attempt) {
      Eigen::VectorXd x = PartDraw(part, box, rng);
      if (box.Contains(x)) return x;
    }
    throw DegeneratePosteriorError(
        "proposal rejection sampling found too few in-box draws");
  };
  for (int i = 0; i < n; ++i) {
    if (const auto* pooled = std::get_if<PooledProposal>(&proposal)) {
      double total = 0;
      for (double w : pooled->weights) total += w;
      double u = unit(rng) * total;
      size_t k = 0;
      while (k + 1 < pooled->parts.size() && u >= pooled->weights[k]) {
        u -= pooled->weights[k];
        ++k;
      }
      out.col(i) = draw_inside(pooled->parts[k]);
    } else {
      out.col(i) = std::visit(
          [&](const auto& p) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PooledProposal>) {
              return {};
            } else {
              return draw_inside(ProposalPart(p));
            }
          },
          proposal);
    }
  }
  return out;
}

std::vector<int> SystematicResample(const Eigen::VectorXd& weights, int n,
                                    Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u0 = unit(rng) / n;
  std::vector<int> idx(n);
  double cumulative = weights[0];
  int j = 0;
  const int m = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / n;
    while (u > cumulative && j + 1 < m) cumulative += weights[++j];
    idx[i] = j;
  }
  return idx;
}

CorrectionResult CorrectPosterior(const MixturePosterior& q,
                                  const PriorBox& box,
                                  const Proposal& proposal, int n,
                                  int components, uint64_t seed) {
  if (n < 1) throw ArgumentError("correction needs n >= 1");
  Rng rng(seed);
  CorrectionResult result;
  result.raw_samples = MixtureSample(q, n, rng);
  Eigen::VectorXd log_w(n);
  const double log_prior = box.LogDensity();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd theta = result.raw_samples.col(i);
    const double lp = ProposalLogDensity(proposal, box, theta);
    log_w[i] = std::isfinite(lp) ? log_prior - lp : kNegInf;
  }
  const double top = log_w.maxCoeff();
  if (!std::isfinite(top)) {
    throw DegeneratePosteriorError(
        "every posterior draw fell outside the prior box");
  }
  result.weights = (log_w.array() - top).unaryExpr([](double v) { return std::exp(v); });
  result.weights /= result.weights.sum();
  result.effective_sample_size = 1.0 / result.weights.squaredNorm();

  const std::vector<int> idx = SystematicResample(result.weights, n, rng);
  result.samples.resize(q.dim(), n);
  for (int i = 0; i < n; ++i) result.samples.col(i) = result.raw_samples.col(idx[i]);
  result.fit = FitMixtureEm(result.samples, components, DeriveSeed(seed, 1));
  return result;
}

nlohmann::json ToJson(const Proposal& proposal) {
  auto part_json = [](const ProposalPart& part) -> nlohmann::json {
    return std::visit(
        [](const auto& p) -> nlohmann::json {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, UniformProposal>) {
            return {{"type", "uniform"}};
          } else if constexpr (std::is_same_v<T, MixtureProposal>) {
            return {{"type", "mixture"},
                    {"box_mass", p.box_mass},
                    {"mixture", ToJson(p.mixture)}};
          } else {
            return {{"type", "gaussian"},
                    {"mean", std::vector<double>(p.mean.begin(), p.mean.end())},
                    {"stddev",
                     std::vector<double>(p.stddev.begin(), p.stddev.end())},
                    {"box_mass", p.box_mass}};
          }
        },
        part);
  };
  if (const auto* pooled = std::get_if<PooledProposal>(&proposal)) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& part : pooled->parts) parts.push_back(part_json(part));
    return {{"type", "pooled"}, {"weights", pooled->weights}, {"parts", parts}};
  }
  return std::visit(
      [&](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PooledProposal>) {
          return nullptr;
        } else {
          return part_json(ProposalPart(p));
        }
      },
      proposal);
}

}  // namespace dsbi
