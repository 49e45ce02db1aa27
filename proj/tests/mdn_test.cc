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

#include "dsbi/mdn.h"

#include <cmath>
#include <set>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "test_util.h"

namespace dsbi {
namespace {

using testing::CheckParamGradients;
using testing::NormalMatrix;
using testing::UniformMatrix;

ModelInput DenseInput(const Eigen::VectorXd& x) {
  ModelInput in;
  in.dense = x;
  return in;
}

ModelInput SetInput(Rng& rng, int frames, int points) {
  ModelInput in;
  for (int f = 0; f < frames; ++f) {
    in.frames.push_back(
        {NormalMatrix(2, 1, rng).col(0), UniformMatrix(2, points, -1, 1, rng)});
  }
  in.dense = NormalMatrix(3, 1, rng).col(0);
  return in;
}

std::vector<const ModelInput*> Ptrs(const std::vector<ModelInput>& v) {
  std::vector<const ModelInput*> out;
  for (const auto& x : v) out.push_back(&x);
  return out;
}

std::vector<const Eigen::VectorXd*> Ptrs(const std::vector<Eigen::VectorXd>& v) {
  std::vector<const Eigen::VectorXd*> out;
  for (const auto& x : v) out.push_back(&x);
  return out;
}

TEST(SplitTest, DeterministicDisjointCover) {
  const DataSplit a = SplitDataset(103, 0.2, 5);
  const DataSplit b = SplitDataset(103, 0.2, 5);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.validation.size(), 21u);
  std::set<int> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  EXPECT_EQ(all.size(), 103u);
  EXPECT_EQ(*all.rbegin(), 102);
}

TEST(MdnTest, ZeroHeadGivesUniformWeights) {
  const ModelInput proto = DenseInput(Eigen::Vector3d(1, 2, 3));
  MixtureDensityNetwork mdn(InputEncoder(), proto, 4, {2, 16, 5}, 1);
  mdn.ZeroHead();
  const MixturePosterior m = mdn.Forward(proto);
  ASSERT_EQ(m.size(), 5);
  for (int c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(m.weights(c), 0.2);
  EXPECT_EQ(MixtureDensityNetwork::HeadSize(5, 4), 5 * (1 + 8 + 6));
}

TEST(MdnTest, RandomHeadsAreValidMixtures) {
  const ModelInput proto = DenseInput(Eigen::Vector2d(0, 0));
  MixtureDensityNetwork mdn(InputEncoder(), proto, 3, {1, 4, 3}, 2);
  Rng rng(3);
  std::normal_distribution<double> wide(0.0, 30.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd head(MixtureDensityNetwork::HeadSize(3, 3));
    for (int i = 0; i < head.size(); ++i) head(i) = wide(rng);
    const MixturePosterior m = mdn.HeadToMixture(head);
    EXPECT_NO_THROW(m.Validate());
    EXPECT_NEAR(m.weights.sum(), 1.0, 1e-12);
    EXPECT_GE(m.weights.minCoeff(), 0.0);
    for (int c = 0; c < 3; ++c) {
      EXPECT_TRUE(m.chol[c].allFinite());
      EXPECT_GT(m.chol[c].diagonal().minCoeff(), 0.0);
    }
  }
}

TEST(MdnTest, ModerateHeadsGivePositiveDefiniteCovariances) {
  const ModelInput proto = DenseInput(Eigen::Vector2d(0, 0));
  MixtureDensityNetwork mdn(InputEncoder(), proto, 3, {1, 4, 3}, 2);
  Rng rng(4);
  std::normal_distribution<double> moderate(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd head(MixtureDensityNetwork::HeadSize(3, 3));
    for (int i = 0; i < head.size(); ++i) head(i) = moderate(rng);
    const MixturePosterior m = mdn.HeadToMixture(head);
    for (int c = 0; c < 3; ++c) {
      Eigen::LLT<Eigen::MatrixXd> llt(m.Covariance(c));
      EXPECT_EQ(llt.info(), Eigen::Success);
    }
  }
}

TEST(MdnTest, DensityIntegratesToOne) {
  Rng rng(4);
  const ModelInput proto = DenseInput(NormalMatrix(3, 1, rng).col(0));
  MixtureDensityNetwork mdn(InputEncoder(), proto, 2, {2, 32, 3}, 5);
  const MixturePosterior m = mdn.Forward(proto);
  // midpoint rule on a box wide enough for every component
  const double lo = -8;
  const double hi = 8;
  const int n = 800;
  const double h = (hi - lo) / n;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d theta(lo + (i + 0.5) * h, lo + (j + 0.5) * h);
      total += std::exp(MixtureLogDensity(m, theta));
    }
  }
  EXPECT_NEAR(total * h * h, 1.0, 0.02);
}

TEST(MdnTest, HeadGradientMatchesFiniteDifferences) {
  Rng rng(6);
  const int d = 3;
  const int c = 2;
  Eigen::VectorXd head = NormalMatrix(MixtureDensityNetwork::HeadSize(c, d), 1, rng).col(0);
  const Eigen::VectorXd theta = NormalMatrix(d, 1, rng).col(0);
  Eigen::VectorXd grad;
  MixtureHeadNll(head, c, theta, &grad);
  const double h = 1e-6;
  for (int i = 0; i < head.size(); ++i) {
    Eigen::VectorXd up = head;
    Eigen::VectorXd down = head;
    up(i) += h;
    down(i) -= h;
    const double numeric = (MixtureHeadNll(up, c, theta, nullptr) -
                            MixtureHeadNll(down, c, theta, nullptr)) /
                           (2 * h);
    EXPECT_LT(testing::RelativeError(grad(i), numeric), 1e-6) << i;
  }
}

TEST(MdnTest, AllParameterGradientsMatchFiniteDifferences) {
  Rng rng(7);
  std::vector<ModelInput> inputs;
  std::vector<Eigen::VectorXd> targets;
  for (int i = 0; i < 4; ++i) {
    inputs.push_back(SetInput(rng, 2, 3));
    targets.push_back(UniformMatrix(2, 1, -1, 1, rng).col(0));
  }
  InputEncoder encoder(SampleBasis(4, 2, 0.7, 8, /*trainable=*/true));
  MixtureDensityNetwork mdn(encoder, inputs[0], 2, {2, 6, 2}, 9);
  const auto in = Ptrs(inputs);
  const auto tg = Ptrs(targets);
  mdn.ZeroGrad();
  mdn.LossAndGrad(in, tg);
  const auto params = mdn.Params();
  std::set<std::string> names;
  for (const auto& p : params) names.insert(p.name);
  EXPECT_TRUE(names.count("rkhs.frequencies"));
  EXPECT_TRUE(names.count("rkhs.sigma"));
  const auto check = CheckParamGradients(params, [&] { return mdn.Loss(in, tg); });
  EXPECT_GT(check.checked, 100);
  EXPECT_LT(check.max_relative_error, 1e-4);
}

TEST(MdnTest, LearnsALinearMap) {
  Rng rng(10);
  Dataset data;
  Eigen::Matrix2d a;
  a << 0.6, -0.3, 0.2, 0.5;
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int i = 0; i < 600; ++i) {
    const Eigen::Vector2d x = UniformMatrix(2, 1, -1, 1, rng).col(0);
    Eigen::Vector2d y = a * x;
    y += Eigen::Vector2d(noise(rng), noise(rng));
    data.Add(DenseInput(x), y);
  }
  MixtureDensityNetwork mdn(InputEncoder(), data.inputs[0], 2, {2, 32, 2}, 11);
  TrainConfig config;
  config.learning_rate = 3e-3;
  config.epochs = 150;
  config.batch_size = 32;
  Train(mdn, data, config);
  double ss_res = 0;
  double ss_tot = 0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector2d x = UniformMatrix(2, 1, -1, 1, rng).col(0);
    const Eigen::Vector2d y = a * x;
    ss_res += (mdn.Forward(DenseInput(x)).Mean() - y).squaredNorm();
    ss_tot += y.squaredNorm();
  }
  EXPECT_GT(1 - ss_res / ss_tot, 0.99);
}

TEST(MdnTest, RecoversTwoModes) {
  Rng rng(12);
  Dataset data;
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < 1000; ++i) {
    const double y = (coin(rng) ? 1.0 : -1.0) + noise(rng);
    data.Add(DenseInput(UniformMatrix(1, 1, -1, 1, rng).col(0)),
             Eigen::VectorXd::Constant(1, y));
  }
  MixtureDensityNetwork mdn(InputEncoder(), data.inputs[0], 1, {2, 16, 3}, 13);
  TrainConfig config;
  config.learning_rate = 3e-3;
  config.epochs = 100;
  Train(mdn, data, config);
  const MixturePosterior m = mdn.Forward(DenseInput(Eigen::VectorXd::Zero(1)));
  for (double mode : {-1.0, 1.0}) {
    double mass = 0;
    for (int c = 0; c < m.size(); ++c) {
      if (std::abs(m.means[c](0) - mode) < 0.2) mass += m.weights(c);
    }
    EXPECT_GE(mass, 0.2) << "mode " << mode;
  }
}

TEST(MdnTest, TinyLearningRateStillLowersValidationLoss) {
  Rng rng(14);
  Dataset data;
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd x = UniformMatrix(2, 1, -1, 1, rng).col(0);
    data.Add(DenseInput(x), Eigen::VectorXd::Constant(2, 0.5 * x.sum()));
  }
  MixtureDensityNetwork mdn(InputEncoder(), data.inputs[0], 2, {3, 64, 4}, 15);
  TrainConfig config;  // learning rate 1e-6
  config.epochs = 20;
  config.keep_best = false;
  const DataSplit split = SplitDataset(200, config.validation_fraction, config.seed);
  std::vector<const ModelInput*> train_in;
  for (int i : split.train) train_in.push_back(&data.inputs[i]);
  std::vector<const ModelInput*> val_in;
  std::vector<const Eigen::VectorXd*> val_tg;
  for (int i : split.validation) {
    val_in.push_back(&data.inputs[i]);
    val_tg.push_back(&data.targets[i]);
  }
  mdn.encoder().FitStandardizer(train_in);
  const double untrained = mdn.Loss(val_in, val_tg);
  const TrainMetrics metrics = Train(mdn, data, config);
  ASSERT_EQ(metrics.validation_loss.size(), 20u);
  EXPECT_LT(metrics.validation_loss.back(), untrained);
  EXPECT_LT(mdn.Loss(val_in, val_tg), untrained);
  EXPECT_EQ(metrics.train_size + metrics.validation_size, 200);
}

TEST(MdnTest, KeepBestRestoresTheBestEpoch) {
  Rng rng(16);
  Dataset data;
  for (int i = 0; i < 60; ++i) {
    data.Add(DenseInput(NormalMatrix(4, 1, rng).col(0)),
             NormalMatrix(2, 1, rng).col(0));
  }
  MixtureDensityNetwork mdn(InputEncoder(), data.inputs[0], 2, {2, 64, 3}, 17);
  TrainConfig config;
  config.learning_rate = 1e-2;
  config.epochs = 40;
  const TrainMetrics metrics = Train(mdn, data, config);
  ASSERT_GE(metrics.best_epoch, 0);
  double best = metrics.validation_loss[0];
  for (double v : metrics.validation_loss) best = std::min(best, v);
  EXPECT_EQ(metrics.final_validation(), best);
  const DataSplit split = SplitDataset(60, config.validation_fraction, config.seed);
  std::vector<const ModelInput*> in;
  std::vector<const Eigen::VectorXd*> tg;
  for (int i : split.validation) {
    in.push_back(&data.inputs[i]);
    tg.push_back(&data.targets[i]);
  }
  EXPECT_NEAR(mdn.Loss(in, tg), best, 1e-9);
}

TEST(MdnTest, NonFiniteLossThrows) {
  Dataset data;
  for (int i = 0; i < 10; ++i) {
    data.Add(DenseInput(Eigen::VectorXd::Constant(1, i)),
             Eigen::VectorXd::Constant(1, std::nan("")));
  }
  MixtureDensityNetwork mdn(InputEncoder(), data.inputs[0], 1, {1, 4, 1}, 18);
  TrainConfig config;
  config.epochs = 2;
  EXPECT_THROW(Train(mdn, data, config), TrainingDiverged);
}

TEST(MdnTest, ConfigsRoundTripThroughJson) {
  TrainConfig t;
  t.learning_rate = 1e-3;
  t.epochs = 7;
  t.keep_best = false;
  const TrainConfig back = TrainConfigFromJson(ToJson(t));
  EXPECT_EQ(back.learning_rate, 1e-3);
  EXPECT_EQ(back.epochs, 7);
  EXPECT_FALSE(back.keep_best);
  const NetworkConfig n = NetworkConfigFromJson(ToJson(NetworkConfig{2, 8, 3}));
  EXPECT_EQ(n.width, 8);
  EXPECT_EQ(n.components, 3);
  EXPECT_THROW(NetworkConfigFromJson({{"components", 0}}), ConfigError);
}

}  // namespace
}  // namespace dsbi
