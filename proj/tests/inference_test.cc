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

#include "dsbi/inference.h"

#include <algorithm>

#include <gtest/gtest.h>

#include "test_util.h"

namespace dsbi {
namespace {

InferenceConfig TinyConfig() {
  InferenceConfig config = InferenceConfig::ForScenario(Scenario::kWipe);
  config.steps = 20;
  config.frames = 4;
  config.rff_features = 8;
  config.rounds = 3;
  config.budget = 6;
  config.bulk_budget = 12;
  config.network = {1, 8, 2};
  config.train.learning_rate = 1e-3;
  config.train.epochs = 2;
  config.train.batch_size = 4;
  config.correction_samples = 1000;
  return config;
}

ObservedTrajectory RealFor(const InferenceConfig& config, const ObservationNoise& noise) {
  return SimulateObservation(config, SimParams(), noise, 99);
}

TEST(MethodTest, NamesRoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(ParseMethod(MethodName(m)), m);
  EXPECT_EQ(MethodName(Method::kBayesZoomRkhs), "bayeszoom-rkhs");
  EXPECT_TRUE(IsBulk(Method::kGpBulk));
  EXPECT_TRUE(IsBulk(Method::kNnBulk));
  EXPECT_FALSE(IsBulk(Method::kBayesSimMdnn));
  EXPECT_THROW(ParseMethod("bayessim"), ConfigError);
}

TEST(NormalizerTest, MapsTheBoxOntoTheUnitCube) {
  const ParamNormalizer n{PriorBox::Default()};
  const PriorBox& box = n.box;
  EXPECT_LT((n.Normalize(box.low) + Eigen::VectorXd::Ones(4)).norm(), 1e-12);
  EXPECT_LT((n.Normalize(box.high) - Eigen::VectorXd::Ones(4)).norm(), 1e-12);
  const Eigen::VectorXd theta = SimParams().ToVector();
  EXPECT_LT((n.Denormalize(n.Normalize(theta)) - theta).norm(), 1e-12);
  const MixturePosterior z =
      DiagonalGaussian(Eigen::VectorXd::Constant(4, 0.2), Eigen::VectorXd::Constant(4, 0.1));
  const MixturePosterior phys = n.ToPhysical(z);
  EXPECT_LT((phys.means[0] - n.Denormalize(z.means[0])).norm(), 1e-12);
  EXPECT_NEAR(std::sqrt(phys.Covariance(0)(3, 3)), 0.1 * box.Width()(3) / 2, 1e-12);
  const PriorBox unit = ParamNormalizer::UnitBox(3);
  EXPECT_EQ(unit.low, Eigen::VectorXd::Constant(3, -1));
  EXPECT_EQ(unit.high, Eigen::VectorXd::Constant(3, 1));
}

TEST(InferenceConfigTest, JsonDefaultsAndValidation) {
  const InferenceConfig c = InferenceConfigFromJson(
      {{"scenario", "wind"}, {"rounds", 4}, {"budget", 10}});
  EXPECT_EQ(c.scenario, Scenario::kWind);
  EXPECT_EQ(c.bulk_budget, 40);
  const ObservationNoise uns =
      NoiseProfile("unsupervised", Scenario::kWind, c.sim);
  EXPECT_DOUBLE_EQ(c.noise.gaussian_std, uns.gaussian_std);
  EXPECT_DOUBLE_EQ(c.bulk_noise.gaussian_std,
                   NoiseProfile("supervised", Scenario::kWind, c.sim).gaussian_std);
  const InferenceConfig back = InferenceConfigFromJson(ToJson(c));
  EXPECT_EQ(ToJson(back), ToJson(c));
  EXPECT_THROW(InferenceConfigFromJson({{"rounds", 0}}), ConfigError);
  EXPECT_THROW(InferenceConfigFromJson({{"frames", 500}}), ConfigError);
  EXPECT_THROW(InferenceConfigFromJson({{"correction_samples", 10}}), ConfigError);
  EXPECT_THROW(InferenceConfigFromJson({{"scenario", "fold"}}), ConfigError);
}

TEST(InferenceTest, SimulatedObservationsAreReproducible) {
  const InferenceConfig config = TinyConfig();
  const ObservedTrajectory a = SimulateObservation(config, SimParams(), config.noise, 5);
  const ObservedTrajectory b = SimulateObservation(config, SimParams(), config.noise, 5);
  const ObservedTrajectory c = SimulateObservation(config, SimParams(), config.noise, 6);
  ASSERT_EQ(a.steps(), 20);
  EXPECT_EQ(a.num_keypoints(), 4);
  EXPECT_EQ(a.keypoints[7], b.keypoints[7]);
  EXPECT_NE(a.keypoints[7], c.keypoints[7]);
}

class SequentialTest : public ::testing::TestWithParam<Method> {};

TEST_P(SequentialTest, DatasetGrowsByTheBudget) {
  const InferenceConfig config = TinyConfig();
  const ObservedTrajectory real = RealFor(config, config.noise);
  RoundState state;
  EXPECT_TRUE(std::holds_alternative<UniformProposal>(state.proposal));
  for (int i = 1; i <= 3; ++i) {
    const RoundResult r = RunRound(state, GetParam(), config, real, 6, DeriveSeed(1, i));
    EXPECT_EQ(r.round, i);
    EXPECT_EQ(r.dataset_size, 6 * i);
    EXPECT_EQ(state.data.size(), 6 * i);
    EXPECT_EQ(state.round, i);
    EXPECT_NO_THROW(r.posterior.Validate());
    ASSERT_EQ(state.history.parts.size(), static_cast<size_t>(i));
  }
  // the first batch came from the uniform prior
  EXPECT_TRUE(std::holds_alternative<UniformProposal>(state.history.parts[0]));
  // parts are weighted by the number of trajectories drawn from each
  EXPECT_EQ(state.history.weights, (std::vector<double>{6, 6, 6}));
}

TEST_P(SequentialTest, RunsAreBitIdentical) {
  const InferenceConfig config = TinyConfig();
  const ObservedTrajectory real = RealFor(config, config.noise);
  std::vector<int> seen;
  const auto a = RunSequential(GetParam(), config, real, 7,
                               [&](const RoundResult& r) { seen.push_back(r.round); });
  const auto b = RunSequential(GetParam(), config, real, 7);
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3}));
  ASSERT_EQ(a.size(), 3u);
  ASSERT_EQ(b.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(ToJson(a[i].posterior).dump(), ToJson(b[i].posterior).dump());
    EXPECT_EQ(a[i].metrics.validation_loss, b[i].metrics.validation_loss);
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllSequential, SequentialTest,
    ::testing::Values(Method::kBayesSimMdnn, Method::kBayesSimMdrff,
                      Method::kBayesSimRkhs, Method::kBayesZoomRkhs),
    [](const auto& info) {
      std::string name(MethodName(info.param));
      std::replace(name.begin(), name.end(), '-', '_');
      return name;
    });

TEST(InferenceTest, BayesZoomPosteriorIsASingleGaussian) {
  const InferenceConfig config = TinyConfig();
  const ObservedTrajectory real = RealFor(config, config.noise);
  const auto rounds = RunSequential(Method::kBayesZoomRkhs, config, real, 8);
  for (const RoundResult& r : rounds) EXPECT_EQ(r.posterior.size(), 1);
}

TEST(InferenceTest, RoundLogEntrySchema) {
  const InferenceConfig config = TinyConfig();
  const ObservedTrajectory real = RealFor(config, config.noise);
  RoundState state;
  const RoundResult r =
      RunRound(state, Method::kBayesSimMdnn, config, real, 6, 9);
  const nlohmann::json j = RoundLogEntry(r);
  for (const char* key : {"round", "method", "budget", "train_nll", "val_nll",
                          "posterior", "wall_time_s", "dataset_size"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["method"], "bayessim-mdnn");
  EXPECT_NO_THROW(MixtureFromJson(j["posterior"]));
}

// prior that leaves only the scale free
InferenceConfig ScaleOnlyConfig() {
  InferenceConfig config = TinyConfig();
  config.steps = 30;
  const SimParams center;
  Eigen::VectorXd c = center.ToVector();
  config.prior.low = c * 0.999;
  config.prior.high = c * 1.001;
  config.prior.low(kScale) = 0.5;
  config.prior.high(kScale) = 2.0;
  config.noise = ObservationNoise();
  config.bulk_noise = ObservationNoise();
  return config;
}

TEST(BulkTest, GpContractsOnTheIdentifiableParameter) {
  const InferenceConfig config = ScaleOnlyConfig();
  SimParams truth;
  truth.scale = 1.3;
  const ObservedTrajectory real =
      SimulateObservation(config, truth, config.bulk_noise, 10);
  const RoundResult r = RunBulk(Method::kGpBulk, config, real, 80, 11);
  EXPECT_EQ(r.dataset_size, 80);
  ASSERT_EQ(r.posterior.size(), 1);
  const double var = r.posterior.Covariance(0)(kScale, kScale);
  EXPECT_LE(var, std::pow(config.prior.Stddev()(kScale), 2));
  EXPECT_NEAR(r.posterior.means[0](kScale), 1.3, 0.13);
  EXPECT_NO_THROW(MixtureFromJson(ToJson(r.posterior)));
}

TEST(BulkTest, NnRecoversTheScale) {
  InferenceConfig config = ScaleOnlyConfig();
  config.network = {2, 32, 1};
  config.train.epochs = 150;
  config.train.batch_size = 32;
  config.train.learning_rate = 3e-3;
  SimParams truth;
  truth.scale = 1.3;
  const ObservedTrajectory real =
      SimulateObservation(config, truth, config.bulk_noise, 12);
  const RoundResult r = RunBulk(Method::kNnBulk, config, real, 300, 13);
  EXPECT_EQ(r.dataset_size, 300);
  EXPECT_NEAR(r.posterior.means[0](kScale), 1.3, 0.13);
  EXPECT_NO_THROW(MixtureFromJson(ToJson(r.posterior)));
}

TEST(BulkTest, RejectsSequentialMethodsAndTinyBudgets) {
  const InferenceConfig config = TinyConfig();
  const ObservedTrajectory real = RealFor(config, config.bulk_noise);
  EXPECT_THROW(RunBulk(Method::kBayesSimRkhs, config, real, 10, 1), ArgumentError);
  EXPECT_THROW(RunBulk(Method::kGpBulk, config, real, 1, 1), ArgumentError);
}

}  // namespace
}  // namespace dsbi
