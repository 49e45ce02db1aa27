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

#include "dsbi/features.h"

#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "test_util.h"

namespace dsbi {
namespace {

ObservedTrajectory RandomObserved(int steps, int keypoints, Rng& rng) {
  ObservedTrajectory obs;
  for (int t = 0; t < steps; ++t) {
    obs.gripper_pose.push_back(testing::NormalMatrix(2, 1, rng).col(0));
    obs.actions.push_back(testing::NormalMatrix(2, 1, rng).col(0));
    obs.keypoints.push_back(testing::UniformMatrix(2, keypoints, -1, 1, rng));
  }
  return obs;
}

ObservedTrajectory PermuteFrames(const ObservedTrajectory& obs, Rng& rng) {
  ObservedTrajectory out = obs;
  for (Points2& k : out.keypoints) {
    std::vector<int> order(k.cols());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Points2 p(2, k.cols());
    for (int j = 0; j < k.cols(); ++j) p.col(j) = k.col(order[j]);
    k = p;
  }
  return out;
}

TEST(SummaryStatsTest, HandComputedCase) {
  const std::vector<Eigen::VectorXd> s = {Eigen::VectorXd::Constant(1, 0.0),
                                          Eigen::VectorXd::Constant(1, 1.0),
                                          Eigen::VectorXd::Constant(1, 3.0)};
  const std::vector<Eigen::VectorXd> a = {Eigen::VectorXd::Constant(1, 2.0),
                                          Eigen::VectorXd::Constant(1, 2.0)};
  const Eigen::VectorXd f = SummaryStats(s, a);
  ASSERT_EQ(f.size(), 3);
  EXPECT_DOUBLE_EQ(f(0), 6.0);
  EXPECT_DOUBLE_EQ(f(1), 1.5);
  EXPECT_DOUBLE_EQ(f(2), 0.25);
  // a trailing action is ignored
  std::vector<Eigen::VectorXd> longer = a;
  longer.push_back(Eigen::VectorXd::Constant(1, 100.0));
  EXPECT_EQ(SummaryStats(s, longer), f);
}

TEST(SummaryStatsTest, StaticTrajectoryIsAllZero) {
  const std::vector<Eigen::VectorXd> s(5, Eigen::VectorXd::Constant(3, 0.7));
  const std::vector<Eigen::VectorXd> a(4, Eigen::VectorXd::Ones(2));
  const Eigen::VectorXd f = SummaryStats(s, a);
  EXPECT_EQ(f.size(), 3 * 2 + 6);
  EXPECT_EQ(f, Eigen::VectorXd::Zero(12));
}

TEST(SummaryStatsTest, ObservedLengthForFourKeypoints) {
  Rng rng(1);
  EXPECT_EQ(SummaryStats(RandomObserved(20, 4, rng)).size(), 40);
}

TEST(SummaryStatsTest, RejectsMismatchedActions) {
  const std::vector<Eigen::VectorXd> s(5, Eigen::VectorXd::Zero(2));
  const std::vector<Eigen::VectorXd> a(2, Eigen::VectorXd::Zero(2));
  EXPECT_THROW(SummaryStats(s, a), ArgumentError);
}

TEST(SubsampleTest, Indices) {
  EXPECT_EQ(SubsampleIndices(3, 2), (std::vector<int>{0, 2}));
  EXPECT_EQ(SubsampleIndices(200, 1), (std::vector<int>{0}));
  const auto idx = SubsampleIndices(200, 10);
  ASSERT_EQ(idx.size(), 10u);
  EXPECT_EQ(idx.front(), 0);
  EXPECT_EQ(idx.back(), 199);
  EXPECT_EQ(idx[1], 22);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  const auto all = SubsampleIndices(7, 7);
  for (int t = 0; t < 7; ++t) EXPECT_EQ(all[t], t);
  EXPECT_THROW(SubsampleIndices(5, 6), ArgumentError);
}

TEST(RkhsFeaturesTest, LengthAndLayout) {
  Rng rng(2);
  const ObservedTrajectory obs = RandomObserved(30, 4, rng);
  const RffBasis basis = SampleBasis(16, 2, 0.5, 3);
  const Eigen::VectorXd f = RkhsFeatures(obs, basis, 5);
  ASSERT_EQ(f.size(), 5 * (4 + 32));
  const auto idx = SubsampleIndices(30, 5);
  const int block = 4 + 32;
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(f.segment(j * block, 2), obs.gripper_pose[idx[j]]);
    EXPECT_EQ(f.segment(j * block + 2, 2), obs.actions[idx[j]]);
    EXPECT_LT((f.segment(j * block + 4, 32) - MeanEmbed(obs.keypoints[idx[j]], basis))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
  }
  const ModelInput in = RkhsInput(obs, 5);
  EXPECT_EQ(in.frames.size(), 5u);
  EXPECT_EQ(InputEncoder(basis).RawFeatures(in), f);
}

TEST(RkhsFeaturesTest, InvariantToKeypointOrder) {
  Rng rng(4);
  const ObservedTrajectory obs = RandomObserved(40, 6, rng);
  const ObservedTrajectory shuffled = PermuteFrames(obs, rng);
  const RffBasis basis = SampleBasis(32, 2, 0.5, 5);
  EXPECT_LE((RkhsFeatures(obs, basis, 10) - RkhsFeatures(shuffled, basis, 10))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(MdrffFeaturesTest, DependsOnKeypointOrder) {
  Rng rng(6);
  const ObservedTrajectory obs = RandomObserved(10, 4, rng);
  const ObservedTrajectory shuffled = PermuteFrames(obs, rng);
  const Eigen::VectorXd flat = FlattenTrajectory(obs);
  ASSERT_EQ(flat.size(), 10 * 10 + 10 * 2);
  const RffBasis basis = SampleBasis(64, static_cast<int>(flat.size()), 2.0, 7);
  const Eigen::VectorXd f = MdrffFeatures(obs, basis);
  EXPECT_EQ(f.size(), 128);
  EXPECT_GT((f - MdrffFeatures(shuffled, basis)).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_THROW(MdrffFeatures(obs, SampleBasis(64, 3, 2.0, 7)), ArgumentError);
}

TEST(FlattenTest, StatesThenActions) {
  Rng rng(8);
  const ObservedTrajectory obs = RandomObserved(3, 2, rng);
  const Eigen::VectorXd flat = FlattenTrajectory(obs);
  EXPECT_EQ(flat.head(6), AssembleState(obs.gripper_pose[0], obs.keypoints[0]));
  EXPECT_EQ(flat.segment(6, 6),
            AssembleState(obs.gripper_pose[1], obs.keypoints[1]));
  EXPECT_EQ(flat.segment(18, 2), obs.actions[0]);
  EXPECT_EQ(flat.tail(2), obs.actions[2]);
}

}  // namespace
}  // namespace dsbi
