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

// Runs the acceptance criteria; one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Cholesky>

#include "dsbi/benchmark.h"
#include "dsbi/correction.h"
#include "dsbi/features.h"
#include "dsbi/mdn.h"
#include "dsbi/metrics.h"
#include "dsbi/rkhs.h"
#include "test_util.h"

namespace dsbi {
namespace {

namespace fs = std::filesystem;
using testing::ExactRbf;
using testing::UniformMatrix;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), fmt, args...);
  return buffer;
}

// rff kernel fidelity
Outcome KernelFidelity() {
  const int d = 4;
  const int pairs = 1000;
  Rng rng(101);
  const Eigen::MatrixXd x = UniformMatrix(d, pairs, -1, 1, rng);
  const Eigen::MatrixXd y = UniformMatrix(d, pairs, -1, 1, rng);
  auto errors = [&](int m, uint64_t seed) {
    const RffBasis basis = SampleBasis(m, d, 1.0, seed);
    double worst = 0;
    double mean = 0;
    for (int i = 0; i < pairs; ++i) {
      const double e = std::abs(RffMap(x.col(i), basis).dot(RffMap(y.col(i), basis)) -
                                ExactRbf(x.col(i), y.col(i), 1.0));
      worst = std::max(worst, e);
      mean += e / pairs;
    }
    return std::pair{worst, mean};
  };
  const double worst = errors(2048, 102).first;
  std::vector<double> means;
  bool monotone = true;
  for (int m : {64, 256, 1024, 4096}) {
    double mean = 0;
    for (uint64_t s = 0; s < 5; ++s) mean += errors(m, DeriveSeed(103, s)).second / 5;
    if (!means.empty() && !(mean < means.back())) monotone = false;
    means.push_back(mean);
  }
  return {worst < 0.05 && monotone,
          Format("max error %.4f at M=2048; mean error %.4f %.4f %.4f %.4f for "
                 "M=64,256,1024,4096",
                 worst, means[0], means[1], means[2], means[3])};
}

// permutation invariance of the rkhs features, counterexample for mdrff
Outcome PermutationInvariance() {
  Rng rng(201);
  ObservedTrajectory obs;
  for (int t = 0; t < 50; ++t) {
    obs.gripper_pose.push_back(UniformMatrix(2, 1, -1, 1, rng).col(0));
    obs.actions.push_back(UniformMatrix(2, 1, -1, 1, rng).col(0));
    obs.keypoints.push_back(UniformMatrix(2, 4, -1, 1, rng));
  }
  ObservedTrajectory shuffled = obs;
  for (Points2& k : shuffled.keypoints) {
    std::vector<int> order = {0, 1, 2, 3};
    std::shuffle(order.begin(), order.end(), rng);
    Points2 p(2, 4);
    for (int j = 0; j < 4; ++j) p.col(j) = k.col(order[j]);
    k = p;
  }
  const RffBasis basis = SampleBasis(64, 2, 0.5, 202);
  const double rkhs_gap =
      (RkhsFeatures(obs, basis, 10) - RkhsFeatures(shuffled, basis, 10))
          .cwiseAbs()
          .maxCoeff();

  // two keypoints swapped in one frame
  ObservedTrajectory swapped = obs;
  swapped.keypoints[0].col(0) = obs.keypoints[0].col(1);
  swapped.keypoints[0].col(1) = obs.keypoints[0].col(0);
  const Eigen::VectorXd flat = FlattenTrajectory(obs);
  const RffBasis mdrff = SampleBasis(64, static_cast<int>(flat.size()), 1.0, 203);
  const double mdrff_gap =
      (MdrffFeatures(obs, mdrff) - MdrffFeatures(swapped, mdrff)).cwiseAbs().maxCoeff();
  return {rkhs_gap <= 1e-12 && mdrff_gap > 1e-6,
          Format("rkhs max difference %.2e, mdrff max difference %.2e", rkhs_gap,
                 mdrff_gap)};
}

ModelInput RandomSetInput(Rng& rng) {
  ModelInput in;
  for (int f = 0; f < 2; ++f) {
    in.frames.push_back({UniformMatrix(2, 1, -1, 1, rng).col(0),
                         UniformMatrix(2, 3, -1, 1, rng)});
  }
  in.dense = UniformMatrix(2, 1, -1, 1, rng).col(0);
  return in;
}

// every trainable quantity against central differences
Outcome GradientSuite() {
  double worst = 0;
  int checked = 0;
  for (uint64_t trial = 0; trial < 5; ++trial) {
    Rng rng(DeriveSeed(301, trial));
    std::vector<ModelInput> inputs;
    std::vector<Eigen::VectorXd> targets;
    for (int i = 0; i < 3; ++i) {
      inputs.push_back(RandomSetInput(rng));
      targets.push_back(UniformMatrix(3, 1, -1, 1, rng).col(0));
    }
    InputEncoder encoder(SampleBasis(8, 2, 0.5 + 0.2 * trial, DeriveSeed(302, trial), true));
    MixtureDensityNetwork mdn(encoder, inputs[0], 3, {2, 6, 3}, DeriveSeed(303, trial));
    std::vector<const ModelInput*> in;
    std::vector<const Eigen::VectorXd*> tg;
    for (int i = 0; i < 3; ++i) {
      in.push_back(&inputs[i]);
      tg.push_back(&targets[i]);
    }
    mdn.ZeroGrad();
    mdn.LossAndGrad(in, tg);
    const auto check = testing::CheckParamGradients(
        mdn.Params(), [&] { return mdn.Loss(in, tg); }, 1e-5);
    worst = std::max(worst, check.max_relative_error);
    checked += check.checked;
  }
  return {worst <= 1e-4,
          Format("%d partials (backbone, head, frequencies, bandwidth), max "
                 "relative error %.2e",
                 checked, worst)};
}

// bimodal recovery and normalization of a conditional density
Outcome MixtureSanity() {
  Rng rng(401);
  Dataset data;
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < 1000; ++i) {
    ModelInput in;
    in.dense = UniformMatrix(1, 1, -1, 1, rng).col(0);
    data.Add(in, Eigen::VectorXd::Constant(1, (coin(rng) ? 1.0 : -1.0) + noise(rng)));
  }
  MixtureDensityNetwork mdn(InputEncoder(), data.inputs[0], 1, {2, 16, 3}, 402);
  TrainConfig config;
  config.learning_rate = 3e-3;
  config.epochs = 100;
  config.seed = 403;
  Train(mdn, data, config);
  ModelInput probe;
  probe.dense = Eigen::VectorXd::Zero(1);
  const MixturePosterior bimodal = mdn.Forward(probe);
  double mass_low = 0;
  double mass_high = 0;
  for (int c = 0; c < bimodal.size(); ++c) {
    if (std::abs(bimodal.means[c](0) + 1) < 0.2) mass_low += bimodal.weights(c);
    if (std::abs(bimodal.means[c](0) - 1) < 0.2) mass_high += bimodal.weights(c);
  }

  // importance-sampled integral of an untrained 4-d conditional density
  Rng net_rng(404);
  ModelInput random_input;
  random_input.dense = UniformMatrix(5, 1, -1, 1, net_rng).col(0);
  const MixtureDensityNetwork random_net(InputEncoder(), random_input, 4, {3, 32, 4}, 405);
  const MixturePosterior q = random_net.Forward(random_input);
  const Eigen::VectorXd center = q.Mean();
  const Eigen::MatrixXd cov = 4.0 * q.TotalCovariance();
  const Eigen::MatrixXd chol = cov.llt().matrixL();
  const int n = 400000;
  std::normal_distribution<double> gauss;
  double sum = 0;
  double sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(4);
    for (int k = 0; k < 4; ++k) z(k) = gauss(net_rng);
    const Eigen::VectorXd theta = center + chol * z;
    const double w = std::exp(MixtureLogDensity(q, theta) -
                              GaussianLogDensity(center, chol, theta));
    sum += w;
    sum_sq += w * w;
  }
  const double integral = sum / n;
  const double stderr_mc = std::sqrt((sum_sq / n - integral * integral) / n);
  const bool pass = mass_low >= 0.2 && mass_high >= 0.2 &&
                    std::abs(integral - 1.0) <= 0.02;
  return {pass, Format("weight near -1: %.3f, near +1: %.3f; integral %.4f "
                       "(MC std error %.4f)",
                       mass_low, mass_high, integral, stderr_mc)};
}

// proposal correction identity and quadrature oracle
Outcome CorrectionChecks() {
  PriorBox box;
  box.low = Eigen::Vector2d(-1, -1);
  box.high = Eigen::Vector2d(1, 1);
  MixturePosterior q;
  q.weights = Eigen::Vector2d(0.5, 0.5);
  q.means = {Eigen::Vector2d(-0.3, 0.3), Eigen::Vector2d(0.4, -0.2)};
  q.chol = {Eigen::Matrix2d::Identity() * 0.4, Eigen::Matrix2d::Identity() * 0.5};
  const CorrectionResult identity = CorrectPosterior(q, box, UniformProposal{}, 10000, 2, 501);
  Rng rng(502);
  const Eigen::MatrixXd direct = SampleProposal(MixtureProposal{q, 1.0}, box, 400, rng);
  Eigen::MatrixXd corrected(2, 400);
  std::uniform_int_distribution<int> pick(0, 9999);
  for (int i = 0; i < 400; ++i) corrected.col(i) = identity.samples.col(pick(rng));
  const double p_value = testing::MmdPermutationPValue(direct, corrected, 0.3, 500, 503);

  // wide q, proposal concentrated toward a corner
  const MixturePosterior wide =
      DiagonalGaussian(Eigen::Vector2d(0.1, -0.1), Eigen::Vector2d(2.0, 2.0));
  const GaussianProposal corner = MakeGaussianProposal(
      Eigen::Vector2d(0.7, 0.7), Eigen::Vector2d(0.8, 0.8), box, 504, 400000);
  const int grid = 500;
  const double h = 2.0 / grid;
  Eigen::Vector2d moment = Eigen::Vector2d::Zero();
  double mass = 0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const Eigen::Vector2d t(-1 + (i + 0.5) * h, -1 + (j + 0.5) * h);
      const double w = std::exp(MixtureLogDensity(wide, t) -
                                ProposalLogDensity(corner, box, t));
      moment += w * t;
      mass += w;
    }
  }
  const Eigen::Vector2d oracle = moment / mass;
  const CorrectionResult shifted = CorrectPosterior(wide, box, corner, 200000, 4, 505);
  const Eigen::Vector2d estimate = shifted.samples.rowwise().mean();
  const double error = (estimate - oracle).cwiseAbs().maxCoeff() / 2.0;
  return {p_value > 0.01 && error <= 0.02 && estimate.sum() < 0.0,
          Format("identity MMD p-value %.3f; corrected mean (%.4f, %.4f) vs "
                 "quadrature (%.4f, %.4f), error %.2f%% of the box width",
                 p_value, estimate(0), estimate(1), oracle(0), oracle(1),
                 100 * error)};
}

// chamfer against brute force
Outcome ChamferOracle() {
  Rng rng(601);
  std::uniform_int_distribution<int> size(1, 200);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd a = UniformMatrix(2, size(rng), -1, 1, rng);
    const Eigen::MatrixXd b = UniformMatrix(2, size(rng), -1, 1, rng);
    double ab = 0;
    for (int i = 0; i < a.cols(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < b.cols(); ++j) best = std::min(best, (a.col(i) - b.col(j)).norm());
      ab += best;
    }
    double ba = 0;
    for (int j = 0; j < b.cols(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < a.cols(); ++i) best = std::min(best, (a.col(i) - b.col(j)).norm());
      ba += best;
    }
    const double expected = ab / a.cols() + ba / b.cols();
    if (std::abs(Chamfer(a, b) - expected) > 1e-12) ++mismatches;
  }
  Eigen::MatrixXd a(2, 1);
  a << 0, 0;
  Eigen::MatrixXd b(2, 2);
  b << 1, 0, 0, 2;
  const double hand = Chamfer(a, b);
  return {mismatches == 0 && hand == 2.5,
          Format("%d/100 mismatches against brute force; hand case %.6f",
                 mismatches, hand)};
}

nlohmann::json LoadConfig(const std::string& name) {
  std::ifstream in(fs::path(DSBI_CONFIG_DIR) / name);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config " + name);
  return nlohmann::json::parse(in);
}

// synthetic real-to-sim comparison on the wipe scene
Outcome WipeBenchmark() {
  const ExperimentConfig config = ExperimentConfigFromJson(LoadConfig("acceptance_wipe.json"));
  const fs::path out = fs::current_path() / "acceptance_wipe";
  const auto start = std::chrono::steady_clock::now();
  const EvalReport report = RunBenchmark(config, out, &std::cerr);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60;

  auto final_round = [&](uint64_t seed, Method method) -> const RoundSummary* {
    for (const CellResult& cell : report.cells) {
      if (cell.seed == seed && cell.method == method && !cell.rounds.empty()) {
        return &cell.rounds.back();
      }
    }
    return nullptr;
  };
  int wins = 0;
  int shrinks = 0;
  int above_prior = 0;
  std::ostringstream table;
  for (uint64_t seed : config.seeds) {
    const RoundSummary* rkhs = final_round(seed, Method::kBayesSimRkhs);
    const RoundSummary* mdnn = final_round(seed, Method::kBayesSimMdnn);
    if (rkhs == nullptr || mdnn == nullptr) {
      table << "\n  seed " << seed << ": missing result";
      continue;
    }
    const double scale_ratio = report.prior_std(kScale) / rkhs->marginal_std(kScale);
    const double friction_ratio =
        report.prior_std(kFriction) / rkhs->marginal_std(kFriction);
    const bool win = rkhs->eval.mean < mdnn->eval.mean;
    const bool shrink = scale_ratio >= 2 && friction_ratio >= 2;
    const bool above = rkhs->log_density_truth > report.prior_log_density;
    wins += win;
    shrinks += shrink;
    above_prior += above;
    table << Format("\n  seed %llu: distance rkhs %.4f vs mdnn %.4f; shrink scale "
                    "%.2fx friction %.2fx; log density at truth %.2f (prior %.2f)",
                    static_cast<unsigned long long>(seed), rkhs->eval.mean,
                    mdnn->eval.mean, scale_ratio, friction_ratio,
                    rkhs->log_density_truth, report.prior_log_density);
  }
  const int need = static_cast<int>(std::ceil(0.8 * config.seeds.size()));
  const bool pass = wins >= need && shrinks >= need && above_prior >= need;
  return {pass, Format("(a) rkhs closer on %d/%zu seeds, (b) scale and friction "
                       "shrink >= 2x on %d/%zu, (c) above prior density on %d/%zu; "
                       "%.1f min, report %s",
                       wins, config.seeds.size(), shrinks, config.seeds.size(),
                       above_prior, config.seeds.size(), minutes,
                       (out / "report.json").c_str()) +
                    table.str()};
}

// dataset sizes per round and bulk budgets
Outcome BudgetBookkeeping() {
  nlohmann::json j = LoadConfig("acceptance_wipe.json");
  // sizes do not depend on model quality
  j["network"] = {{"hidden_layers", 1}, {"width", 8}, {"components", 2}};
  j["train"] = {{"epochs", 1}, {"batch_size", 256}, {"learning_rate", 1e-3}};
  j["rff_features"] = 8;
  j["correction_samples"] = 2000;
  j.erase("bulk_budget");
  const ExperimentConfig config = ExperimentConfigFromJson(j);
  const InferenceConfig& inference = config.inference;
  std::ostringstream notes;
  bool pass = inference.rounds == 15 && inference.budget == 100 &&
              inference.bulk_budget == 1500;
  const ObservedTrajectory real = SimulateObservation(inference, SimParams(), inference.noise, 801);
  for (Method method : {Method::kBayesSimMdnn, Method::kBayesSimMdrff,
                        Method::kBayesSimRkhs, Method::kBayesZoomRkhs}) {
    bool sizes = true;
    const auto rounds = RunSequential(method, inference, real, 802);
    for (const RoundResult& r : rounds) sizes &= r.dataset_size == 100 * r.round;
    sizes &= rounds.size() == 15u;
    pass &= sizes;
    notes << " " << MethodName(method) << (sizes ? " ok" : " WRONG");
  }
  const ObservedTrajectory real_bulk =
      SimulateObservation(inference, SimParams(), inference.bulk_noise, 803);
  for (Method method : {Method::kNnBulk, Method::kGpBulk}) {
    const RoundResult r = RunBulk(method, inference, real_bulk, inference.bulk_budget, 804);
    const bool ok = r.dataset_size == 1500 && r.budget == 1500;
    pass &= ok;
    notes << " " << MethodName(method) << " " << r.dataset_size;
  }
  return {pass, "sizes 100 i after round i:" + notes.str()};
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// two CLI benchmark runs, byte-identical reports
Outcome Determinism() {
  const fs::path root = fs::current_path() / "acceptance_determinism";
  fs::remove_all(root);
  const std::string config = (fs::path(DSBI_CONFIG_DIR) / "smoke.json").string();
  for (const char* run : {"first", "second"}) {
    const std::string command = std::string("'") + DSBI_CLI_PATH + "' benchmark --config '" +
                                config + "' --out '" + (root / run).string() +
                                "' > /dev/null 2>&1";
    if (std::system(command.c_str()) != 0) return {false, "benchmark command failed"};
  }
  const std::string first = ReadFile(root / "first" / "report.json");
  const std::string second = ReadFile(root / "second" / "report.json");
  return {!first.empty() && first == second,
          Format("report.json %zu bytes, identical: %s", first.size(),
                 first == second ? "yes" : "no")};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& Criteria() {
  static const std::vector<Criterion> criteria = {
      {"rff kernel fidelity", KernelFidelity},
      {"permutation invariance", PermutationInvariance},
      {"gradient suite", GradientSuite},
      {"mixture sanity", MixtureSanity},
      {"proposal correction", CorrectionChecks},
      {"chamfer oracle", ChamferOracle},
      {"wipe benchmark", WipeBenchmark},
      {"budget bookkeeping", BudgetBookkeeping},
      {"determinism", Determinism},
  };
  return criteria;
}

}  // namespace
}  // namespace dsbi

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")
      ->check(CLI::Range(0, 9));
  CLI11_PARSE(app, argc, argv);

  const auto& criteria = dsbi::Criteria();
  bool all = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto start = std::chrono::steady_clock::now();
    dsbi::Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << i + 1 << " (" << criteria[i].name << "): "
              << (outcome.pass ? "PASS" : "FAIL") << " [" << seconds << " s] "
              << outcome.detail << std::endl;
    all &= outcome.pass;
  }
  return all ? 0 : 1;
}
