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
#include <chrono>
#include <string>
#include <thread>

#include "dsbi/encoder.h"
#include "dsbi/features.h"
#include "dsbi/gp.h"
#include "dsbi/regressor.h"

namespace dsbi {
namespace {

// stream tags for DeriveSeed
enum Stream : uint64_t {
  kStreamProposal = 1,
  kStreamRollout = 2,
  kStreamBasis = 3,
  kStreamModel = 4,
  kStreamTrain = 5,
  kStreamCorrection = 6,
  kStreamMass = 7,
  kStreamNoise = 8,
};

struct MethodInfo {
  Method method;
  std::string_view name;
};

constexpr MethodInfo kMethodNames[] = {
    {Method::kBayesSimMdnn, "bayessim-mdnn"},
    {Method::kBayesSimMdrff, "bayessim-mdrff"},
    {Method::kBayesSimRkhs, "bayessim-rkhs"},
    {Method::kBayesZoomRkhs, "bayeszoom-rkhs"},
    {Method::kNnBulk, "nn-bulk"},
    {Method::kGpBulk, "gp-bulk"},
};

// keypoints pooled from the first few trajectories for the median heuristic
constexpr int kBandwidthSamples = 16;

template <typename Fn>
void ParallelFor(int n, int workers, Fn&& fn) {
  workers = std::clamp(workers, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

bool UsesEmbedding(Method method) {
  return method == Method::kBayesSimRkhs || method == Method::kBayesZoomRkhs;
}

ModelInput DenseInput(Eigen::VectorXd dense) {
  ModelInput input;
  input.dense = std::move(dense);
  return input;
}

ModelInput Featurize(Method method, const InferenceConfig& config,
                     const RoundState& state,
                     const ObservedTrajectory& observed) {
  switch (method) {
    case Method::kBayesSimRkhs:
    case Method::kBayesZoomRkhs:
      return RkhsInput(observed, config.frames);
    case Method::kBayesSimMdrff:
      return DenseInput(MdrffFeatures(observed, *state.mdrff_basis));
    case Method::kBayesSimMdnn:
    case Method::kNnBulk:
    case Method::kGpBulk:
      return DenseInput(SummaryStats(observed));
  }
  throw ArgumentError("unknown method");
}

double EmbeddingBandwidth(const Dataset& data) {
  std::vector<const Eigen::MatrixXd*> sets;
  int cols = 0;
  for (int i = 0; i < std::min(data.size(), kBandwidthSamples); ++i) {
    for (const Frame& f : data.inputs[i].frames) {
      sets.push_back(&f.points);
      cols += static_cast<int>(f.points.cols());
    }
  }
  Eigen::MatrixXd pooled(2, cols);
  int c = 0;
  for (const auto* s : sets) {
    pooled.middleCols(c, s->cols()) = *s;
    c += static_cast<int>(s->cols());
  }
  return MedianPairwiseDistance(pooled);
}

InputEncoder MakeEncoder(Method method, const InferenceConfig& config,
                         const Dataset& data, uint64_t seed) {
  if (!UsesEmbedding(method)) return InputEncoder();
  return InputEncoder(SampleBasis(config.rff_features, 2,
                                  EmbeddingBandwidth(data), seed,
                                  /*trainable=*/true));
}

MixturePosterior PriorFallback(const ParamNormalizer& normalizer) {
  return DiagonalGaussian(normalizer.box.Center(), normalizer.box.Stddev());
}

}  // namespace

Method ParseMethod(std::string_view name) {
  for (const auto& info : kMethodNames) {
    if (info.name == name) return info.method;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view MethodName(Method method) {
  for (const auto& info : kMethodNames) {
    if (info.method == method) return info.name;
  }
  return "unknown";
}

bool IsBulk(Method method) {
  return method == Method::kNnBulk || method == Method::kGpBulk;
}

void InferenceConfig::Validate() const {
  sim.Validate();
  prior.Validate();
  noise.Validate();
  bulk_noise.Validate();
  network.Validate();
  train.Validate();
  if (steps < 2) throw ConfigError("steps must be >= 2");
  if (keypoints < 1) throw ConfigError("keypoints must be >= 1");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (bulk_budget < 2) throw ConfigError("bulk_budget must be >= 2");
  if (frames < 1 || frames > steps) {
    throw ConfigError("frames must lie in [1, steps]");
  }
  if (rff_features < 1) throw ConfigError("rff_features must be >= 1");
  if (correction_samples < 1000) {
    throw ConfigError("correction_samples must be >= 1000");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (keypoints > ObjectLayout::For(scenario, sim).num_particles) {
    throw ConfigError("more keypoints than particles");
  }
}

InferenceConfig InferenceConfig::ForScenario(Scenario scenario) {
  InferenceConfig config;
  config.scenario = scenario;
  config.noise = NoiseProfile("unsupervised", scenario, config.sim);
  config.bulk_noise = NoiseProfile("supervised", scenario, config.sim);
  return config;
}

InferenceConfig InferenceConfigFromJson(const nlohmann::json& j) {
  const Scenario scenario =
      ParseScenario(j.value("scenario", std::string("wipe")));
  InferenceConfig c = InferenceConfig::ForScenario(scenario);
  if (j.contains("sim")) c.sim = SimConfigFromJson(j["sim"]);
  c.steps = j.value("steps", c.steps);
  if (j.contains("prior")) c.prior = PriorBoxFromJson(j["prior"]);
  if (j.contains("keypoint_mode")) {
    c.keypoint_mode = ParseKeypointMode(j["keypoint_mode"].get<std::string>());
  }
  c.keypoints = j.value("keypoints", c.keypoints);
  c.noise = NoiseFromJson(j.value("noise", nlohmann::json("unsupervised")),
                          scenario, c.sim);
  c.bulk_noise = NoiseFromJson(
      j.value("bulk_noise", nlohmann::json("supervised")), scenario, c.sim);
  c.rounds = j.value("rounds", c.rounds);
  c.budget = j.value("budget", c.budget);
  c.bulk_budget = j.value("bulk_budget", c.rounds * c.budget);
  c.frames = j.value("frames", c.frames);
  c.rff_features = j.value("rff_features", c.rff_features);
  if (j.contains("network")) c.network = NetworkConfigFromJson(j["network"]);
  if (j.contains("train")) c.train = TrainConfigFromJson(j["train"]);
  c.correction_samples = j.value("correction_samples", c.correction_samples);
  c.workers = j.value("workers", c.workers);
  c.Validate();
  return c;
}

nlohmann::json ToJson(const InferenceConfig& c) {
  return {{"scenario", ScenarioName(c.scenario)},
          {"sim", ToJson(c.sim)},
          {"steps", c.steps},
          {"prior", ToJson(c.prior)},
          {"keypoint_mode", KeypointModeName(c.keypoint_mode)},
          {"keypoints", c.keypoints},
          {"noise", ToJson(c.noise)},
          {"bulk_noise", ToJson(c.bulk_noise)},
          {"rounds", c.rounds},
          {"budget", c.budget},
          {"bulk_budget", c.bulk_budget},
          {"frames", c.frames},
          {"rff_features", c.rff_features},
          {"network", ToJson(c.network)},
          {"train", ToJson(c.train)},
          {"correction_samples", c.correction_samples}};
}

Eigen::VectorXd ParamNormalizer::Normalize(const Eigen::VectorXd& theta) const {
  return (2.0 * (theta - box.low).array() / box.Width().array() - 1.0).matrix();
}

Eigen::VectorXd ParamNormalizer::Denormalize(const Eigen::VectorXd& z) const {
  return (box.Center().array() + 0.5 * box.Width().array() * z.array())
      .matrix();
}

MixturePosterior ParamNormalizer::ToPhysical(
    const MixturePosterior& normalized) const {
  return TransformAffine(normalized, box.Center(), 0.5 * box.Width());
}

PriorBox ParamNormalizer::UnitBox(int dim) {
  return {Eigen::VectorXd::Constant(dim, -1.0),
          Eigen::VectorXd::Constant(dim, 1.0)};
}

ObservedTrajectory ObserveWith(const InferenceConfig& config,
                               const Trajectory& trajectory,
                               const ObservationNoise& noise, uint64_t seed) {
  ObservationNoise seeded = noise;
  seeded.seed = DeriveSeed(seed, kStreamNoise);
  return Observe(trajectory, ObjectLayout::For(config.scenario, config.sim),
                 config.keypoint_mode, config.keypoints, seeded);
}

ObservedTrajectory SimulateObservation(const InferenceConfig& config,
                                       const SimParams& params,
                                       const ObservationNoise& noise,
                                       uint64_t seed) {
  SimConfig sim = config.sim;
  sim.seed = seed;
  const Trajectory trajectory =
      RolloutFlagged(config.scenario, params, config.steps, sim);
  return ObserveWith(config, trajectory, noise, seed);
}

RoundResult RunRound(RoundState& state, Method method,
                     const InferenceConfig& config,
                     const ObservedTrajectory& real, int budget,
                     uint64_t seed) {
  if (IsBulk(method)) throw ArgumentError("bulk methods do not run rounds");
  if (budget < 1) throw ArgumentError("budget must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const int round = state.round + 1;
  const ParamNormalizer normalizer{config.prior};
  const PriorBox unit = ParamNormalizer::UnitBox(config.prior.dim());
  const uint64_t round_seed = DeriveSeed(seed, static_cast<uint64_t>(round));

  Eigen::MatrixXd z;
  try {
    Rng rng(DeriveSeed(round_seed, kStreamProposal));
    z = SampleProposal(state.proposal, unit, budget, rng);
  } catch (const DegeneratePosteriorError&) {
    state.proposal = UniformProposal{};
    Rng rng(DeriveSeed(round_seed, kStreamProposal));
    z = SampleProposal(state.proposal, unit, budget, rng);
  }

  std::vector<ObservedTrajectory> observed(budget);
  ParallelFor(budget, config.workers, [&](int i) {
    const SimParams params = SimParams::FromVector(normalizer.Denormalize(z.col(i)));
    observed[i] = SimulateObservation(
        config, params, config.noise,
        DeriveSeed(round_seed, kStreamRollout, static_cast<uint64_t>(i)));
  });

  if (method == Method::kBayesSimMdrff && !state.mdrff_basis) {
    Eigen::MatrixXd flat(FlattenTrajectory(observed[0]).size(), budget);
    for (int i = 0; i < budget; ++i) flat.col(i) = FlattenTrajectory(observed[i]);
    state.mdrff_basis =
        SampleBasis(config.rff_features, static_cast<int>(flat.rows()),
                    MedianPairwiseDistance(flat),
                    DeriveSeed(seed, kStreamBasis), /*trainable=*/false);
  }
  for (int i = 0; i < budget; ++i) {
    state.diverged += observed[i].diverged;
    state.data.Add(Featurize(method, config, state, observed[i]), z.col(i));
  }
  state.history.weights.push_back(budget);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PooledProposal>) {
          throw ArgumentError("a round proposal cannot itself be pooled");
        } else {
          state.history.parts.push_back(p);
        }
      },
      state.proposal);

  RoundResult result;
  result.round = round;
  result.method = method;
  result.budget = budget;
  result.dataset_size = state.data.size();
  result.diverged = state.diverged;

  TrainConfig train = config.train;
  train.seed = DeriveSeed(round_seed, kStreamTrain);
  InputEncoder encoder =
      MakeEncoder(method, config, state.data, DeriveSeed(round_seed, kStreamBasis));
  const ModelInput real_input = Featurize(method, config, state, real);
  const int dim = config.prior.dim();

  MixturePosterior q;
  int components = config.network.components;
  if (method == Method::kBayesZoomRkhs) {
    GaussianRegressor model(std::move(encoder), state.data.inputs[0], dim,
                            config.network,
                            DeriveSeed(round_seed, kStreamModel));
    result.metrics = Train(model, state.data, train);
    q = model.Posterior(real_input);
    components = 1;
  } else {
    MixtureDensityNetwork model(std::move(encoder), state.data.inputs[0], dim,
                                config.network,
                                DeriveSeed(round_seed, kStreamModel));
    result.metrics = Train(model, state.data, train);
    q = model.Forward(real_input);
  }

  try {
    const CorrectionResult corrected =
        CorrectPosterior(q, unit, state.history, config.correction_samples,
                         components, DeriveSeed(round_seed, kStreamCorrection));
    result.effective_sample_size = corrected.effective_sample_size;
    result.posterior = normalizer.ToPhysical(corrected.fit);
    state.proposal = MakeMixtureProposal(corrected.fit, unit,
                                         DeriveSeed(round_seed, kStreamMass));
  } catch (const DegeneratePosteriorError&) {
    result.degenerate = true;
    result.posterior = PriorFallback(normalizer);
    state.proposal = UniformProposal{};
  }
  state.round = round;
  result.wall_time_s = Seconds(start);
  return result;
}

std::vector<RoundResult> RunSequential(
    Method method, const InferenceConfig& config,
    const ObservedTrajectory& real, uint64_t seed,
    const std::function<void(const RoundResult&)>& on_round) {
  RoundState state;
  std::vector<RoundResult> results;
  for (int r = 0; r < config.rounds; ++r) {
    results.push_back(RunRound(state, method, config, real, config.budget, seed));
    if (on_round) on_round(results.back());
  }
  return results;
}

RoundResult RunBulk(Method method, const InferenceConfig& config,
                    const ObservedTrajectory& real, int budget,
                    uint64_t seed) {
  if (!IsBulk(method)) throw ArgumentError("not a bulk method");
  if (budget < 2) throw ArgumentError("bulk budget must be >= 2");
  const auto start = std::chrono::steady_clock::now();
  const ParamNormalizer normalizer{config.prior};
  const PriorBox unit = ParamNormalizer::UnitBox(config.prior.dim());
  const int dim = config.prior.dim();

  Rng rng(DeriveSeed(seed, kStreamProposal));
  const Eigen::MatrixXd z = SampleProposal(UniformProposal{}, unit, budget, rng);
  std::vector<ObservedTrajectory> observed(budget);
  ParallelFor(budget, config.workers, [&](int i) {
    const SimParams params = SimParams::FromVector(normalizer.Denormalize(z.col(i)));
    observed[i] = SimulateObservation(
        config, params, config.bulk_noise,
        DeriveSeed(seed, kStreamRollout, static_cast<uint64_t>(i)));
  });

  RoundState state;
  for (int i = 0; i < budget; ++i) {
    state.diverged += observed[i].diverged;
    state.data.Add(Featurize(method, config, state, observed[i]), z.col(i));
  }
  RoundResult result;
  result.round = 1;
  result.method = method;
  result.budget = budget;
  result.dataset_size = state.data.size();
  result.diverged = state.diverged;
  const ModelInput real_input = Featurize(method, config, state, real);

  if (method == Method::kNnBulk) {
    TrainConfig train = config.train;
    train.seed = DeriveSeed(seed, kStreamTrain);
    GaussianRegressor model(InputEncoder(), state.data.inputs[0], dim,
                            config.network, DeriveSeed(seed, kStreamModel));
    result.metrics = Train(model, state.data, train);
    result.posterior = normalizer.ToPhysical(model.Posterior(real_input));
  } else {
    const int features = static_cast<int>(state.data.inputs[0].dense.size());
    Eigen::MatrixXd x(features, budget);
    for (int i = 0; i < budget; ++i) x.col(i) = state.data.inputs[i].dense;
    const Eigen::VectorXd shift = x.rowwise().mean();
    Eigen::VectorXd scale =
        ((x.colwise() - shift).array().square().rowwise().mean()).sqrt();
    for (int k = 0; k < features; ++k) {
      if (!(scale[k] > 1e-12)) scale[k] = 1.0;
    }
    x = (x.colwise() - shift).array().colwise() / scale.array();
    const Eigen::VectorXd x_real =
        (real_input.dense - shift).array() / scale.array();

    Eigen::VectorXd mean(dim);
    Eigen::VectorXd stddev(dim);
    for (int d = 0; d < dim; ++d) {
      Eigen::VectorXd y(budget);
      for (int i = 0; i < budget; ++i) y[i] = state.data.targets[i][d];
      const GpModel gp = GpFit(x, y, DefaultHyperGrid(x, y));
      const GpPrediction pred = GpPredict(gp, x_real);
      mean[d] = pred.mean;
      stddev[d] = std::sqrt(pred.variance + gp.hyper.noise_variance);
    }
    result.posterior = normalizer.ToPhysical(DiagonalGaussian(mean, stddev));
  }
  result.wall_time_s = Seconds(start);
  return result;
}

nlohmann::json RoundLogEntry(const RoundResult& r) {
  nlohmann::json entry = {
      {"round", r.round},
      {"method", MethodName(r.method)},
      {"budget", r.budget},
      {"dataset_size", r.dataset_size},
      {"diverged", r.diverged},
      {"degenerate", r.degenerate},
      {"effective_sample_size", r.effective_sample_size},
      {"posterior", ToJson(r.posterior)},
      {"wall_time_s", r.wall_time_s}};
  if (!r.metrics.train_loss.empty()) {
    entry["train_nll"] = r.metrics.final_train();
    entry["val_nll"] = r.metrics.final_validation();
  } else {
    entry["train_nll"] = nullptr;
    entry["val_nll"] = nullptr;
  }
  return entry;
}

}  // namespace dsbi
