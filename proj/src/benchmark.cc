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

#include "dsbi/benchmark.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dsbi {
namespace {

constexpr uint64_t kStreamTruth = 11;
constexpr uint64_t kStreamReal = 12;
constexpr uint64_t kStreamCell = 13;
constexpr uint64_t kStreamEval = 14;

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd FromStd(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

EvalSpec SpecFor(const InferenceConfig& inference) {
  return {inference.scenario, inference.sim, inference.steps,
          inference.prior};
}

RoundSummary Summarize(const ExperimentConfig& config, const RoundResult& r,
                       const SimParams& truth, uint64_t cell_seed) {
  RoundSummary s;
  s.round = r.round;
  s.dataset_size = r.dataset_size;
  s.diverged = r.diverged;
  s.degenerate = r.degenerate;
  s.posterior = r.posterior;
  s.train_loss = r.metrics.final_train();
  s.validation_loss = r.metrics.final_validation();
  s.wall_time_s = r.wall_time_s;
  s.log_density_truth = MixtureLogDensity(r.posterior, truth.ToVector());
  s.marginal_std = r.posterior.TotalCovariance().diagonal().cwiseSqrt();
  s.eval = EvaluatePosterior(
      r.posterior, SpecFor(config.inference), truth, config.eval_samples,
      DeriveSeed(cell_seed, kStreamEval, static_cast<uint64_t>(r.round)));
  return s;
}

std::string FormatDouble(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void ExperimentConfig::Validate() const {
  inference.Validate();
  if (eval_samples < 1) throw ConfigError("eval_samples must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one master seed is required");
  if (!(truth_margin >= 0 && truth_margin < 0.5)) {
    throw ConfigError("truth_margin must lie in [0, 0.5)");
  }
  if (truth) {
    truth->Validate();
    if (!inference.prior.Contains(truth->ToVector())) {
      throw ConfigError("truth lies outside the prior box");
    }
  }
}

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be an object");
  ExperimentConfig c;
  c.inference = InferenceConfigFromJson(j);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j["methods"]) {
      c.methods.push_back(ParseMethod(m.get<std::string>()));
    }
  }
  c.eval_samples = j.value("eval_samples", c.eval_samples);
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
  c.output_dir = j.value("output_dir", c.output_dir);
  if (j.contains("truth") && !j["truth"].is_null()) {
    c.truth = SimParamsFromJson(j["truth"]);
  }
  c.truth_margin = j.value("truth_margin", c.truth_margin);
  c.Validate();
  return c;
}

nlohmann::json ToJson(const ExperimentConfig& c) {
  nlohmann::json j = ToJson(c.inference);
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(MethodName(m));
  j["methods"] = methods;
  j["eval_samples"] = c.eval_samples;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["truth"] = c.truth ? ToJson(*c.truth) : nlohmann::json(nullptr);
  j["truth_margin"] = c.truth_margin;
  return j;
}

SimParams TruthForSeed(const ExperimentConfig& config, uint64_t seed) {
  if (config.truth) return *config.truth;
  Rng rng(DeriveSeed(seed, kStreamTruth));
  return SimParams::FromVector(
      config.inference.prior.Shrunk(config.truth_margin).Sample(rng));
}

CellResult RunCell(const ExperimentConfig& config, Method method,
                   uint64_t seed, std::ostream* round_log) {
  const auto start = std::chrono::steady_clock::now();
  CellResult cell;
  cell.seed = seed;
  cell.method = method;
  cell.truth = TruthForSeed(config, seed);
  const InferenceConfig& inference = config.inference;
  const uint64_t cell_seed =
      DeriveSeed(seed, kStreamCell, static_cast<uint64_t>(method));
  try {
    SimConfig sim = inference.sim;
    sim.seed = DeriveSeed(seed, kStreamReal);
    const Trajectory real_trajectory =
        RolloutFlagged(inference.scenario, cell.truth, inference.steps, sim);
    auto record = [&](const RoundResult& r) {
      if (round_log != nullptr) *round_log << RoundLogEntry(r).dump() << "\n";
      cell.rounds.push_back(Summarize(config, r, cell.truth, cell_seed));
    };
    if (IsBulk(method)) {
      const ObservedTrajectory real = ObserveWith(
          inference, real_trajectory, inference.bulk_noise,
          DeriveSeed(seed, kStreamReal));
      RoundResult r =
          RunBulk(method, inference, real, inference.bulk_budget, cell_seed);
      r.round = inference.rounds;
      record(r);
    } else {
      const ObservedTrajectory real = ObserveWith(
          inference, real_trajectory, inference.noise,
          DeriveSeed(seed, kStreamReal));
      RunSequential(method, inference, real, cell_seed, record);
    }
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  cell.wall_time_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return cell;
}

std::vector<ReportRow> AggregateRows(const ExperimentConfig& config,
                                     const std::vector<CellResult>& cells) {
  std::vector<ReportRow> rows;
  for (Method method : config.methods) {
    std::map<int, std::vector<const RoundSummary*>> by_round;
    for (const CellResult& cell : cells) {
      if (cell.method != method) continue;
      for (const RoundSummary& s : cell.rounds) by_round[s.round].push_back(&s);
    }
    for (const auto& [round, summaries] : by_round) {
      double sum = 0;
      int count = 0;
      for (const auto* s : summaries) {
        for (double d : s->eval.distances) {
          sum += d;
          ++count;
        }
      }
      const double mean = sum / count;
      double sq = 0;
      for (const auto* s : summaries) {
        for (double d : s->eval.distances) sq += (d - mean) * (d - mean);
      }
      rows.push_back({std::string(MethodName(method)), round, mean,
                      std::sqrt(sq / count),
                      static_cast<int>(summaries.size())});
    }
  }
  return rows;
}

EvalReport RunBenchmark(const ExperimentConfig& config,
                        const std::filesystem::path& out_dir,
                        std::ostream* progress) {
  config.Validate();
  EvalReport report;
  report.scenario = std::string(ScenarioName(config.inference.scenario));
  report.config = ToJson(config);
  report.prior_log_density = config.inference.prior.LogDensity();
  report.prior_std = config.inference.prior.Stddev();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  for (uint64_t seed : config.seeds) {
    for (Method method : config.methods) {
      std::ofstream log;
      if (!out_dir.empty()) {
        const auto dir = out_dir / ("seed_" + std::to_string(seed)) /
                         std::string(MethodName(method));
        std::filesystem::create_directories(dir);
        log.open(dir / "rounds.jsonl");
      }
      report.cells.push_back(
          RunCell(config, method, seed, log.is_open() ? &log : nullptr));
      const CellResult& cell = report.cells.back();
      if (progress != nullptr) {
        *progress << "seed " << seed << " " << MethodName(method);
        if (!cell.error.empty()) {
          *progress << " failed: " << cell.error;
        } else if (!cell.rounds.empty()) {
          *progress << " distance " << cell.rounds.back().eval.mean;
        }
        *progress << " (" << cell.wall_time_s << " s)\n";
        progress->flush();
      }
    }
  }
  report.rows = AggregateRows(config, report.cells);

  if (!out_dir.empty()) {
    std::ofstream(out_dir / "report.json") << ToJson(report).dump(2) << "\n";
    std::ofstream(out_dir / "timings.json")
        << TimingsJson(report).dump(2) << "\n";
  }
  return report;
}

nlohmann::json ToJson(const EvalReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellResult& cell : report.cells) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const RoundSummary& s : cell.rounds) {
      rounds.push_back({{"round", s.round},
                        {"dataset_size", s.dataset_size},
                        {"diverged_rollouts", s.diverged},
                        {"degenerate", s.degenerate},
                        {"mean_distance", s.eval.mean},
                        {"std_distance", s.eval.std},
                        {"diverged_evaluations", s.eval.diverged},
                        {"log_density_truth", s.log_density_truth},
                        {"marginal_std", ToStd(s.marginal_std)},
                        {"train_loss", s.train_loss},
                        {"validation_loss", s.validation_loss},
                        {"posterior", ToJson(s.posterior)}});
    }
    cells.push_back({{"seed", cell.seed},
                     {"method", MethodName(cell.method)},
                     {"truth", ToJson(cell.truth)},
                     {"error", cell.error.empty() ? nlohmann::json(nullptr)
                                                  : nlohmann::json(cell.error)},
                     {"rounds", rounds}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const ReportRow& r : report.rows) {
    rows.push_back({{"method", r.method},
                    {"round", r.round},
                    {"mean_distance", r.mean_distance},
                    {"std_distance", r.std_distance},
                    {"seeds", r.seeds}});
  }
  return {{"scenario", report.scenario},
          {"config", report.config},
          {"prior_log_density", report.prior_log_density},
          {"prior_std", ToStd(report.prior_std)},
          {"parameter_names", kSimParamNames},
          {"rows", rows},
          {"cells", cells}};
}

EvalReport EvalReportFromJson(const nlohmann::json& j) {
  EvalReport report;
  try {
    report.scenario = j.at("scenario").get<std::string>();
    report.config = j.value("config", nlohmann::json::object());
    report.prior_log_density = j.value("prior_log_density", 0.0);
    if (j.contains("prior_std")) {
      report.prior_std = FromStd(j["prior_std"].get<std::vector<double>>());
    }
    for (const auto& r : j.at("rows")) {
      report.rows.push_back({r.at("method").get<std::string>(),
                             r.at("round").get<int>(),
                             r.at("mean_distance").get<double>(),
                             r.at("std_distance").get<double>(),
                             r.at("seeds").get<int>()});
    }
    for (const auto& c : j.value("cells", nlohmann::json::array())) {
      CellResult cell;
      cell.seed = c.at("seed").get<uint64_t>();
      cell.method = ParseMethod(c.at("method").get<std::string>());
      cell.truth = SimParamsFromJson(c.at("truth"));
      if (!c.at("error").is_null()) cell.error = c["error"].get<std::string>();
      for (const auto& r : c.at("rounds")) {
        RoundSummary s;
        s.round = r.at("round").get<int>();
        s.dataset_size = r.at("dataset_size").get<int>();
        s.diverged = r.value("diverged_rollouts", 0);
        s.degenerate = r.value("degenerate", false);
        s.eval.mean = r.at("mean_distance").get<double>();
        s.eval.std = r.at("std_distance").get<double>();
        s.eval.diverged = r.value("diverged_evaluations", 0);
        s.log_density_truth = r.at("log_density_truth").get<double>();
        s.marginal_std =
            FromStd(r.at("marginal_std").get<std::vector<double>>());
        s.train_loss = r.value("train_loss", 0.0);
        s.validation_loss = r.value("validation_loss", 0.0);
        s.posterior = MixtureFromJson(r.at("posterior"));
        cell.rounds.push_back(std::move(s));
      }
      report.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return report;
}

nlohmann::json TimingsJson(const EvalReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellResult& cell : report.cells) {
    std::vector<double> rounds;
    for (const RoundSummary& s : cell.rounds) rounds.push_back(s.wall_time_s);
    cells.push_back({{"seed", cell.seed},
                     {"method", MethodName(cell.method)},
                     {"wall_time_s", cell.wall_time_s},
                     {"round_wall_time_s", rounds}});
  }
  return {{"cells", cells}};
}

void WritePlotCsv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << "method,round,mean_distance,std_distance,seeds\n";
  for (const ReportRow& r : rows) {
    out << r.method << "," << r.round << "," << FormatDouble(r.mean_distance)
        << "," << FormatDouble(r.std_distance) << "," << r.seeds << "\n";
  }
}

std::vector<ReportRow> ParsePlotCsv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  if (!std::getline(in, line) ||
      line != "method,round,mean_distance,std_distance,seeds") {
    throw ArgumentError("unexpected CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw ArgumentError("malformed CSV row: " + line);
    rows.push_back({fields[0], std::stoi(fields[1]), std::stod(fields[2]),
                    std::stod(fields[3]), std::stoi(fields[4])});
  }
  return rows;
}

std::filesystem::path EmitPlotData(const EvalReport& report,
                                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / (report.scenario + ".csv");
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  WritePlotCsv(report.rows, out);
  return path;
}

}  // namespace dsbi
