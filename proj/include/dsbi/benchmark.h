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

#ifndef DSBI_BENCHMARK_H_
#define DSBI_BENCHMARK_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <Eigen/Core>

#include "dsbi/inference.h"
#include "dsbi/metrics.h"

namespace dsbi {

struct ExperimentConfig {
  InferenceConfig inference;
  std::vector<Method> methods = {Method::kBayesSimRkhs};
  int eval_samples = 30;
  std::vector<uint64_t> seeds = {0};
  std::string output_dir = "benchmark";
  // hidden parameters; drawn per seed from the prior box shrunk by
  // truth_margin on each side when absent
  std::optional<SimParams> truth;
  double truth_margin = 0.2;

  void Validate() const;
};

// inference fields sit at the top level next to methods, eval_samples,
// seeds, output_dir and truth
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const ExperimentConfig& config);

// hidden parameters used for a master seed
SimParams TruthForSeed(const ExperimentConfig& config, uint64_t seed);

struct RoundSummary {
  int round = 0;
  int dataset_size = 0;
  int diverged = 0;
  bool degenerate = false;
  EvalResult eval;
  double log_density_truth = 0;
  Eigen::VectorXd marginal_std;  // physical units
  MixturePosterior posterior;
  double train_loss = 0;
  double validation_loss = 0;
  double wall_time_s = 0;
};

struct CellResult {
  uint64_t seed = 0;
  Method method = Method::kBayesSimRkhs;
  SimParams truth;
  std::vector<RoundSummary> rounds;
  std::string error;  // empty on success
  double wall_time_s = 0;
};

// aggregate over seeds: distances of every evaluation sample of every seed
struct ReportRow {
  std::string method;
  int round = 0;
  double mean_distance = 0;
  double std_distance = 0;
  int seeds = 0;
};

struct EvalReport {
  std::string scenario;
  nlohmann::json config;
  double prior_log_density = 0;
  Eigen::VectorXd prior_std;
  std::vector<CellResult> cells;
  std::vector<ReportRow> rows;
};

// per (method, round) rows in method order, rounds ascending; bulk methods
// report a single row at the final round
std::vector<ReportRow> AggregateRows(const ExperimentConfig& config,
                                     const std::vector<CellResult>& cells);

// one cell: a method under one master seed
CellResult RunCell(const ExperimentConfig& config, Method method,
                   uint64_t seed, std::ostream* round_log = nullptr);

// Runs every (seed, method) cell. When `out_dir` is non-empty it receives
// report.json (deterministic), timings.json and per-cell rounds.jsonl logs.
EvalReport RunBenchmark(const ExperimentConfig& config,
                        const std::filesystem::path& out_dir = {},
                        std::ostream* progress = nullptr);

// report.json content; wall times are left out so reruns are byte-identical
nlohmann::json ToJson(const EvalReport& report);
EvalReport EvalReportFromJson(const nlohmann::json& j);
nlohmann::json TimingsJson(const EvalReport& report);

// CSV with columns method,round,mean_distance,std_distance,seeds
void WritePlotCsv(const std::vector<ReportRow>& rows, std::ostream& out);
std::vector<ReportRow> ParsePlotCsv(std::istream& in);
// writes <out_dir>/<scenario>.csv and returns its path
std::filesystem::path EmitPlotData(const EvalReport& report,
                                   const std::filesystem::path& out_dir);

}  // namespace dsbi

#endif  // DSBI_BENCHMARK_H_
