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

// Command-line entry point: simulate, infer, benchmark, eval, emit-plots.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsbi/benchmark.h"
#include "dsbi/common.h"
#include "dsbi/inference.h"
#include "dsbi/metrics.h"
#include "dsbi/mixture.h"
#include "dsbi/observation.h"
#include "dsbi/params.h"
#include "dsbi/sim.h"

namespace fs = std::filesystem;

namespace {

// relative output paths live under $DSBI_OUTPUT_ROOT when it is set
fs::path OutputPath(const std::string& path) {
  fs::path p(path);
  const char* root = std::getenv("DSBI_OUTPUT_ROOT");
  if (p.is_relative() && root != nullptr && *root != '\0') {
    return fs::path(root) / p;
  }
  return p;
}

// inline JSON text or a path to a JSON file
nlohmann::json LoadJson(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  try {
    if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
      return nlohmann::json::parse(arg);
    }
    std::ifstream in(arg);
    if (!in) throw dsbi::Error(dsbi::ErrorKind::kIo, "cannot read " + arg);
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw dsbi::ConfigError("invalid JSON in '" + arg + "': " + e.what());
  }
}

// a profile name or a JSON object / file
nlohmann::json NoiseArg(const std::string& arg) {
  if (arg.empty()) return "none";
  if (arg == "none" || arg == "supervised" || arg == "unsupervised") return arg;
  return LoadJson(arg);
}

void EnsureParent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream OpenOut(const fs::path& path) {
  EnsureParent(path);
  std::ofstream out(path);
  if (!out) throw dsbi::Error(dsbi::ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

int ReportError(std::string_view kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump()
            << std::endl;
  return 1;
}

struct SimulateArgs {
  std::string scenario = "wipe";
  std::string params;
  int steps = 200;
  uint64_t seed = 0;
  std::string out = "trajectory.jsonl";
  std::string noise;
  int keypoints = 4;
  std::string mode = "semantic";
  std::string observations;
};

void RunSimulate(const SimulateArgs& args) {
  const dsbi::Scenario scenario = dsbi::ParseScenario(args.scenario);
  dsbi::SimParams params;
  if (!args.params.empty()) params = dsbi::SimParamsFromJson(LoadJson(args.params));
  params.Validate();
  dsbi::SimConfig sim;
  sim.seed = args.seed;
  const dsbi::Trajectory trajectory =
      dsbi::RolloutFlagged(scenario, params, args.steps, sim);
  std::ofstream out = OpenOut(OutputPath(args.out));
  dsbi::WriteTrajectoryJsonl(trajectory, out);

  if (!args.observations.empty()) {
    dsbi::ObservationNoise noise = dsbi::NoiseFromJson(
        NoiseArg(args.noise),
        scenario, sim);
    noise.seed = args.seed;
    const dsbi::ObservedTrajectory observed = dsbi::Observe(
        trajectory, dsbi::ObjectLayout::For(scenario, sim),
        dsbi::ParseKeypointMode(args.mode), args.keypoints, noise);
    std::ofstream obs = OpenOut(OutputPath(args.observations));
    dsbi::WriteObservationJsonl(observed, obs);
  }
  std::cout << nlohmann::json{{"steps", trajectory.steps()},
                              {"diverged", trajectory.diverged},
                              {"out", OutputPath(args.out).string()}}
                   .dump()
            << std::endl;
}

struct InferArgs {
  std::string config;
  std::string method = "bayessim-rkhs";
  std::string out = "infer";
};

void RunInfer(const InferArgs& args) {
  const dsbi::ExperimentConfig config =
      dsbi::ExperimentConfigFromJson(LoadJson(args.config));
  const dsbi::Method method = dsbi::ParseMethod(args.method);
  const uint64_t seed = config.seeds.front();
  const fs::path dir = OutputPath(args.out);
  fs::create_directories(dir);
  std::ofstream log = OpenOut(dir / "rounds.jsonl");
  const dsbi::CellResult cell = dsbi::RunCell(config, method, seed, &log);
  if (!cell.error.empty()) throw dsbi::Error(dsbi::ErrorKind::kNumerical, cell.error);
  const dsbi::RoundSummary& last = cell.rounds.back();
  OpenOut(dir / "posterior.json") << dsbi::ToJson(last.posterior).dump(2) << "\n";
  std::cout << nlohmann::json{{"method", args.method},
                              {"rounds", cell.rounds.size()},
                              {"dataset_size", last.dataset_size},
                              {"mean_distance", last.eval.mean},
                              {"std_distance", last.eval.std},
                              {"truth", dsbi::ToJson(cell.truth)},
                              {"posterior", (dir / "posterior.json").string()}}
                   .dump()
            << std::endl;
}

void RunBenchmarkCommand(const std::string& config_arg, const std::string& out_arg) {
  const dsbi::ExperimentConfig config =
      dsbi::ExperimentConfigFromJson(LoadJson(config_arg));
  const fs::path dir = OutputPath(out_arg.empty() ? config.output_dir : out_arg);
  const dsbi::EvalReport report = dsbi::RunBenchmark(config, dir, &std::cerr);
  const fs::path csv = dsbi::EmitPlotData(report, dir);
  std::cout << nlohmann::json{{"report", (dir / "report.json").string()},
                              {"plot_data", csv.string()},
                              {"rows", report.rows.size()}}
                   .dump()
            << std::endl;
}

struct EvalArgs {
  std::string posterior;
  std::string scenario = "wipe";
  std::string truth;
  int n = 30;
  uint64_t seed = 0;
  int steps = 200;
};

void RunEval(const EvalArgs& args) {
  nlohmann::json posterior_json = LoadJson(args.posterior);
  if (posterior_json.contains("posterior")) posterior_json = posterior_json["posterior"];
  const dsbi::MixturePosterior posterior = dsbi::MixtureFromJson(posterior_json);
  const dsbi::SimParams truth = dsbi::SimParamsFromJson(LoadJson(args.truth));
  dsbi::EvalSpec spec;
  spec.scenario = dsbi::ParseScenario(args.scenario);
  spec.steps = args.steps;
  const dsbi::EvalResult result =
      dsbi::EvaluatePosterior(posterior, spec, truth, args.n, args.seed);
  std::cout << nlohmann::json{{"mean_distance", result.mean},
                              {"std_distance", result.std},
                              {"n", args.n},
                              {"diverged", result.diverged}}
                   .dump()
            << std::endl;
}

void RunEmitPlots(const std::string& report_arg, const std::string& out_arg) {
  const dsbi::EvalReport report = dsbi::EvalReportFromJson(LoadJson(report_arg));
  const fs::path csv = dsbi::EmitPlotData(report, OutputPath(out_arg));
  std::cout << nlohmann::json{{"plot_data", csv.string()},
                              {"rows", report.rows.size()}}
                   .dump()
            << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deformable-object simulation parameter inference"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "roll out one scene");
  simulate->add_option("--scenario", sim_args.scenario, "wipe, wind or fling");
  simulate->add_option("--params", sim_args.params,
                       "parameters as JSON text or file");
  simulate->add_option("--steps", sim_args.steps, "control steps");
  simulate->add_option("--seed", sim_args.seed, "seed");
  simulate->add_option("--out", sim_args.out, "trajectory JSON-lines file");
  simulate->add_option("--observations", sim_args.observations,
                       "also write keypoint observations here");
  simulate->add_option("--noise", sim_args.noise,
                       "noise profile name or JSON for --observations");
  simulate->add_option("--keypoints", sim_args.keypoints, "keypoints per frame");
  simulate->add_option("--mode", sim_args.mode, "semantic or diffuse");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "run one method on one seed");
  infer->add_option("--config", infer_args.config, "experiment config")->required();
  infer->add_option("--method", infer_args.method, "method name");
  infer->add_option("--out", infer_args.out, "output directory");

  std::string bench_config;
  std::string bench_out;
  auto* benchmark = app.add_subcommand("benchmark", "run the method comparison");
  benchmark->add_option("--config", bench_config, "experiment config")->required();
  benchmark->add_option("--out", bench_out, "output directory");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score a posterior against a truth");
  eval->add_option("--posterior", eval_args.posterior, "posterior JSON")->required();
  eval->add_option("--scenario", eval_args.scenario, "wipe, wind or fling");
  eval->add_option("--truth", eval_args.truth, "hidden parameters")->required();
  eval->add_option("--n", eval_args.n, "evaluation samples");
  eval->add_option("--seed", eval_args.seed, "seed");
  eval->add_option("--steps", eval_args.steps, "control steps");

  std::string plots_report;
  std::string plots_out = "plots";
  auto* plots = app.add_subcommand("emit-plots", "write plot CSVs from a report");
  plots->add_option("--report", plots_report, "report.json")->required();
  plots->add_option("--out", plots_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return ReportError("argument_error", e.what());
  }

  try {
    if (*simulate) RunSimulate(sim_args);
    if (*infer) RunInfer(infer_args);
    if (*benchmark) RunBenchmarkCommand(bench_config, bench_out);
    if (*eval) RunEval(eval_args);
    if (*plots) RunEmitPlots(plots_report, plots_out);
  } catch (const dsbi::Error& e) {
    return ReportError(dsbi::ErrorKindName(e.kind()), e.what());
  } catch (const std::exception& e) {
    return ReportError("error", e.what());
  }
  return 0;
}
