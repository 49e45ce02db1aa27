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

#ifndef DSBI_SRC_TRAIN_LOOP_H_
#define DSBI_SRC_TRAIN_LOOP_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dsbi/mdn.h"
#include "dsbi/nn.h"

namespace dsbi::internal {

template <typename Model>
double MeanLoss(const Model& model, const Dataset& data,
                const std::vector<int>& indices, int batch_size) {
  double total = 0;
  for (size_t start = 0; start < indices.size(); start += batch_size) {
    const size_t end = std::min(indices.size(), start + batch_size);
    std::vector<const ModelInput*> inputs;
    std::vector<const Eigen::VectorXd*> targets;
    for (size_t i = start; i < end; ++i) {
      inputs.push_back(&data.inputs[indices[i]]);
      targets.push_back(&data.targets[indices[i]]);
    }
    total += model.Loss(inputs, targets) * static_cast<double>(end - start);
  }
  return total / static_cast<double>(indices.size());
}

// Adam over shuffled mini-batches; fixed data order per (seed, epoch)
template <typename Model>
TrainMetrics RunTraining(Model& model, const Dataset& data,
                         const TrainConfig& config, DataSplit split) {
  TrainMetrics metrics;
  metrics.train_size = static_cast<int>(split.train.size());
  metrics.validation_size = static_cast<int>(split.validation.size());

  std::vector<const ModelInput*> train_inputs;
  for (int i : split.train) train_inputs.push_back(&data.inputs[i]);
  model.encoder().FitStandardizer(train_inputs);

  Adam adam({.learning_rate = config.learning_rate});
  std::vector<int> order = split.train;
  std::vector<std::vector<double>> best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(DeriveSeed(config.seed, 0x5eed, static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const ModelInput*> inputs;
      std::vector<const Eigen::VectorXd*> targets;
      for (size_t i = start; i < end; ++i) {
        inputs.push_back(&data.inputs[order[i]]);
        targets.push_back(&data.targets[order[i]]);
      }
      model.ZeroGrad();
      const double loss = model.LossAndGrad(inputs, targets);
      if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
      total += loss * static_cast<double>(end - start);
      adam.Step(model.Params());
      model.Project();
    }
    metrics.train_loss.push_back(total / static_cast<double>(order.size()));
    const double val =
        MeanLoss(model, data, split.validation, config.batch_size);
    if (!std::isfinite(val)) throw TrainingDiverged(epoch);
    metrics.validation_loss.push_back(val);
    if (config.keep_best && val < best_loss) {
      best_loss = val;
      metrics.best_epoch = epoch;
      best.clear();
      for (const ParamView& p : model.Params()) {
        best.emplace_back(p.value.begin(), p.value.end());
      }
    }
  }
  if (config.keep_best && !best.empty()) {
    auto params = model.Params();
    for (size_t i = 0; i < params.size(); ++i) {
      std::copy(best[i].begin(), best[i].end(), params[i].value.begin());
    }
  }
  return metrics;
}

}  // namespace dsbi::internal

#endif  // DSBI_SRC_TRAIN_LOOP_H_
