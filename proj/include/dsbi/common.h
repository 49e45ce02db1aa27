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

#ifndef DSBI_COMMON_H_
#define DSBI_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace dsbi {

using Vec2 = Eigen::Vector2d;
// 2-D point cloud, one point per column
using Points2 = Eigen::Matrix2Xd;

using Rng = std::mt19937_64;

enum class ErrorKind {
  kConfig,
  kArgument,
  kSimulationDiverged,
  kTrainingDiverged,
  kNumerical,
  kDegeneratePosterior,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// base exception for every failure surfaced by the library
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::kConfig, message) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message)
      : Error(ErrorKind::kArgument, message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error(ErrorKind::kNumerical, message) {}
};

class DegeneratePosteriorError : public Error {
 public:
  explicit DegeneratePosteriorError(const std::string& message)
      : Error(ErrorKind::kDegeneratePosterior, message) {}
};

class SimulationDiverged : public Error {
 public:
  explicit SimulationDiverged(int step)
      : Error(ErrorKind::kSimulationDiverged,
              "simulation diverged at step " + std::to_string(step)),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(int epoch)
      : Error(ErrorKind::kTrainingDiverged,
              "training loss became non-finite at epoch " +
                  std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// splitmix64 finalizer; used to derive independent child seeds
uint64_t MixSeed(uint64_t x);

// seed for child stream `stream` of `parent`
inline uint64_t DeriveSeed(uint64_t parent, uint64_t stream) {
  return MixSeed(MixSeed(parent) ^ (stream + 0x9e3779b97f4a7c15ULL));
}

inline uint64_t DeriveSeed(uint64_t parent, uint64_t a, uint64_t b) {
  return DeriveSeed(DeriveSeed(parent, a), b);
}

}  // namespace dsbi

#endif  // DSBI_COMMON_H_
