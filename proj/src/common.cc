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

#include "dsbi/common.h"

namespace dsbi {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return "config_error";
    case ErrorKind::kArgument:
      return "argument_error";
    case ErrorKind::kSimulationDiverged:
      return "simulation_diverged";
    case ErrorKind::kTrainingDiverged:
      return "training_diverged";
    case ErrorKind::kNumerical:
      return "numerical_error";
    case ErrorKind::kDegeneratePosterior:
      return "degenerate_posterior";
    case ErrorKind::kIo:
      return "io_error";
  }
  return "error";
}

uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace dsbi
