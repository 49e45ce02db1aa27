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

#include "dsbi/encoder.h"

#include <cmath>
#include <string>

namespace dsbi {

InputEncoder::InputEncoder(RffBasis basis) : basis_(std::move(basis)) {
  d_frequencies_ = Eigen::MatrixXd::Zero(basis_->num_frequencies(), basis_->dim());
  sigma_floor_ = 1e-3 * basis_->sigma;
}

Eigen::VectorXd InputEncoder::RawFeatures(const ModelInput& input) const {
  if (!input.frames.empty() && !basis_) {
    throw ArgumentError("frame inputs need an embedding basis");
  }
  int total = static_cast<int>(input.dense.size());
  for (const Frame& f : input.frames) {
    total += static_cast<int>(f.statics.size()) + basis_->feature_dim();
  }
  Eigen::VectorXd raw(total);
  int offset = 0;
  for (const Frame& f : input.frames) {
    const int s = static_cast<int>(f.statics.size());
    raw.segment(offset, s) = f.statics;
    offset += s;
    raw.segment(offset, basis_->feature_dim()) = MeanEmbed(f.points, *basis_);
    offset += basis_->feature_dim();
  }
  raw.segment(offset, input.dense.size()) = input.dense;
  return raw;
}

int InputEncoder::FeatureDim(const ModelInput& prototype) const {
  int total = static_cast<int>(prototype.dense.size());
  for (const Frame& f : prototype.frames) {
    total += static_cast<int>(f.statics.size()) +
             (basis_ ? basis_->feature_dim() : 0);
  }
  return total;
}

void InputEncoder::FitStandardizer(std::span<const ModelInput* const> inputs) {
  if (inputs.empty()) throw ArgumentError("cannot standardize an empty set");
  shift_.resize(0);
  const Eigen::MatrixXd raw = Encode(inputs);
  const double n = static_cast<double>(raw.cols());
  shift_ = raw.rowwise().mean();
  const Eigen::VectorXd var =
      (raw.colwise() - shift_).array().square().rowwise().sum() / n;
  inv_scale_.resize(var.size());
  for (int i = 0; i < var.size(); ++i) {
    const double sd = std::sqrt(var[i]);
    inv_scale_[i] = sd > 1e-9 ? 1.0 / sd : 1.0;
  }
}

Eigen::MatrixXd InputEncoder::Encode(
    std::span<const ModelInput* const> batch) const {
  if (batch.empty()) throw ArgumentError("empty batch");
  const Eigen::VectorXd first = RawFeatures(*batch[0]);
  Eigen::MatrixXd out(first.size(), batch.size());
  out.col(0) = first;
  for (size_t i = 1; i < batch.size(); ++i) {
    Eigen::VectorXd raw = RawFeatures(*batch[i]);
    if (raw.size() != out.rows()) {
      throw ArgumentError("inputs in a batch differ in feature length");
    }
    out.col(i) = raw;
  }
  if (standardized()) {
    if (shift_.size() != out.rows()) {
      throw ArgumentError("feature length changed after standardization");
    }
    out.colwise() -= shift_;
    out.array().colwise() *= inv_scale_.array();
  }
  return out;
}

void InputEncoder::Backward(std::span<const ModelInput* const> batch,
                            const Eigen::MatrixXd& d_encoded) {
  if (!basis_ || !basis_->trainable) return;
  const int fdim = basis_->feature_dim();
  for (size_t b = 0; b < batch.size(); ++b) {
    Eigen::VectorXd d_raw = d_encoded.col(b);
    if (standardized()) d_raw.array() *= inv_scale_.array();
    int offset = 0;
    for (const Frame& f : batch[b]->frames) {
      offset += static_cast<int>(f.statics.size());
      MeanEmbedBackward(f.points, *basis_, d_raw.segment(offset, fdim),
                        d_frequencies_, d_sigma_);
      offset += fdim;
    }
  }
}

void InputEncoder::ZeroGrad() {
  d_frequencies_.setZero();
  d_sigma_ = 0;
}

std::vector<ParamView> InputEncoder::Params() {
  if (!basis_ || !basis_->trainable) return {};
  return {{"rkhs.frequencies",
           {basis_->frequencies.data(),
            static_cast<size_t>(basis_->frequencies.size())},
           {d_frequencies_.data(), static_cast<size_t>(d_frequencies_.size())}},
          {"rkhs.sigma", {&basis_->sigma, 1}, {&d_sigma_, 1}}};
}

void InputEncoder::Project() {
  if (basis_ && basis_->sigma < sigma_floor_) basis_->sigma = sigma_floor_;
}

nlohmann::json InputEncoder::ToJson() const {
  nlohmann::json j;
  if (basis_) j["rkhs_basis"] = dsbi::ToJson(*basis_);
  if (standardized()) {
    j["shift"] = std::vector<double>(shift_.data(), shift_.data() + shift_.size());
    j["inv_scale"] = std::vector<double>(inv_scale_.data(),
                                         inv_scale_.data() + inv_scale_.size());
  }
  return j;
}

InputEncoder InputEncoder::FromJson(const nlohmann::json& j) {
  InputEncoder enc;
  if (j.contains("rkhs_basis")) enc = InputEncoder(RffBasisFromJson(j["rkhs_basis"]));
  if (j.contains("shift")) {
    auto shift = j["shift"].get<std::vector<double>>();
    auto inv = j.at("inv_scale").get<std::vector<double>>();
    if (shift.size() != inv.size()) {
      throw ConfigError("standardizer arrays differ in length");
    }
    enc.shift_ = Eigen::Map<Eigen::VectorXd>(shift.data(), shift.size());
    enc.inv_scale_ = Eigen::Map<Eigen::VectorXd>(inv.data(), inv.size());
  }
  return enc;
}

}  // namespace dsbi
