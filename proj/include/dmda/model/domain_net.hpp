// Copyright 2026 The dmda Authors.
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

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "dmda/model/patch_net.hpp"

namespace dmda::model {

enum class DomainOutput {
  kProbability,  // discriminator: ends in sigmoid
  kCritic,       // Wasserstein critic: raw affine output
};

struct DomainNetConfig {
  int num_layers = 1;  // 1 => a single affine map (logistic regression)
  int hidden_units = 64;
  DomainOutput output = DomainOutput::kProbability;

  void validate() const;
};

void to_json(nlohmann::json& j, const DomainNetConfig& c);
void from_json(const nlohmann::json& j, DomainNetConfig& c);

/// Small MLP over extracted features: (num_layers - 1) hidden ReLU layers
/// followed by a single-unit output layer. Hidden layers are Glorot-uniform;
/// the output layer starts at zero, so a fresh net outputs 0.5 (or 0).
class DomainNet {
 public:
  static DomainNet build(const DomainNetConfig& config, int input_dim, std::uint64_t seed);

  const DomainNetConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  std::size_t layer_count() const { return layers_.size(); }
  bool ends_in_sigmoid() const { return config_.output == DomainOutput::kProbability; }

  /// [B, F] -> [B].
  grad::Tensor forward(const grad::Tensor& features) const;

  std::vector<grad::Tensor> parameters() const;
  std::size_t parameter_count() const;
  std::vector<NamedTensor> state() const;

 private:
  DomainNetConfig config_;
  int input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

}  // namespace dmda::model
