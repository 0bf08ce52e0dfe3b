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
#include <string>
#include <vector>

#include <json.hpp>

#include "dmda/grad/ops.hpp"
#include "dmda/grad/tensor.hpp"
#include "dmda/rng.hpp"

namespace dmda::model {

enum class Mode { kTrain, kEval };

struct NamedTensor {
  std::string name;
  grad::Tensor tensor;
};

/// VGG-style patch classifier layout. Paper-scale values are 6 blocks,
/// 16 initial filters and a 256-unit hidden layer; the desk defaults live in
/// the experiment config.
struct PatchNetConfig {
  int num_blocks = 6;
  int init_filters = 16;
  int fc_units = 256;
  int input_side = 64;
  double bn_momentum = 0.9;

  void validate() const;
  int feature_dim() const { return init_filters << (num_blocks - 1); }
  /// Learnable parameter count computed per layer from the config alone.
  std::size_t expected_parameter_count() const;
};

void to_json(nlohmann::json& j, const PatchNetConfig& c);
void from_json(const nlohmann::json& j, PatchNetConfig& c);

struct ConvLayer {
  grad::Tensor weight;  // [cout, cin, 3, 3]
  grad::Tensor bias;    // [cout]
};

struct DenseLayer {
  grad::Tensor weight;  // [out, in]
  grad::Tensor bias;    // [out]
};

/// Glorot-uniform dense layer with zero bias.
DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng);

class PatchNet {
 public:
  static PatchNet build(const PatchNetConfig& config, std::uint64_t seed);

  const PatchNetConfig& config() const { return config_; }
  int feature_dim() const { return config_.feature_dim(); }

  /// [B, 1, S, S] -> [B, F]. Train mode normalizes with batch statistics and
  /// updates the running stats.
  grad::Tensor features(const grad::Tensor& batch, Mode mode);

  /// [B, F] -> [B] probabilities.
  grad::Tensor classify(const grad::Tensor& features) const;

  grad::Tensor predict(const grad::Tensor& batch, Mode mode) {
    return classify(features(batch, mode));
  }

  std::vector<grad::Tensor> extractor_parameters() const;
  std::vector<grad::Tensor> head_parameters() const;
  std::vector<grad::Tensor> parameters() const;
  std::size_t parameter_count() const;

  /// Every tensor needed to restore the network, running stats included,
  /// in declaration order.
  std::vector<NamedTensor> state() const;

  /// Deep copy with independent storage.
  PatchNet clone() const;

  /// Copies the feature extractor (weights and running stats) from `other`.
  void copy_extractor_from(const PatchNet& other);

 private:
  struct Block {
    ConvLayer conv1;
    grad::BatchNorm bn1;
    ConvLayer conv2;
    grad::BatchNorm bn2;
  };

  PatchNetConfig config_;
  std::vector<Block> blocks_;
  DenseLayer fc1_;
  DenseLayer fc2_;
};

}  // namespace dmda::model
