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

#include "dmda/model/domain_net.hpp"

#include <algorithm>
#include <string>

#include "dmda/error.hpp"
#include "dmda/grad/ops.hpp"

namespace dmda::model {

using grad::Tensor;

void DomainNetConfig::validate() const {
  require(num_layers >= 1 && num_layers <= 3, ErrorCode::kInvalidArgument,
          "DomainNetConfig: num_layers must be 1, 2 or 3, got " + std::to_string(num_layers));
  require(num_layers == 1 || hidden_units >= 1, ErrorCode::kInvalidArgument,
          "DomainNetConfig: hidden_units must be >= 1");
}

void to_json(nlohmann::json& j, const DomainNetConfig& c) {
  j = {{"num_layers", c.num_layers},
       {"hidden_units", c.hidden_units},
       {"output", c.output == DomainOutput::kProbability ? "probability" : "critic"}};
}

void from_json(const nlohmann::json& j, DomainNetConfig& c) {
  c.num_layers = j.value("num_layers", c.num_layers);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  if (j.contains("output")) {
    const auto s = j.at("output").get<std::string>();
    require(s == "probability" || s == "critic", ErrorCode::kInvalidArgument,
            "DomainNetConfig: output must be 'probability' or 'critic', got '" + s + "'");
    c.output = s == "probability" ? DomainOutput::kProbability : DomainOutput::kCritic;
  }
}

DomainNet DomainNet::build(const DomainNetConfig& config, int input_dim, std::uint64_t seed) {
  config.validate();
  require(input_dim >= 1, ErrorCode::kInvalidArgument, "DomainNet: input_dim must be >= 1");
  Rng rng(seed);
  DomainNet net;
  net.config_ = config;
  net.input_dim_ = input_dim;
  auto in = static_cast<std::size_t>(input_dim);
  for (int i = 0; i + 1 < config.num_layers; ++i) {
    const auto h = static_cast<std::size_t>(config.hidden_units);
    net.layers_.push_back(make_dense(in, h, rng));
    in = h;
  }
  net.layers_.push_back(make_dense(in, 1, rng));
  // A zero output layer sends no domain signal to the extractor until the
  // domain net has found an actual difference between the feature sets.
  std::ranges::fill(net.layers_.back().weight.data(), 0.0);
  return net;
}

Tensor DomainNet::forward(const Tensor& features) const {
  if (features.rank() != 2 || features.dim(1) != static_cast<std::size_t>(input_dim_)) {
    fail(ErrorCode::kShape, "DomainNet::forward: expected [B, " + std::to_string(input_dim_) +
                                "], got " + grad::shape_str(features.shape()));
  }
  Tensor h = features;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = grad::dense(h, layers_[i].weight, layers_[i].bias);
    if (i + 1 < layers_.size()) h = grad::relu(h);
  }
  h = grad::reshape(h, {features.dim(0)});
  return ends_in_sigmoid() ? grad::sigmoid(h) : h;
}

std::vector<Tensor> DomainNet::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::size_t DomainNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : parameters()) n += t.numel();
  return n;
}

std::vector<NamedTensor> DomainNet::state() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out.push_back({"fc" + std::to_string(i) + ".weight", layers_[i].weight});
    out.push_back({"fc" + std::to_string(i) + ".bias", layers_[i].bias});
  }
  return out;
}

}  // namespace dmda::model
