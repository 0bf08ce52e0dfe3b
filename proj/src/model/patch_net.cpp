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

#include "dmda/model/patch_net.hpp"

#include <cmath>
#include <string>

#include "dmda/error.hpp"
#include "dmda/grad/tape.hpp"

namespace dmda::model {

using grad::Tensor;

namespace {

Tensor glorot(grad::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(grad::shape_numel(shape));
  for (auto& v : values) v = rng.uniform(-limit, limit);
  return Tensor::from(std::move(shape), std::move(values), true);
}

ConvLayer make_conv(std::size_t cin, std::size_t cout, Rng& rng) {
  return {glorot({cout, cin, 3, 3}, cin * 9, cout * 9, rng), Tensor::zeros({cout}, true)};
}

Tensor copy_of(const Tensor& t) { return t.clone(); }

ConvLayer copy_of(const ConvLayer& c) { return {copy_of(c.weight), copy_of(c.bias)}; }
DenseLayer copy_of(const DenseLayer& d) { return {copy_of(d.weight), copy_of(d.bias)}; }

grad::BatchNorm copy_of(const grad::BatchNorm& bn) {
  grad::BatchNorm out = bn;
  out.gamma = bn.gamma.clone();
  out.beta = bn.beta.clone();
  out.running_mean = bn.running_mean.clone();
  out.running_var = bn.running_var.clone();
  return out;
}

void assign(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  std::copy(s.begin(), s.end(), d.begin());
}

}  // namespace

void PatchNetConfig::validate() const {
  require(num_blocks >= 1 && num_blocks <= 8, ErrorCode::kInvalidArgument,
          "PatchNetConfig: num_blocks must be in [1, 8], got " + std::to_string(num_blocks));
  require(init_filters >= 1, ErrorCode::kInvalidArgument,
          "PatchNetConfig: init_filters must be >= 1");
  require(fc_units >= 1, ErrorCode::kInvalidArgument, "PatchNetConfig: fc_units must be >= 1");
  require(input_side >= 1 && input_side % (1 << num_blocks) == 0, ErrorCode::kInvalidArgument,
          "PatchNetConfig: input_side " + std::to_string(input_side) +
              " is not divisible by 2^" + std::to_string(num_blocks));
  require(bn_momentum >= 0.0 && bn_momentum < 1.0, ErrorCode::kInvalidArgument,
          "PatchNetConfig: bn_momentum must be in [0, 1)");
}

std::size_t PatchNetConfig::expected_parameter_count() const {
  std::size_t count = 0;
  std::size_t cin = 1;
  for (int b = 0; b < num_blocks; ++b) {
    const std::size_t c = static_cast<std::size_t>(init_filters) << b;
    count += c * cin * 9 + c;  // conv1
    count += 2 * c;            // bn1 scale/shift
    count += c * c * 9 + c;    // conv2
    count += 2 * c;            // bn2
    cin = c;
  }
  const auto f = static_cast<std::size_t>(feature_dim());
  const auto h = static_cast<std::size_t>(fc_units);
  return count + h * f + h + h + 1;
}

void to_json(nlohmann::json& j, const PatchNetConfig& c) {
  j = {{"num_blocks", c.num_blocks},
       {"init_filters", c.init_filters},
       {"fc_units", c.fc_units},
       {"input_side", c.input_side},
       {"bn_momentum", c.bn_momentum}};
}

void from_json(const nlohmann::json& j, PatchNetConfig& c) {
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.init_filters = j.value("init_filters", c.init_filters);
  c.fc_units = j.value("fc_units", c.fc_units);
  c.input_side = j.value("input_side", c.input_side);
  c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
}

DenseLayer make_dense(std::size_t in, std::size_t out, Rng& rng) {
  return {glorot({out, in}, in, out, rng), Tensor::zeros({out}, true)};
}

PatchNet PatchNet::build(const PatchNetConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  PatchNet net;
  net.config_ = config;
  std::size_t cin = 1;
  for (int b = 0; b < config.num_blocks; ++b) {
    const std::size_t c = static_cast<std::size_t>(config.init_filters) << b;
    Block block;
    block.conv1 = make_conv(cin, c, rng);
    block.bn1 = grad::BatchNorm::make(c, config.bn_momentum);
    block.conv2 = make_conv(c, c, rng);
    block.bn2 = grad::BatchNorm::make(c, config.bn_momentum);
    net.blocks_.push_back(std::move(block));
    cin = c;
  }
  const auto f = static_cast<std::size_t>(config.feature_dim());
  net.fc1_ = make_dense(f, static_cast<std::size_t>(config.fc_units), rng);
  net.fc2_ = make_dense(static_cast<std::size_t>(config.fc_units), 1, rng);
  return net;
}

Tensor PatchNet::features(const Tensor& batch, Mode mode) {
  const auto side = static_cast<std::size_t>(config_.input_side);
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != side || batch.dim(3) != side) {
    fail(ErrorCode::kShape, "PatchNet::features: expected [B, 1, " + std::to_string(side) +
                                ", " + std::to_string(side) + "], got " +
                                grad::shape_str(batch.shape()));
  }
  const bool training = mode == Mode::kTrain;
  Tensor h = batch;
  for (auto& block : blocks_) {
    h = grad::conv2d_3x3(h, block.conv1.weight, block.conv1.bias);
    h = grad::batchnorm2d(grad::relu(h), block.bn1, training);
    h = grad::conv2d_3x3(h, block.conv2.weight, block.conv2.bias);
    h = grad::batchnorm2d(grad::relu(h), block.bn2, training);
    h = grad::maxpool_2x2(h);
  }
  return grad::global_max_pool(h);
}

Tensor PatchNet::classify(const Tensor& features) const {
  const auto f = static_cast<std::size_t>(feature_dim());
  if (features.rank() != 2 || features.dim(1) != f) {
    fail(ErrorCode::kShape, "PatchNet::classify: expected [B, " + std::to_string(f) +
                                "], got " + grad::shape_str(features.shape()));
  }
  Tensor h = grad::relu(grad::dense(features, fc1_.weight, fc1_.bias));
  Tensor logit = grad::dense(h, fc2_.weight, fc2_.bias);
  return grad::sigmoid(grad::reshape(logit, {features.dim(0)}));
}

std::vector<Tensor> PatchNet::extractor_parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : blocks_) {
    for (const auto* t : {&b.conv1.weight, &b.conv1.bias, &b.bn1.gamma, &b.bn1.beta,
                          &b.conv2.weight, &b.conv2.bias, &b.bn2.gamma, &b.bn2.beta}) {
      out.push_back(*t);
    }
  }
  return out;
}

std::vector<Tensor> PatchNet::head_parameters() const {
  return {fc1_.weight, fc1_.bias, fc2_.weight, fc2_.bias};
}

std::vector<Tensor> PatchNet::parameters() const {
  auto out = extractor_parameters();
  for (auto& t : head_parameters()) out.push_back(t);
  return out;
}

std::size_t PatchNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : parameters()) n += t.numel();
  return n;
}

std::vector<NamedTensor> PatchNet::state() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    const std::string p = "block" + std::to_string(i) + ".";
    out.push_back({p + "conv1.weight", b.conv1.weight});
    out.push_back({p + "conv1.bias", b.conv1.bias});
    out.push_back({p + "bn1.gamma", b.bn1.gamma});
    out.push_back({p + "bn1.beta", b.bn1.beta});
    out.push_back({p + "bn1.running_mean", b.bn1.running_mean});
    out.push_back({p + "bn1.running_var", b.bn1.running_var});
    out.push_back({p + "conv2.weight", b.conv2.weight});
    out.push_back({p + "conv2.bias", b.conv2.bias});
    out.push_back({p + "bn2.gamma", b.bn2.gamma});
    out.push_back({p + "bn2.beta", b.bn2.beta});
    out.push_back({p + "bn2.running_mean", b.bn2.running_mean});
    out.push_back({p + "bn2.running_var", b.bn2.running_var});
  }
  out.push_back({"head.fc1.weight", fc1_.weight});
  out.push_back({"head.fc1.bias", fc1_.bias});
  out.push_back({"head.fc2.weight", fc2_.weight});
  out.push_back({"head.fc2.bias", fc2_.bias});
  return out;
}

PatchNet PatchNet::clone() const {
  PatchNet net;
  net.config_ = config_;
  for (const auto& b : blocks_) {
    net.blocks_.push_back({copy_of(b.conv1), copy_of(b.bn1), copy_of(b.conv2), copy_of(b.bn2)});
  }
  net.fc1_ = copy_of(fc1_);
  net.fc2_ = copy_of(fc2_);
  return net;
}

void PatchNet::copy_extractor_from(const PatchNet& other) {
  require(blocks_.size() == other.blocks_.size() &&
              config_.init_filters == other.config_.init_filters,
          ErrorCode::kShape, "PatchNet::copy_extractor_from: architectures differ");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    auto& d = blocks_[i];
    const auto& s = other.blocks_[i];
    assign(d.conv1.weight, s.conv1.weight);
    assign(d.conv1.bias, s.conv1.bias);
    assign(d.conv2.weight, s.conv2.weight);
    assign(d.conv2.bias, s.conv2.bias);
    for (auto [dbn, sbn] : {std::pair{&d.bn1, &s.bn1}, std::pair{&d.bn2, &s.bn2}}) {
      assign(dbn->gamma, sbn->gamma);
      assign(dbn->beta, sbn->beta);
      assign(dbn->running_mean, sbn->running_mean);
      assign(dbn->running_var, sbn->running_var);
    }
  }
}

}  // namespace dmda::model
