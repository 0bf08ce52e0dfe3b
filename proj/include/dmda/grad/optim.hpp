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
#include <span>
#include <vector>

#include "dmda/grad/tensor.hpp"

namespace dmda::grad {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.01;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  // Per-parameter buffers: SGD velocity in `first`, Adam moments in both.
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;

  static OptimizerState sgd(double lr, double momentum = 0.0);
  static OptimizerState adam(double lr);
};

/// Applies one update to `params` (which must be passed in the same order on
/// every call) and zeroes their gradients. Throws if a parameter has no
/// gradient.
void optimizer_step(OptimizerState& state, std::span<Tensor> params);

/// Clamps every parameter entry into [-c, c].
void clip_weights(std::span<Tensor> params, double c);

void zero_grads(std::span<Tensor> params);

}  // namespace dmda::grad
