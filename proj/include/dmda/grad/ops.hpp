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

#include <cstddef>

#include "dmda/grad/tensor.hpp"

// Differentiable operations. Each op validates shapes, computes its output,
// and records a backward rule on the active tape when an input requires
// gradients. Shape errors throw dmda::Error(kShape) naming the op.
namespace dmda::grad {

/// x: [B, Cin, H, W], weight: [Cout, Cin, 3, 3], bias: [Cout].
/// Stride 1 with one pixel of zero padding, so H and W are preserved.
Tensor conv2d_3x3(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);

/// Per-channel batch normalization with learnable scale/shift and running
/// statistics. Running stats follow
///   running = momentum * running + (1 - momentum) * batch_stat
/// and use the biased batch variance.
struct BatchNorm {
  Tensor gamma;         // [C]
  Tensor beta;          // [C]
  Tensor running_mean;  // [C], never requires grad
  Tensor running_var;   // [C], never requires grad
  double momentum = 0.9;
  double eps = 1e-5;

  static BatchNorm make(std::size_t channels, double momentum);
};

/// x: [B, C, H, W] or [B, C]. Train mode normalizes with batch statistics
/// (requires B >= 2) and updates the running stats; eval mode is the affine
/// map defined by the frozen running stats.
Tensor batchnorm2d(const Tensor& x, BatchNorm& bn, bool training);

/// [B, C, H, W] -> [B, C, H/2, W/2]; H and W must be even.
Tensor maxpool_2x2(const Tensor& x);

/// [B, C, H, W] -> [B, C].
Tensor global_max_pool(const Tensor& x);

/// x: [B, In], weight: [Out, In], bias: [Out] -> [B, Out].
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor sigmoid(const Tensor& x);

/// Mean binary cross entropy of probabilities `p` against targets `y` of
/// the same shape. Probabilities are clamped to [1e-12, 1 - 1e-12].
Tensor binary_cross_entropy(const Tensor& p, const Tensor& y);

/// Mean of all elements -> scalar.
Tensor mean(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& x, double s);

/// Elementwise clamp; gradient passes where lo < x < hi.
Tensor clip(const Tensor& x, double lo, double hi);

/// Identity forward; backward multiplies the upstream gradient by -lambda.
Tensor grad_reverse(const Tensor& x, double lambda);

/// Rows [begin, end) along the first axis.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);

/// Stacks along the first axis; trailing dimensions must agree.
Tensor concat_rows(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& x, Shape shape);

}  // namespace dmda::grad
