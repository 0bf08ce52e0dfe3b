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

#include "dmda/grad/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmda/error.hpp"

namespace dmda::grad {

OptimizerState OptimizerState::sgd(double lr, double momentum) {
  OptimizerState s;
  s.kind = OptimizerKind::kSgd;
  s.learning_rate = lr;
  s.momentum = momentum;
  return s;
}

OptimizerState OptimizerState::adam(double lr) {
  OptimizerState s;
  s.kind = OptimizerKind::kAdam;
  s.learning_rate = lr;
  return s;
}

void optimizer_step(OptimizerState& state, std::span<Tensor> params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].has_grad(), ErrorCode::kState,
            "optimizer_step: parameter " + std::to_string(i) + " " +
                shape_str(params[i].shape()) + " has no gradient");
  }
  if (state.first.empty()) {
    state.first.resize(params.size());
    if (state.kind == OptimizerKind::kAdam) state.second.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first[i].assign(params[i].numel(), 0.0);
      if (state.kind == OptimizerKind::kAdam) state.second[i].assign(params[i].numel(), 0.0);
    }
  }
  require(state.first.size() == params.size(), ErrorCode::kState,
          "optimizer_step: parameter list changed between steps");
  state.step += 1;

  const double lr = state.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].data();
    auto g = params[i].grad();
    auto& m = state.first[i];
    require(m.size() == w.size(), ErrorCode::kState,
            "optimizer_step: moment buffer does not match parameter " + std::to_string(i));
    if (state.kind == OptimizerKind::kSgd) {
      if (state.momentum == 0.0) {
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
      } else {
        for (std::size_t j = 0; j < w.size(); ++j) {
          m[j] = state.momentum * m[j] + g[j];
          w[j] -= lr * m[j];
        }
      }
    } else {
      auto& v = state.second[i];
      const double t = static_cast<double>(state.step);
      const double c1 = 1.0 - std::pow(state.beta1, t);
      const double c2 = 1.0 - std::pow(state.beta2, t);
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
        v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        w[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
      }
    }
    std::fill(g.begin(), g.end(), 0.0);
  }
}

void clip_weights(std::span<Tensor> params, double c) {
  require(c > 0.0, ErrorCode::kInvalidArgument,
          "clip_weights: bound must be positive, got " + std::to_string(c));
  for (auto& p : params) {
    for (auto& v : p.data()) v = std::clamp(v, -c, c);
  }
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace dmda::grad
