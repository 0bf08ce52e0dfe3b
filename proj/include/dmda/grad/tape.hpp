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

#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "dmda/grad/tensor.hpp"

namespace dmda::grad {

/// Ordered record of differentiable operations for one forward pass.
class Tape {
 public:
  struct Node {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(Node node);
  bool produced(const Tensor& t) const { return outputs_.contains(t.id()); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  void clear();

 private:
  std::vector<Node> nodes_;
  std::unordered_set<const void*> outputs_;
};

/// Makes `tape` the recording target for ops on this thread until destroyed.
/// Scopes nest; the innermost one wins.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording (inference, frozen networks).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Replays `tape` in reverse starting from the scalar `loss`. Gradients of
/// intermediate tensors are reset first; gradients of leaves accumulate, and
/// every requires_grad leaf referenced by the tape ends with a populated
/// (possibly zero) gradient.
void backward(Tape& tape, const Tensor& loss);

}  // namespace dmda::grad
