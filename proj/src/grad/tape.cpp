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

#include "dmda/grad/tape.hpp"

#include "dmda/error.hpp"

namespace dmda::grad {
namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

void Tape::record(Node node) {
  outputs_.insert(node.output.id());
  nodes_.push_back(std::move(node));
}

void Tape::clear() {
  nodes_.clear();
  outputs_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(Tape& tape, const Tensor& loss) {
  require(loss.defined(), ErrorCode::kState, "backward: undefined loss");
  require(loss.numel() == 1, ErrorCode::kShape,
          "backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  require(tape.produced(loss), ErrorCode::kState,
          "backward: loss was not produced under this tape");

  // Fresh gradients for everything the tape produced; leaves keep whatever
  // they accumulated so far but are guaranteed to exist.
  for (const auto& node : tape.nodes()) {
    Tensor out = node.output;
    out.zero_grad();
    for (const auto& in : node.inputs) {
      if (in.requires_grad() && !tape.produced(in)) {
        Tensor leaf = in;
        leaf.grad();
      }
    }
  }
  Tensor seed = loss;
  seed.grad()[0] = 1.0;

  const auto& nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->backward) it->backward();
  }
}

}  // namespace dmda::grad
