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

#include "dmda/grad/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "dmda/error.hpp"

namespace dmda::grad {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor out = empty(std::move(shape));
  std::fill(out.impl_->data.begin(), out.impl_->data.end(), value);
  out.impl_->requires_grad = requires_grad;
  return out;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) {
    require(d > 0, ErrorCode::kShape,
            "tensor: dimensions must be positive, got " + shape_str(shape));
  }
  require(shape_numel(shape) == values.size(), ErrorCode::kShape,
          "tensor: shape " + shape_str(shape) + " does not match " +
              std::to_string(values.size()) + " values");
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data.assign(values.begin(), values.end());
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::empty(Shape shape) {
  for (auto d : shape) {
    require(d > 0, ErrorCode::kShape,
            "tensor: dimensions must be positive, got " + shape_str(shape));
  }
  auto impl = std::make_shared<Impl>();
  impl->data.resize(shape_numel(shape));
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor::Impl& Tensor::impl() const {
  require(impl_ != nullptr, ErrorCode::kState, "tensor: use of undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  require(axis < s.size(), ErrorCode::kShape,
          "tensor: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<double> Tensor::data() { return impl().data; }
std::span<const double> Tensor::data() const { return impl().data; }

double Tensor::item() const {
  require(numel() == 1, ErrorCode::kShape,
          "tensor: item() on non-scalar " + shape_str(shape()));
  return impl().data[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  impl().requires_grad = value;
  return *this;
}

bool Tensor::has_grad() const { return impl().has_grad; }

std::span<double> Tensor::grad() {
  auto& i = impl();
  if (!i.has_grad) {
    i.grad.assign(i.data.size(), 0.0);
    i.has_grad = true;
  }
  return i.grad;
}

std::span<const double> Tensor::grad() const {
  auto& i = impl();
  require(i.has_grad, ErrorCode::kState, "tensor: gradient not populated");
  return i.grad;
}

void Tensor::zero_grad() {
  auto& i = impl();
  i.grad.assign(i.data.size(), 0.0);
  i.has_grad = true;
}

void Tensor::clear_grad() {
  auto& i = impl();
  i.grad.clear();
  i.grad.shrink_to_fit();
  i.has_grad = false;
}

Tensor Tensor::detach() const {
  Tensor out = empty(shape());
  out.impl_->data = impl().data;
  return out;
}

Tensor Tensor::clone() const {
  auto copy = std::make_shared<Impl>(impl());
  return Tensor(std::move(copy));
}

}  // namespace dmda::grad
