// Copyright 2026 The ssdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssdec/tensor.h"

#include <sstream>

#include "ssdec/error.h"

namespace ssdec {
namespace {

template <typename T>
Tape<T>*& ActiveSlot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}

}  // namespace

std::int64_t NumElements(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::Zeros(Shape shape) {
  return Full(std::move(shape), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::Full(Shape shape, T fill) {
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive: " + ShapeToString(shape));
  }
  auto s = std::make_shared<TensorStorage<T>>();
  s->value.assign(static_cast<std::size_t>(NumElements(shape)), fill);
  s->shape = std::move(shape);
  return Tensor(std::move(s));
}

template <typename T>
Tensor<T> Tensor<T>::FromValues(Shape shape, std::vector<T> values) {
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive: " + ShapeToString(shape));
  }
  if (static_cast<std::int64_t>(values.size()) != NumElements(shape)) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + ShapeToString(shape));
  }
  auto s = std::make_shared<TensorStorage<T>>();
  s->shape = std::move(shape);
  s->value = std::move(values);
  return Tensor(std::move(s));
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(shape()));
  }
  return s_->shape[static_cast<std::size_t>(axis)];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) {
    throw ContractError("item() needs a single-element tensor, got " +
                        ShapeToString(shape()));
  }
  return s_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::Clone() const {
  auto s = std::make_shared<TensorStorage<T>>();
  s->shape = s_->shape;
  s->value = s_->value;
  return Tensor(std::move(s));
}

template <typename T>
std::int64_t Tape<T>::Record(const Tensor<T>& output,
                             const std::vector<const Tensor<T>*>& inputs,
                             std::string op, std::function<void()> backward) {
  Entry e;
  e.output = output.storage();
  e.op = std::move(op);
  e.backward = std::move(backward);
  e.parents.reserve(inputs.size());
  for (const auto* in : inputs) e.parents.push_back(in->node_id());
  const auto id = static_cast<std::int64_t>(entries_.size());
  output.storage()->node_id = id;
  output.storage()->requires_grad = true;
  entries_.push_back(std::move(e));
  return id;
}

template <typename T>
void Tape<T>::Backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward needs a scalar root, got " +
                        (loss.defined() ? ShapeToString(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    Clear();
    return;
  }
  loss.storage()->EnsureGrad()[0] += T(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward();
  }
  Clear();
}

template <typename T>
void Tape<T>::Clear() {
  for (auto& e : entries_) e.output->node_id = -1;
  entries_.clear();
}

template <typename T>
Tape<T>* Tape<T>::Active() {
  return ActiveSlot<T>();
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>* tape) : previous_(ActiveSlot<T>()) {
  ActiveSlot<T>() = tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  ActiveSlot<T>() = previous_;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template class TapeScope<float>;
template class TapeScope<double>;

}  // namespace ssdec
