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

#ifndef SSDEC_TENSOR_H_
#define SSDEC_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ssdec {

using Shape = std::vector<std::int64_t>;

std::int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> value;
  // Empty until a gradient is first accumulated.
  std::vector<T> grad;
  bool requires_grad = false;
  // Index of the producing tape entry; -1 for leaves and constants.
  std::int64_t node_id = -1;

  std::vector<T>& EnsureGrad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Dense row-major array with an optional gradient. Copies share storage;
// two handles on the same storage are the same tensor (used for tied
// weights).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorStorage<T>> storage)
      : s_(std::move(storage)) {}

  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, T fill);
  static Tensor FromValues(Shape shape, std::vector<T> values);
  static Tensor Scalar(T v) { return FromValues({}, {v}); }

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  int rank() const { return static_cast<int>(s_->shape.size()); }
  // Negative axes count from the back.
  std::int64_t dim(int axis) const;
  std::int64_t size() const { return static_cast<std::int64_t>(s_->value.size()); }

  std::span<T> values() { return s_->value; }
  std::span<const T> values() const { return s_->value; }
  T* data() { return s_->value.data(); }
  const T* data() const { return s_->value.data(); }
  T item() const;

  bool has_grad() const { return !s_->grad.empty(); }
  // Zero-filled view when no gradient has been accumulated yet.
  std::span<T> grad() { return s_->EnsureGrad(); }
  std::span<const T> grad() const { return s_->EnsureGrad(); }
  void ZeroGrad() { s_->grad.clear(); }

  bool requires_grad() const { return s_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    s_->requires_grad = on;
    return *this;
  }
  std::int64_t node_id() const { return s_->node_id; }

  // Deep copy of the values, detached from any tape.
  Tensor Clone() const;
  Tensor Detach() const { return Clone(); }

  bool SameStorage(const Tensor& other) const { return s_ == other.s_; }
  const std::shared_ptr<TensorStorage<T>>& storage() const { return s_; }

 private:
  std::shared_ptr<TensorStorage<T>> s_;
};

// Ordered record of primitive operations. Each entry owns a closure that
// propagates the output's gradient into its inputs. Entries are appended in
// execution order, so every node's parents precede it.
template <typename T>
class Tape {
 public:
  struct Entry {
    std::shared_ptr<TensorStorage<T>> output;
    std::vector<std::int64_t> parents;
    std::string op;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `output` as produced by `op`. Returns its node id.
  std::int64_t Record(const Tensor<T>& output,
                      const std::vector<const Tensor<T>*>& inputs,
                      std::string op, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule in
  // reverse order. Gradients accumulate additively. The tape is cleared
  // afterwards.
  void Backward(const Tensor<T>& loss);

  void Clear();
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  // The tape operations record into on the current thread, or nullptr.
  static Tape* Active();

 private:
  template <typename>
  friend class TapeScope;

  std::vector<Entry> entries_;
};

// Makes `tape` the active tape of this thread for the lifetime of the scope.
// Passing nullptr suspends recording (inference mode).
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>* tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// True when an op on these inputs must be recorded.
template <typename T>
bool ShouldRecord(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::Active() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;

}  // namespace ssdec

#endif  // SSDEC_TENSOR_H_
