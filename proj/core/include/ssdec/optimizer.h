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

#ifndef SSDEC_OPTIMIZER_H_
#define SSDEC_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssdec/checkpoint.h"
#include "ssdec/tensor.h"

namespace ssdec {

struct OptimizerConfig {
  // Multiplier of the inverse square root schedule.
  double learning_rate = 1.0;
  int warmup_steps = 4000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  // Global gradient-norm clip; 0 disables clipping.
  double clip_norm = 0.0;

  void Validate() const;
};

// learning_rate * hidden^-0.5 * min(step^-0.5, step * warmup^-1.5), with
// step counted from 1.
double InverseSqrtLearningRate(const OptimizerConfig& config, int hidden_size,
                               std::int64_t step);

template <typename T>
class AdamOptimizer {
 public:
  using Params = std::vector<std::pair<std::string, Tensor<T>>>;

  AdamOptimizer(const OptimizerConfig& config, int hidden_size);

  // Applies one update using the gradients currently stored on `params`,
  // then clears them. Returns the learning rate used.
  double Step(const Params& params);

  std::int64_t steps_taken() const { return steps_; }
  void set_steps_taken(std::int64_t s) { steps_ = s; }

  void SaveTo(Checkpoint& ckpt, const Params& params) const;
  void LoadFrom(const Checkpoint& ckpt, const Params& params);

 private:
  OptimizerConfig config_;
  int hidden_size_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

extern template class AdamOptimizer<float>;
extern template class AdamOptimizer<double>;

}  // namespace ssdec

#endif  // SSDEC_OPTIMIZER_H_
