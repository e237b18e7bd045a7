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

#include "ssdec/optimizer.h"

#include <algorithm>
#include <cmath>

#include "ssdec/error.h"

namespace ssdec {

void OptimizerConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
}

double InverseSqrtLearningRate(const OptimizerConfig& config, int hidden_size,
                               std::int64_t step) {
  const double s = static_cast<double>(std::max<std::int64_t>(step, 1));
  const double warm = static_cast<double>(config.warmup_steps);
  return config.learning_rate / std::sqrt(static_cast<double>(hidden_size)) *
         std::min(1.0 / std::sqrt(s), s * std::pow(warm, -1.5));
}

template <typename T>
AdamOptimizer<T>::AdamOptimizer(const OptimizerConfig& config, int hidden_size)
    : config_(config), hidden_size_(hidden_size) {
  config_.Validate();
}

template <typename T>
double AdamOptimizer<T>::Step(const Params& params) {
  if (m_.empty()) {
    for (const auto& [name, t] : params) {
      m_.emplace_back(static_cast<std::size_t>(t.size()), T(0));
      v_.emplace_back(static_cast<std::size_t>(t.size()), T(0));
    }
  }
  if (m_.size() != params.size()) throw ContractError("parameter list changed between steps");
  ++steps_;
  const double lr = InverseSqrtLearningRate(config_, hidden_size_, steps_);

  double clip_scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [name, t] : params) {
      if (!t.has_grad()) continue;
      for (T g : t.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) clip_scale = config_.clip_norm / norm;
  }

  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const T step_size = static_cast<T>(lr * std::sqrt(bias2) / bias1);
  const T eps = static_cast<T>(config_.epsilon * std::sqrt(bias2));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<T> t = params[p].second;
    if (!t.has_grad()) continue;
    auto g = t.grad();
    auto w = t.values();
    auto& m = m_[p];
    auto& v = v_[p];
    const T scale = static_cast<T>(clip_scale);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const T gi = g[i] * scale;
      m[i] = static_cast<T>(b1) * m[i] + static_cast<T>(1.0 - b1) * gi;
      v[i] = static_cast<T>(b2) * v[i] + static_cast<T>(1.0 - b2) * gi * gi;
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps);
    }
    t.ZeroGrad();
  }
  return lr;
}

template <typename T>
void AdamOptimizer<T>::SaveTo(Checkpoint& ckpt, const Params& params) const {
  ckpt.PutScalar("optimizer/steps", static_cast<double>(steps_));
  if (m_.empty()) return;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& shape = params[p].second.shape();
    ckpt.Put("optimizer/m/" + params[p].first, Tensor<T>::FromValues(shape, m_[p]));
    ckpt.Put("optimizer/v/" + params[p].first, Tensor<T>::FromValues(shape, v_[p]));
  }
}

template <typename T>
void AdamOptimizer<T>::LoadFrom(const Checkpoint& ckpt, const Params& params) {
  steps_ = static_cast<std::int64_t>(ckpt.GetScalar("optimizer/steps"));
  m_.clear();
  v_.clear();
  if (params.empty() || !ckpt.Contains("optimizer/m/" + params[0].first)) return;
  for (const auto& [name, t] : params) {
    Tensor<T> m = Tensor<T>::Zeros(t.shape());
    Tensor<T> v = Tensor<T>::Zeros(t.shape());
    ckpt.CopyInto("optimizer/m/" + name, m);
    ckpt.CopyInto("optimizer/v/" + name, v);
    m_.emplace_back(m.values().begin(), m.values().end());
    v_.emplace_back(v.values().begin(), v.values().end());
  }
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace ssdec
