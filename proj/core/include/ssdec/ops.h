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

#ifndef SSDEC_OPS_H_
#define SSDEC_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ssdec/rng.h"
#include "ssdec/tensor.h"

// Differentiable primitives. This is the complete set the model is built
// from; each op records a backward rule on the active tape when any input
// requires gradients.
namespace ssdec {

// a: [..., M, K]. b: [K, N] shared across the batch, or [..., K, N] with the
// same leading dims as a. With transpose_b, b holds [.., N, K].
template <typename T>
Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);

// Elementwise. b has a's shape or a trailing suffix of it (bias style).
template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Scale(const Tensor<T>& a, T factor);
template <typename T>
Tensor<T> Relu(const Tensor<T>& a);

// Numerically stable softmax along `axis`. Non-finite input throws
// NumericError.
template <typename T>
Tensor<T> Softmax(const Tensor<T>& x, int axis = -1);

// Key-side mask for attention scores of shape [B, heads, queries, keys].
struct AttentionMask {
  std::int64_t batch = 0;
  std::int64_t keys = 0;
  // [batch * keys]; 1 marks attendable keys. Empty means all keys.
  std::vector<std::uint8_t> key_keep;
  // Query q may only attend to keys k <= q.
  bool causal = false;
};

// Softmax over the last axis where masked entries get exactly zero weight.
// Rows with no attendable key come out all zero.
template <typename T>
Tensor<T> MaskedSoftmax(const Tensor<T>& scores, const AttentionMask& mask);

// Normalizes over the last axis, then applies gain and bias of that size.
template <typename T>
Tensor<T> LayerNorm(const Tensor<T>& x, const Tensor<T>& gain,
                    const Tensor<T>& bias, double eps = 1e-5);

// Rows of table [V, H] for each id; output shape is ids_shape + [H].
template <typename T>
Tensor<T> EmbeddingLookup(const Tensor<T>& table, std::span<const std::int32_t> ids,
                          const Shape& ids_shape);

// Probability-weighted sum of embedding rows: probs [..., V] x table [V, H].
template <typename T>
Tensor<T> WeightedEmbeddingMix(const Tensor<T>& probs, const Tensor<T>& table);

// Mean over kept rows of the label-smoothed negative log-likelihood of
// logits [N, V]. The smoothing mass is spread uniformly over all V classes.
template <typename T>
Tensor<T> CrossEntropyLabelSmoothed(const Tensor<T>& logits,
                                   std::span<const std::int32_t> targets,
                                   std::span<const std::uint8_t> keep,
                                   double smoothing);

// Inverted dropout. Identity (same tensor) when not training or rate == 0.
template <typename T>
Tensor<T> Dropout(const Tensor<T>& x, double rate, Rng* rng, bool training);

template <typename T>
Tensor<T> Reshape(const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> Permute(const Tensor<T>& x, const std::vector<int>& perm);
template <typename T>
Tensor<T> Transpose(const Tensor<T>& x, int axis0, int axis1);
template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>>& parts, int axis);
// Elements [begin, end) along `axis`.
template <typename T>
Tensor<T> Slice(const Tensor<T>& x, int axis, std::int64_t begin, std::int64_t end);
// Sum of all elements as a scalar.
template <typename T>
Tensor<T> Sum(const Tensor<T>& x);

// C[M,N] (+)= A[M,K] * B[K,N], row-major. Exposed for benchmarks.
template <typename T>
void Gemm(std::int64_t m, std::int64_t n, std::int64_t k, const T* a,
          const T* b, T* c, bool accumulate);

}  // namespace ssdec

#endif  // SSDEC_OPS_H_
