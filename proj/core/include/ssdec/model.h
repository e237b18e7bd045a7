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

#ifndef SSDEC_MODEL_H_
#define SSDEC_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssdec/checkpoint.h"
#include "ssdec/data.h"
#include "ssdec/ops.h"
#include "ssdec/rng.h"
#include "ssdec/tensor.h"

namespace ssdec {

struct ModelConfig {
  int vocab_size = 50;
  int hidden_size = 64;
  int filter_size = 128;
  int num_heads = 4;
  int num_encoder_layers = 2;
  int num_decoder_layers = 2;
  double dropout = 0.1;
  double label_smoothing = 0.1;
  int max_positions = 128;
  bool share_embeddings = true;
  bool share_softmax_weights = true;

  void Validate() const;
  // JSON object keyed by the field names above.
  std::string ToJson() const;
  static ModelConfig FromJson(std::string_view text);
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct AttentionParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct LayerNormParams {
  Tensor<T> gain, bias;
};

template <typename T>
struct FeedForwardParams {
  Tensor<T> w1, b1, w2, b2;
};

template <typename T>
struct EncoderLayerParams {
  AttentionParams<T> self_attn;
  LayerNormParams<T> norm1;
  FeedForwardParams<T> ffn;
  LayerNormParams<T> norm2;
};

template <typename T>
struct DecoderLayerParams {
  AttentionParams<T> self_attn;
  LayerNormParams<T> norm1;
  AttentionParams<T> cross_attn;
  LayerNormParams<T> norm2;
  FeedForwardParams<T> ffn;
  LayerNormParams<T> norm3;
};

// All weights. With share_embeddings the source and target embeddings are
// the same storage; with share_softmax_weights so are the target embedding
// and the output projection.
template <typename T>
struct ModelParams {
  Tensor<T> source_embedding;   // [V, H]
  Tensor<T> target_embedding;   // [V, H]
  Tensor<T> output_projection;  // [V, H]; logits = states * projection^T
  Tensor<T> positional;         // [max_positions, H], constant
  std::vector<EncoderLayerParams<T>> encoder;
  std::vector<DecoderLayerParams<T>> decoder;
};

struct ForwardOptions {
  bool training = false;
  // Required when training with dropout > 0.
  Rng* dropout_rng = nullptr;
};

// Post-norm encoder-decoder transformer with sinusoidal absolute positions.
template <typename T>
class Transformer {
 public:
  Transformer(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  ModelParams<T>& params() { return params_; }
  const ModelParams<T>& params() const { return params_; }

  // Distinct trainable tensors with stable names; tied storage appears once.
  std::vector<std::pair<std::string, Tensor<T>>> NamedParameters() const;
  std::int64_t NumParameters() const;
  void ZeroGrad();

  // [B, m, H] states. Source positions with mask 0 are never attended to.
  Tensor<T> Encode(const TokenMatrix& source, const ForwardOptions& opts) const;

  // Raw target-embedding rows for decoder input ids, [B, n, H].
  Tensor<T> EmbedTargets(const TokenMatrix& ids) const;

  // Next-token logits [B, n, V] for pre-built decoder input embeddings.
  // Position t attends only to input positions <= t.
  Tensor<T> DecoderLogits(const Tensor<T>& input_embeddings, const Tensor<T>& encoder_states,
                          const TokenMatrix& source, const ForwardOptions& opts) const;

  // Label-smoothed cross-entropy of next-token prediction from golden
  // prefixes, averaged over non-pad label positions.
  Tensor<T> TeacherForcingLoss(const Batch& batch, const ForwardOptions& opts) const;

  // Loss on given decoder-input embeddings against the batch labels.
  Tensor<T> LossFromLogits(const Tensor<T>& logits, const Batch& batch) const;

  void SaveTo(Checkpoint& ckpt, const std::string& prefix = "param/") const;
  void LoadFrom(const Checkpoint& ckpt, const std::string& prefix = "param/");

 private:
  ModelConfig config_;
  ModelParams<T> params_;
};

// Sinusoidal position table [positions, hidden].
std::vector<double> SinusoidalPositions(int positions, int hidden);

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace ssdec

#endif  // SSDEC_MODEL_H_
