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

#include "ssdec/model.h"

#include <cmath>

#include "json.hpp"
#include "ssdec/error.h"

namespace ssdec {
namespace {

template <typename T>
Tensor<T> UniformInit(Shape shape, double limit, Rng& rng) {
  Tensor<T> t = Tensor<T>::Zeros(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.Uniform(-limit, limit));
  t.set_requires_grad(true);
  return t;
}

template <typename T>
Tensor<T> ConstantInit(Shape shape, T fill) {
  Tensor<T> t = Tensor<T>::Full(std::move(shape), fill);
  t.set_requires_grad(true);
  return t;
}

template <typename T>
AttentionParams<T> MakeAttention(int h, double limit, Rng& rng) {
  AttentionParams<T> a;
  a.wq = UniformInit<T>({h, h}, limit, rng);
  a.bq = ConstantInit<T>({h}, T(0));
  a.wk = UniformInit<T>({h, h}, limit, rng);
  a.bk = ConstantInit<T>({h}, T(0));
  a.wv = UniformInit<T>({h, h}, limit, rng);
  a.bv = ConstantInit<T>({h}, T(0));
  a.wo = UniformInit<T>({h, h}, limit, rng);
  a.bo = ConstantInit<T>({h}, T(0));
  return a;
}

template <typename T>
LayerNormParams<T> MakeNorm(int h) {
  return {ConstantInit<T>({h}, T(1)), ConstantInit<T>({h}, T(0))};
}

template <typename T>
FeedForwardParams<T> MakeFfn(int h, int f, double limit, Rng& rng) {
  FeedForwardParams<T> p;
  p.w1 = UniformInit<T>({h, f}, limit, rng);
  p.b1 = ConstantInit<T>({f}, T(0));
  p.w2 = UniformInit<T>({f, h}, limit, rng);
  p.b2 = ConstantInit<T>({h}, T(0));
  return p;
}

template <typename T>
using Named = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
void AppendAttention(Named<T>& out, const std::string& p, const AttentionParams<T>& a) {
  out.emplace_back(p + ".wq", a.wq);
  out.emplace_back(p + ".bq", a.bq);
  out.emplace_back(p + ".wk", a.wk);
  out.emplace_back(p + ".bk", a.bk);
  out.emplace_back(p + ".wv", a.wv);
  out.emplace_back(p + ".bv", a.bv);
  out.emplace_back(p + ".wo", a.wo);
  out.emplace_back(p + ".bo", a.bo);
}

template <typename T>
void AppendNorm(Named<T>& out, const std::string& p, const LayerNormParams<T>& n) {
  out.emplace_back(p + ".gain", n.gain);
  out.emplace_back(p + ".bias", n.bias);
}

template <typename T>
void AppendFfn(Named<T>& out, const std::string& p, const FeedForwardParams<T>& f) {
  out.emplace_back(p + ".w1", f.w1);
  out.emplace_back(p + ".b1", f.b1);
  out.emplace_back(p + ".w2", f.w2);
  out.emplace_back(p + ".b2", f.b2);
}

template <typename T>
Tensor<T> Linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return Add(MatMul(x, w), b);
}

// [B, n, H] -> [B, heads, n, H / heads]
template <typename T>
Tensor<T> SplitHeads(const Tensor<T>& x, int heads) {
  const auto b = x.dim(0), n = x.dim(1), h = x.dim(2);
  return Permute(Reshape(x, {b, n, heads, h / heads}), {0, 2, 1, 3});
}

// [B, heads, n, d] -> [B, n, heads * d]
template <typename T>
Tensor<T> MergeHeads(const Tensor<T>& x) {
  const auto b = x.dim(0), heads = x.dim(1), n = x.dim(2), d = x.dim(3);
  return Reshape(Permute(x, {0, 2, 1, 3}), {b, n, heads * d});
}

template <typename T>
Tensor<T> Attention(const Tensor<T>& query_in, const Tensor<T>& memory,
                    const AttentionParams<T>& p, const AttentionMask& mask, int heads) {
  const auto d = query_in.dim(2) / heads;
  Tensor<T> q = SplitHeads(Linear(query_in, p.wq, p.bq), heads);
  Tensor<T> k = SplitHeads(Linear(memory, p.wk, p.bk), heads);
  Tensor<T> v = SplitHeads(Linear(memory, p.wv, p.bv), heads);
  Tensor<T> scores = Scale(MatMul(q, k, /*transpose_b=*/true),
                           static_cast<T>(1.0 / std::sqrt(static_cast<double>(d))));
  Tensor<T> weights = MaskedSoftmax(scores, mask);
  return Linear(MergeHeads(MatMul(weights, v)), p.wo, p.bo);
}

template <typename T>
Tensor<T> FeedForward(const Tensor<T>& x, const FeedForwardParams<T>& p) {
  return Linear(Relu(Linear(x, p.w1, p.b1)), p.w2, p.b2);
}

template <typename T>
Tensor<T> ResidualNorm(const Tensor<T>& x, const Tensor<T>& sublayer, const LayerNormParams<T>& n,
                       const ForwardOptions& opts, double rate) {
  return LayerNorm(Add(x, Dropout(sublayer, rate, opts.dropout_rng, opts.training)), n.gain,
                   n.bias);
}

AttentionMask KeyPaddingMask(const TokenMatrix& source) {
  AttentionMask m;
  m.batch = source.rows;
  m.keys = source.cols;
  m.key_keep = source.mask;
  return m;
}

}  // namespace

std::vector<double> SinusoidalPositions(int positions, int hidden) {
  std::vector<double> table(static_cast<std::size_t>(positions) * hidden);
  for (int p = 0; p < positions; ++p) {
    for (int i = 0; i < hidden; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / hidden);
      table[static_cast<std::size_t>(p) * hidden + i] = std::sin(p * freq);
      if (i + 1 < hidden) table[static_cast<std::size_t>(p) * hidden + i + 1] = std::cos(p * freq);
    }
  }
  return table;
}

void ModelConfig::Validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model ") + name + " must be >= 1");
  };
  positive(vocab_size, "vocab_size");
  positive(hidden_size, "hidden_size");
  positive(filter_size, "filter_size");
  positive(num_heads, "num_heads");
  positive(max_positions, "max_positions");
  if (num_encoder_layers < 0 || num_decoder_layers < 0) {
    throw ConfigError("model layer counts must be >= 0");
  }
  if (hidden_size % num_heads != 0) {
    throw ConfigError("hidden_size " + std::to_string(hidden_size) +
                      " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing must lie in [0, 1)");
  }
}

std::string ModelConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["vocab_size"] = vocab_size;
  j["hidden_size"] = hidden_size;
  j["filter_size"] = filter_size;
  j["num_heads"] = num_heads;
  j["num_encoder_layers"] = num_encoder_layers;
  j["num_decoder_layers"] = num_decoder_layers;
  j["dropout"] = dropout;
  j["label_smoothing"] = label_smoothing;
  j["max_positions"] = max_positions;
  j["share_embeddings"] = share_embeddings;
  j["share_softmax_weights"] = share_softmax_weights;
  return j.dump(2);
}

ModelConfig ModelConfig::FromJson(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.hidden_size = j.value("hidden_size", c.hidden_size);
    c.filter_size = j.value("filter_size", c.filter_size);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.num_encoder_layers = j.value("num_encoder_layers", c.num_encoder_layers);
    c.num_decoder_layers = j.value("num_decoder_layers", c.num_decoder_layers);
    c.dropout = j.value("dropout", c.dropout);
    c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
    c.max_positions = j.value("max_positions", c.max_positions);
    c.share_embeddings = j.value("share_embeddings", c.share_embeddings);
    c.share_softmax_weights = j.value("share_softmax_weights", c.share_softmax_weights);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model config field: ") + e.what());
  }
  c.Validate();
  return c;
}

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.Validate();
  const int h = config_.hidden_size;
  const int v = config_.vocab_size;
  const double limit = 1.0 / std::sqrt(static_cast<double>(h));
  Rng rng(DeriveSeed(init_seed, "init"));

  params_.target_embedding = UniformInit<T>({v, h}, limit, rng);
  params_.source_embedding = config_.share_embeddings ? params_.target_embedding
                                                      : UniformInit<T>({v, h}, limit, rng);
  params_.output_projection = config_.share_softmax_weights ? params_.target_embedding
                                                            : UniformInit<T>({v, h}, limit, rng);
  const auto table = SinusoidalPositions(config_.max_positions, h);
  params_.positional = Tensor<T>::FromValues({config_.max_positions, h},
                                             std::vector<T>(table.begin(), table.end()));
  for (int l = 0; l < config_.num_encoder_layers; ++l) {
    EncoderLayerParams<T> layer;
    layer.self_attn = MakeAttention<T>(h, limit, rng);
    layer.norm1 = MakeNorm<T>(h);
    layer.ffn = MakeFfn<T>(h, config_.filter_size, limit, rng);
    layer.norm2 = MakeNorm<T>(h);
    params_.encoder.push_back(std::move(layer));
  }
  for (int l = 0; l < config_.num_decoder_layers; ++l) {
    DecoderLayerParams<T> layer;
    layer.self_attn = MakeAttention<T>(h, limit, rng);
    layer.norm1 = MakeNorm<T>(h);
    layer.cross_attn = MakeAttention<T>(h, limit, rng);
    layer.norm2 = MakeNorm<T>(h);
    layer.ffn = MakeFfn<T>(h, config_.filter_size, limit, rng);
    layer.norm3 = MakeNorm<T>(h);
    params_.decoder.push_back(std::move(layer));
  }
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> Transformer<T>::NamedParameters() const {
  Named<T> out;
  out.emplace_back("embedding.target", params_.target_embedding);
  if (!params_.source_embedding.SameStorage(params_.target_embedding)) {
    out.emplace_back("embedding.source", params_.source_embedding);
  }
  if (!params_.output_projection.SameStorage(params_.target_embedding)) {
    out.emplace_back("output.projection", params_.output_projection);
  }
  for (std::size_t l = 0; l < params_.encoder.size(); ++l) {
    const std::string p = "encoder." + std::to_string(l);
    const auto& layer = params_.encoder[l];
    AppendAttention(out, p + ".self_attn", layer.self_attn);
    AppendNorm(out, p + ".norm1", layer.norm1);
    AppendFfn(out, p + ".ffn", layer.ffn);
    AppendNorm(out, p + ".norm2", layer.norm2);
  }
  for (std::size_t l = 0; l < params_.decoder.size(); ++l) {
    const std::string p = "decoder." + std::to_string(l);
    const auto& layer = params_.decoder[l];
    AppendAttention(out, p + ".self_attn", layer.self_attn);
    AppendNorm(out, p + ".norm1", layer.norm1);
    AppendAttention(out, p + ".cross_attn", layer.cross_attn);
    AppendNorm(out, p + ".norm2", layer.norm2);
    AppendFfn(out, p + ".ffn", layer.ffn);
    AppendNorm(out, p + ".norm3", layer.norm3);
  }
  return out;
}

template <typename T>
std::int64_t Transformer<T>::NumParameters() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : NamedParameters()) n += t.size();
  return n;
}

template <typename T>
void Transformer<T>::ZeroGrad() {
  for (auto& [name, t] : NamedParameters()) t.ZeroGrad();
}

namespace {

template <typename T>
Tensor<T> AddPositions(const Tensor<T>& embeddings, const Tensor<T>& positional,
                       const ModelConfig& config, const ForwardOptions& opts) {
  const auto n = embeddings.dim(1);
  if (n > config.max_positions) {
    throw LengthError("sequence length " + std::to_string(n) + " exceeds max_positions " +
                      std::to_string(config.max_positions));
  }
  const auto h = embeddings.dim(2);
  Tensor<T> pos = Tensor<T>::FromValues(
      {n, h}, std::vector<T>(positional.data(), positional.data() + n * h));
  const T scale = static_cast<T>(std::sqrt(static_cast<double>(config.hidden_size)));
  return Dropout(Add(Scale(embeddings, scale), pos), config.dropout, opts.dropout_rng,
                 opts.training);
}

}  // namespace

template <typename T>
Tensor<T> Transformer<T>::Encode(const TokenMatrix& source, const ForwardOptions& opts) const {
  if (source.rows < 1 || source.cols < 1) throw ContractError("cannot encode an empty batch");
  if (source.cols > config_.max_positions) {
    throw LengthError("source length " + std::to_string(source.cols) +
                      " exceeds max_positions " + std::to_string(config_.max_positions));
  }
  Tensor<T> x = EmbeddingLookup(params_.source_embedding, source.ids, source.shape());
  x = AddPositions(x, params_.positional, config_, opts);
  const AttentionMask mask = KeyPaddingMask(source);
  for (const auto& layer : params_.encoder) {
    x = ResidualNorm(x, Attention(x, x, layer.self_attn, mask, config_.num_heads), layer.norm1,
                     opts, config_.dropout);
    x = ResidualNorm(x, FeedForward(x, layer.ffn), layer.norm2, opts, config_.dropout);
  }
  return x;
}

template <typename T>
Tensor<T> Transformer<T>::EmbedTargets(const TokenMatrix& ids) const {
  return EmbeddingLookup(params_.target_embedding, ids.ids, ids.shape());
}

template <typename T>
Tensor<T> Transformer<T>::DecoderLogits(const Tensor<T>& input_embeddings,
                                        const Tensor<T>& encoder_states,
                                        const TokenMatrix& source,
                                        const ForwardOptions& opts) const {
  if (input_embeddings.rank() != 3 || input_embeddings.dim(2) != config_.hidden_size) {
    throw ShapeError("decoder inputs must be [B, n, hidden], got " +
                     ShapeToString(input_embeddings.shape()));
  }
  if (encoder_states.rank() != 3 || encoder_states.dim(0) != input_embeddings.dim(0) ||
      encoder_states.dim(2) != config_.hidden_size || encoder_states.dim(1) != source.cols ||
      source.rows != input_embeddings.dim(0)) {
    throw ShapeError("encoder states " + ShapeToString(encoder_states.shape()) +
                     " do not match decoder inputs " + ShapeToString(input_embeddings.shape()));
  }
  Tensor<T> x = AddPositions(input_embeddings, params_.positional, config_, opts);
  AttentionMask causal;
  causal.causal = true;
  const AttentionMask memory_mask = KeyPaddingMask(source);
  for (const auto& layer : params_.decoder) {
    x = ResidualNorm(x, Attention(x, x, layer.self_attn, causal, config_.num_heads), layer.norm1,
                     opts, config_.dropout);
    x = ResidualNorm(x, Attention(x, encoder_states, layer.cross_attn, memory_mask,
                                  config_.num_heads),
                     layer.norm2, opts, config_.dropout);
    x = ResidualNorm(x, FeedForward(x, layer.ffn), layer.norm3, opts, config_.dropout);
  }
  return MatMul(x, params_.output_projection, /*transpose_b=*/true);
}

template <typename T>
Tensor<T> Transformer<T>::LossFromLogits(const Tensor<T>& logits, const Batch& batch) const {
  const TokenMatrix labels = batch.Labels();
  Tensor<T> flat = Reshape(logits, {labels.rows * labels.cols, logits.dim(2)});
  return CrossEntropyLabelSmoothed(flat, std::span<const std::int32_t>(labels.ids),
                                   std::span<const std::uint8_t>(labels.mask),
                                   config_.label_smoothing);
}

template <typename T>
Tensor<T> Transformer<T>::TeacherForcingLoss(const Batch& batch, const ForwardOptions& opts) const {
  if (batch.size() == 0) throw ContractError("teacher forcing loss on an empty batch");
  Tensor<T> enc = Encode(batch.source, opts);
  Tensor<T> inputs = EmbedTargets(batch.DecoderInput());
  Tensor<T> logits = DecoderLogits(inputs, enc, batch.source, opts);
  return LossFromLogits(logits, batch);
}

template <typename T>
void Transformer<T>::SaveTo(Checkpoint& ckpt, const std::string& prefix) const {
  for (const auto& [name, t] : NamedParameters()) ckpt.Put(prefix + name, t);
}

template <typename T>
void Transformer<T>::LoadFrom(const Checkpoint& ckpt, const std::string& prefix) {
  for (auto& [name, t] : NamedParameters()) ckpt.CopyInto(prefix + name, t);
}

template class Transformer<float>;
template class Transformer<double>;

}  // namespace ssdec
