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

#ifndef SSDEC_SAMPLER_H_
#define SSDEC_SAMPLER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ssdec/data.h"
#include "ssdec/model.h"
#include "ssdec/optimizer.h"
#include "ssdec/rng.h"
#include "ssdec/schedules.h"
#include "ssdec/tensor.h"

namespace ssdec {

// Which index drives the golden-token probability.
enum class SamplingMode {
  kTeacherForcing,  // always golden; single pass
  kTrainingSteps,   // f(i)
  kDecodingSteps,   // g(t)
  kJoint,           // joint(f, g)(i, t)
};

// How a first-pass prediction becomes a decoder input embedding.
enum class PredictionRepresentation {
  kSoftMix,          // softmax(logits) . target embedding
  kArgmaxEmbedding,  // embedding row of the argmax token
};

std::string_view ToString(SamplingMode mode);
std::string_view ToString(PredictionRepresentation rep);
SamplingMode ParseSamplingMode(std::string_view text);
PredictionRepresentation ParsePredictionRepresentation(std::string_view text);

struct SamplerConfig {
  SamplingMode mode = SamplingMode::kDecodingSteps;
  // f for kTrainingSteps, g for kDecodingSteps.
  ScheduleSpec schedule = ScheduleSpec::Exponential(0.99);
  // Used by kJoint.
  JointSpec joint;
  PredictionRepresentation representation = PredictionRepresentation::kSoftMix;
  // Steps trained with teacher forcing before sampling starts. The training
  // step fed to f is counted from the end of the warm start.
  std::int64_t warm_start_steps = 0;
  // When set, no gradient flows through the first decoder pass.
  bool block_first_pass_gradient = true;

  void Validate() const;
  // Probability of feeding the golden token at decoder input position
  // `position` on global training step `step`. Position p >= 1 holds the
  // token of 0-based decoding step p - 1; position 0 (BOS) is always golden.
  double GoldenProbability(std::int64_t step, std::int64_t position) const;
  // Whether `step` runs the single-pass teacher-forced loss.
  bool TeacherForced(std::int64_t step) const;
};

// Bernoulli draw per (row, position) of a [rows, cols] decoder input.
// Position 0 (BOS) is always golden. 1 marks golden. When `probabilities`
// is given it receives the per-position golden probability (length cols).
std::vector<std::uint8_t> SampleSelectionMask(const SamplerConfig& config, std::int64_t step,
                                              std::int64_t rows, std::int64_t cols, Rng& rng,
                                              std::vector<double>* probabilities = nullptr);

// Turns first-pass logits [B, n, V] into prediction embeddings [B, n, H].
template <typename T>
Tensor<T> PredictionEmbeddings(const Tensor<T>& logits, const Tensor<T>& target_embedding,
                               PredictionRepresentation rep);

// Moves predictions one position right so that input position t holds the
// prediction made at output position t - 1. Position 0 becomes zeros.
template <typename T>
Tensor<T> ShiftRight(const Tensor<T>& predictions);

// Decoder inputs of the second pass plus bookkeeping.
template <typename T>
struct MixedDecoderInputs {
  Tensor<T> embeddings;                 // [B, n, H]
  std::vector<std::uint8_t> golden;     // [B * n]; 1 = golden token used
  std::vector<double> probabilities;    // [n]; golden probability per position
  double golden_fraction = 1.0;         // over non-pad positions t >= 1
  double mean_probability = 1.0;        // over non-pad positions t >= 1
};

// golden * M + predicted * (1 - M), elementwise per position.
template <typename T>
Tensor<T> MixEmbeddings(const Tensor<T>& golden, const Tensor<T>& predicted,
                        const std::vector<std::uint8_t>& mask);

template <typename T>
struct TwoPassResult {
  Tensor<T> loss;
  MixedDecoderInputs<T> inputs;
};

// Encoder once, first decoder pass on golden inputs, mixing, second pass,
// loss against golden labels. `second` drives encoder and second-pass
// dropout, `first` the first-pass dropout.
template <typename T>
TwoPassResult<T> TwoPassLoss(const Transformer<T>& model, const SamplerConfig& config,
                             const Batch& batch, std::int64_t step, Rng& sampler_rng,
                             const ForwardOptions& second, const ForwardOptions& first);

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double golden_fraction = 1.0;
  double mean_probability = 1.0;
  double learning_rate = 0.0;
  std::string mode;
};

// Owns the optimizer and the step counter for one model. Every random
// stream is derived from (seed, step), so a resumed run continues exactly.
template <typename T>
class ScheduledSamplingTrainer {
 public:
  ScheduledSamplingTrainer(Transformer<T>& model, const SamplerConfig& sampler,
                           const OptimizerConfig& optimizer, std::uint64_t seed);

  // One update on `batch`. Throws DivergenceError on a non-finite loss.
  StepRecord Step(const Batch& batch);

  std::int64_t step() const { return step_; }
  Transformer<T>& model() { return model_; }
  const SamplerConfig& sampler() const { return sampler_; }
  AdamOptimizer<T>& optimizer() { return optimizer_; }

  // Model, optimizer moments and step counter.
  void SaveTo(Checkpoint& ckpt) const;
  void LoadFrom(const Checkpoint& ckpt);

 private:
  Transformer<T>& model_;
  SamplerConfig sampler_;
  AdamOptimizer<T> optimizer_;
  std::uint64_t seed_;
  std::int64_t step_ = 0;
};

// Runs steps until trainer.step() == total_steps, pulling batch k from
// stream.At(k). `on_step` sees every record.
template <typename T>
void Train(ScheduledSamplingTrainer<T>& trainer, BatchStream& stream, std::int64_t total_steps,
           const std::function<void(const StepRecord&)>& on_step = {});

extern template class ScheduledSamplingTrainer<float>;
extern template class ScheduledSamplingTrainer<double>;

}  // namespace ssdec

#endif  // SSDEC_SAMPLER_H_
