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

#include "ssdec/sampler.h"

#include <algorithm>
#include <cmath>

#include "ssdec/error.h"
#include "ssdec/ops.h"

namespace ssdec {

std::string_view ToString(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kTeacherForcing: return "teacher_forcing";
    case SamplingMode::kTrainingSteps: return "training_steps";
    case SamplingMode::kDecodingSteps: return "decoding_steps";
    case SamplingMode::kJoint: return "joint";
  }
  return "unknown";
}

std::string_view ToString(PredictionRepresentation rep) {
  switch (rep) {
    case PredictionRepresentation::kSoftMix: return "soft_mix";
    case PredictionRepresentation::kArgmaxEmbedding: return "argmax_embedding";
  }
  return "unknown";
}

SamplingMode ParseSamplingMode(std::string_view text) {
  for (auto m : {SamplingMode::kTeacherForcing, SamplingMode::kTrainingSteps,
                 SamplingMode::kDecodingSteps, SamplingMode::kJoint}) {
    if (ToString(m) == text) return m;
  }
  throw ConfigError("unknown sampling mode '" + std::string(text) + "'");
}

PredictionRepresentation ParsePredictionRepresentation(std::string_view text) {
  for (auto r : {PredictionRepresentation::kSoftMix, PredictionRepresentation::kArgmaxEmbedding}) {
    if (ToString(r) == text) return r;
  }
  throw ConfigError("unknown prediction representation '" + std::string(text) + "'");
}

void SamplerConfig::Validate() const {
  if (warm_start_steps < 0) throw ConfigError("warm_start_steps must be >= 0");
  switch (mode) {
    case SamplingMode::kTeacherForcing:
      break;
    case SamplingMode::kTrainingSteps:
    case SamplingMode::kDecodingSteps:
      schedule.Validate();
      break;
    case SamplingMode::kJoint:
      joint.Validate();
      break;
  }
}

bool SamplerConfig::TeacherForced(std::int64_t step) const {
  return mode == SamplingMode::kTeacherForcing || step < warm_start_steps;
}

double SamplerConfig::GoldenProbability(std::int64_t step, std::int64_t position) const {
  if (step < 0 || position < 0) throw ContractError("negative step or position");
  if (TeacherForced(step) || position == 0) return 1.0;
  const auto i = static_cast<double>(step - warm_start_steps);
  // Input position p carries the token generated at decoding step p - 1.
  const auto t = static_cast<double>(position - 1);
  switch (mode) {
    case SamplingMode::kTeacherForcing: return 1.0;
    case SamplingMode::kTrainingSteps: return EvalSchedule(schedule, i);
    case SamplingMode::kDecodingSteps: return EvalSchedule(schedule, t);
    case SamplingMode::kJoint: return EvalJoint(joint, i, t);
  }
  return 1.0;
}

std::vector<std::uint8_t> SampleSelectionMask(const SamplerConfig& config, std::int64_t step,
                                              std::int64_t rows, std::int64_t cols, Rng& rng,
                                              std::vector<double>* probabilities) {
  if (rows < 0 || cols < 0) throw ContractError("negative mask shape");
  std::vector<double> p(static_cast<std::size_t>(cols));
  for (std::int64_t t = 0; t < cols; ++t) p[t] = config.GoldenProbability(step, t);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows * cols), 1);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t t = 1; t < cols; ++t) {
      mask[r * cols + t] = rng.Bernoulli(p[t]) ? 1 : 0;
    }
  }
  if (probabilities) *probabilities = std::move(p);
  return mask;
}

template <typename T>
Tensor<T> PredictionEmbeddings(const Tensor<T>& logits, const Tensor<T>& target_embedding,
                               PredictionRepresentation rep) {
  if (logits.rank() != 3 || logits.dim(2) != target_embedding.dim(0)) {
    throw ShapeError("logits " + ShapeToString(logits.shape()) + " do not match embedding " +
                     ShapeToString(target_embedding.shape()));
  }
  if (rep == PredictionRepresentation::kSoftMix) {
    return WeightedEmbeddingMix(Softmax(logits, -1), target_embedding);
  }
  const auto v = logits.dim(2);
  const auto positions = logits.size() / v;
  std::vector<std::int32_t> ids(static_cast<std::size_t>(positions));
  const T* x = logits.data();
  for (std::int64_t r = 0; r < positions; ++r) {
    const T* row = x + r * v;
    ids[r] = static_cast<std::int32_t>(std::max_element(row, row + v) - row);
  }
  return EmbeddingLookup(target_embedding, std::span<const std::int32_t>(ids),
                         Shape{logits.dim(0), logits.dim(1)});
}

template <typename T>
Tensor<T> ShiftRight(const Tensor<T>& predictions) {
  if (predictions.rank() != 3) throw ShapeError("ShiftRight expects [B, n, H]");
  const auto b = predictions.dim(0);
  const auto n = predictions.dim(1);
  const auto h = predictions.dim(2);
  Tensor<T> zeros = Tensor<T>::Zeros({b, 1, h});
  if (n <= 1) return n == 1 ? zeros : predictions;
  return Concat<T>({zeros, Slice(predictions, 1, 0, n - 1)}, 1);
}

template <typename T>
Tensor<T> MixEmbeddings(const Tensor<T>& golden, const Tensor<T>& predicted,
                        const std::vector<std::uint8_t>& mask) {
  if (golden.shape() != predicted.shape() || golden.rank() != 3) {
    throw ShapeError("cannot mix " + ShapeToString(golden.shape()) + " with " +
                     ShapeToString(predicted.shape()));
  }
  const auto h = golden.dim(2);
  if (static_cast<std::int64_t>(mask.size()) * h != golden.size()) {
    throw ShapeError("selection mask does not cover the decoder inputs");
  }
  std::vector<T> keep(static_cast<std::size_t>(golden.size()));
  std::vector<T> swap(keep.size());
  for (std::size_t pos = 0; pos < mask.size(); ++pos) {
    const T m = mask[pos] ? T(1) : T(0);
    std::fill_n(keep.begin() + pos * h, h, m);
    std::fill_n(swap.begin() + pos * h, h, T(1) - m);
  }
  Tensor<T> keep_t = Tensor<T>::FromValues(golden.shape(), std::move(keep));
  Tensor<T> swap_t = Tensor<T>::FromValues(golden.shape(), std::move(swap));
  return Add(Mul(golden, keep_t), Mul(predicted, swap_t));
}

template <typename T>
TwoPassResult<T> TwoPassLoss(const Transformer<T>& model, const SamplerConfig& config,
                             const Batch& batch, std::int64_t step, Rng& sampler_rng,
                             const ForwardOptions& second, const ForwardOptions& first) {
  if (batch.size() == 0) throw ContractError("two-pass loss on an empty batch");
  const TokenMatrix inputs = batch.DecoderInput();
  Tensor<T> enc = model.Encode(batch.source, second);
  Tensor<T> golden = model.EmbedTargets(inputs);

  Tensor<T> predicted;
  {
    Tape<T>* outer = Tape<T>::Active();
    TapeScope<T> scope(config.block_first_pass_gradient ? nullptr : outer);
    Tensor<T> logits = model.DecoderLogits(golden, enc, batch.source, first);
    predicted = ShiftRight(
        PredictionEmbeddings(logits, model.params().target_embedding, config.representation));
  }

  TwoPassResult<T> out;
  auto& mixed = out.inputs;
  mixed.golden = SampleSelectionMask(config, step, inputs.rows, inputs.cols, sampler_rng,
                                     &mixed.probabilities);
  std::int64_t counted = 0;
  std::int64_t kept = 0;
  double p_sum = 0.0;
  for (std::int64_t r = 0; r < inputs.rows; ++r) {
    for (std::int64_t t = 1; t < inputs.cols; ++t) {
      if (!inputs.mask[r * inputs.cols + t]) continue;
      ++counted;
      kept += mixed.golden[r * inputs.cols + t];
      p_sum += mixed.probabilities[t];
    }
  }
  if (counted > 0) {
    mixed.golden_fraction = static_cast<double>(kept) / static_cast<double>(counted);
    mixed.mean_probability = p_sum / static_cast<double>(counted);
  }
  mixed.embeddings = MixEmbeddings(golden, predicted, mixed.golden);
  Tensor<T> logits = model.DecoderLogits(mixed.embeddings, enc, batch.source, second);
  out.loss = model.LossFromLogits(logits, batch);
  return out;
}

template <typename T>
ScheduledSamplingTrainer<T>::ScheduledSamplingTrainer(Transformer<T>& model,
                                                      const SamplerConfig& sampler,
                                                      const OptimizerConfig& optimizer,
                                                      std::uint64_t seed)
    : model_(model),
      sampler_(sampler),
      optimizer_(optimizer, model.config().hidden_size),
      seed_(seed) {
  sampler_.Validate();
}

template <typename T>
StepRecord ScheduledSamplingTrainer<T>::Step(const Batch& batch) {
  Rng dropout_rng(DeriveSeed(seed_, "dropout", static_cast<std::uint64_t>(step_)));
  Rng first_rng(DeriveSeed(seed_, "dropout.first_pass", static_cast<std::uint64_t>(step_)));
  Rng sampler_rng(DeriveSeed(seed_, "sampler", static_cast<std::uint64_t>(step_)));
  const ForwardOptions second{true, &dropout_rng};
  const ForwardOptions first{true, &first_rng};

  StepRecord rec;
  rec.step = step_;
  Tape<T> tape;
  TapeScope<T> scope(&tape);
  Tensor<T> loss;
  if (sampler_.TeacherForced(step_)) {
    loss = model_.TeacherForcingLoss(batch, second);
    rec.mode = std::string(ToString(SamplingMode::kTeacherForcing));
  } else {
    TwoPassResult<T> r = TwoPassLoss(model_, sampler_, batch, step_, sampler_rng, second, first);
    loss = r.loss;
    rec.golden_fraction = r.inputs.golden_fraction;
    rec.mean_probability = r.inputs.mean_probability;
    rec.mode = std::string(ToString(sampler_.mode));
  }
  rec.loss = static_cast<double>(loss.item());
  if (!std::isfinite(rec.loss)) {
    tape.Clear();
    throw DivergenceError("non-finite loss at step " + std::to_string(step_));
  }
  tape.Backward(loss);
  rec.learning_rate = optimizer_.Step(model_.NamedParameters());
  ++step_;
  return rec;
}

template <typename T>
void ScheduledSamplingTrainer<T>::SaveTo(Checkpoint& ckpt) const {
  const auto params = model_.NamedParameters();
  model_.SaveTo(ckpt);
  optimizer_.SaveTo(ckpt, params);
  ckpt.PutScalar("trainer/step", static_cast<double>(step_));
}

template <typename T>
void ScheduledSamplingTrainer<T>::LoadFrom(const Checkpoint& ckpt) {
  const auto params = model_.NamedParameters();
  model_.LoadFrom(ckpt);
  optimizer_.LoadFrom(ckpt, params);
  step_ = static_cast<std::int64_t>(ckpt.GetScalar("trainer/step"));
}

template <typename T>
void Train(ScheduledSamplingTrainer<T>& trainer, BatchStream& stream, std::int64_t total_steps,
           const std::function<void(const StepRecord&)>& on_step) {
  while (trainer.step() < total_steps) {
    const StepRecord rec = trainer.Step(stream.At(trainer.step()));
    if (on_step) on_step(rec);
  }
}

#define SSDEC_INSTANTIATE_SAMPLER(T)                                                        \
  template Tensor<T> PredictionEmbeddings(const Tensor<T>&, const Tensor<T>&,               \
                                          PredictionRepresentation);                        \
  template Tensor<T> ShiftRight(const Tensor<T>&);                                          \
  template Tensor<T> MixEmbeddings(const Tensor<T>&, const Tensor<T>&,                      \
                                   const std::vector<std::uint8_t>&);                       \
  template TwoPassResult<T> TwoPassLoss(const Transformer<T>&, const SamplerConfig&,        \
                                        const Batch&, std::int64_t, Rng&,                   \
                                        const ForwardOptions&, const ForwardOptions&);      \
  template class ScheduledSamplingTrainer<T>;                                               \
  template void Train(ScheduledSamplingTrainer<T>&, BatchStream&, std::int64_t,             \
                      const std::function<void(const StepRecord&)>&);

SSDEC_INSTANTIATE_SAMPLER(float)
SSDEC_INSTANTIATE_SAMPLER(double)

}  // namespace ssdec
