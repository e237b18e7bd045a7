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

#ifndef SSDEC_DECODE_H_
#define SSDEC_DECODE_H_

#include <cstdint>
#include <vector>

#include "ssdec/data.h"
#include "ssdec/metrics.h"
#include "ssdec/model.h"

namespace ssdec {

struct DecodeConfig {
  int beam_size = 4;
  double length_penalty = 0.6;
  // Generated tokens, EOS included.
  int max_length = 64;
  std::int32_t eos_id = kEosId;

  // max_positions bounds the decoder input length.
  void Validate(int max_positions) const;
};

// ((5 + length) / 6)^alpha.
double LengthPenalty(int length, double alpha);

// Next-token distributions for a batch of prefixes. Prefixes hold generated
// tokens only; the BOS input is implied.
class NextTokenScorer {
 public:
  virtual ~NextTokenScorer() = default;
  virtual int vocab_size() const = 0;
  // One row of log-probabilities per prefix. All prefixes have equal length.
  virtual std::vector<std::vector<double>> NextLogProbs(
      const std::vector<Sequence>& prefixes) = 0;
};

struct Hypothesis {
  Sequence tokens;  // without EOS
  double log_prob = 0.0;
  // log_prob / LengthPenalty(generated length incl. EOS).
  double score = 0.0;
  bool finished = false;
};

struct BeamResult {
  // Best first; scores non-increasing.
  std::vector<Hypothesis> ranking;
  // Set when no hypothesis produced EOS within max_length; ranking then
  // holds the best unfinished hypotheses.
  bool unfinished = false;

  const Hypothesis& best() const { return ranking.front(); }
};

// Beam search. Every step expands each alive hypothesis by every token.
// EOS candidates move to a separate finished pool; the best beam_size
// non-EOS candidates stay alive. Search ends at max_length or when no alive
// hypothesis can still beat the best finished score. The ranking holds at
// most beam_size hypotheses. With beam_size 1 this is greedy decoding.
BeamResult BeamSearch(NextTokenScorer& scorer, const DecodeConfig& config);

// Scores prefixes for one source sentence with a transformer. The encoder
// runs once at construction.
template <typename T>
class TransformerScorer : public NextTokenScorer {
 public:
  // `source` must have exactly one row.
  TransformerScorer(const Transformer<T>& model, const TokenMatrix& source);

  int vocab_size() const override { return model_.config().vocab_size; }
  std::vector<std::vector<double>> NextLogProbs(const std::vector<Sequence>& prefixes) override;

 private:
  const Transformer<T>& model_;
  TokenMatrix source_;
  Tensor<T> encoded_;  // [1, m, H]
};

// Argmax decoding for every row of `source`; outputs exclude EOS.
template <typename T>
std::vector<Sequence> GreedyDecode(const Transformer<T>& model, const TokenMatrix& source,
                                   const DecodeConfig& config);

// Beam search per row of `source`.
template <typename T>
std::vector<BeamResult> BeamDecode(const Transformer<T>& model, const TokenMatrix& source,
                                   const DecodeConfig& config);

// Decodes every source sentence of `corpus` in order: greedy when
// beam_size == 1, beam search otherwise. `rows_per_batch` only groups work.
template <typename T>
std::vector<Sequence> DecodeCorpus(const Transformer<T>& model, const Corpus& corpus,
                                   const DecodeConfig& config, int rows_per_batch = 64);

// Argmax next-token predictions from golden prefixes, truncated to each
// reference length. This is the training-mode view of the model.
template <typename T>
std::vector<Sequence> TeacherForcedPredictions(const Transformer<T>& model, const Corpus& corpus,
                                               int rows_per_batch = 64);

struct EmpiricalErrors {
  StepCurve error_rate;       // 1 - fuzzy precision per step
  std::vector<double> table;  // dense, see EmpiricalErrorTable
};

// Decodes `corpus` and turns fuzzy precision into a per-step error table
// usable by ScheduleSpec::Empirical.
template <typename T>
EmpiricalErrors ComputeEmpiricalErrors(const Transformer<T>& model, const Corpus& corpus,
                                       const DecodeConfig& config, int max_t, int window = 3);

}  // namespace ssdec

#endif  // SSDEC_DECODE_H_
