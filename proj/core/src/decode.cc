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

#include "ssdec/decode.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssdec/error.h"

namespace ssdec {
namespace {

template <typename T>
Tensor<T> RepeatRows(const Tensor<T>& x, std::int64_t times) {
  Shape shape = x.shape();
  const auto row = x.size();
  shape[0] = times;
  std::vector<T> values(static_cast<std::size_t>(row * times));
  for (std::int64_t r = 0; r < times; ++r) {
    std::copy(x.data(), x.data() + row, values.begin() + r * row);
  }
  return Tensor<T>::FromValues(std::move(shape), std::move(values));
}

TokenMatrix RepeatRows(const TokenMatrix& m, std::int64_t times) {
  TokenMatrix out;
  out.rows = times;
  out.cols = m.cols;
  for (std::int64_t r = 0; r < times; ++r) {
    out.ids.insert(out.ids.end(), m.ids.begin(), m.ids.end());
    out.mask.insert(out.mask.end(), m.mask.begin(), m.mask.end());
  }
  return out;
}

TokenMatrix SelectRows(const TokenMatrix& m, std::int64_t begin, std::int64_t end) {
  TokenMatrix out;
  out.rows = end - begin;
  out.cols = m.cols;
  out.ids.assign(m.ids.begin() + begin * m.cols, m.ids.begin() + end * m.cols);
  out.mask.assign(m.mask.begin() + begin * m.cols, m.mask.begin() + end * m.cols);
  return out;
}

// Source matrix for pairs [begin, end) of a corpus.
TokenMatrix SourceMatrix(const Corpus& corpus, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return MakeBatch(corpus, idx).source;
}

template <typename T>
std::vector<double> LogSoftmaxRow(const T* logits, std::int64_t v) {
  double mx = -INFINITY;
  for (std::int64_t j = 0; j < v; ++j) mx = std::max(mx, static_cast<double>(logits[j]));
  double z = 0.0;
  for (std::int64_t j = 0; j < v; ++j) z += std::exp(static_cast<double>(logits[j]) - mx);
  const double log_z = mx + std::log(z);
  std::vector<double> out(static_cast<std::size_t>(v));
  for (std::int64_t j = 0; j < v; ++j) out[j] = static_cast<double>(logits[j]) - log_z;
  return out;
}

struct Candidate {
  std::size_t parent;
  std::int32_t token;
  double log_prob;
};

}  // namespace

void DecodeConfig::Validate(int max_positions) const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (max_length < 1) throw ConfigError("max_length must be >= 1");
  if (max_length > max_positions) {
    throw ConfigError("max_length " + std::to_string(max_length) + " exceeds max_positions " +
                      std::to_string(max_positions));
  }
  if (!std::isfinite(length_penalty)) throw ConfigError("length_penalty must be finite");
}

double LengthPenalty(int length, double alpha) {
  return std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

namespace {

// Beam of one: follow the argmax until it is EOS.
BeamResult ArgmaxSearch(NextTokenScorer& scorer, const DecodeConfig& config) {
  Hypothesis h;
  for (int step = 1; step <= config.max_length; ++step) {
    const auto row = scorer.NextLogProbs({h.tokens});
    if (row.size() != 1) throw ContractError("scorer returned wrong row count");
    const auto best = std::max_element(row[0].begin(), row[0].end()) - row[0].begin();
    h.log_prob += row[0][best];
    h.score = h.log_prob / LengthPenalty(step, config.length_penalty);
    if (best == config.eos_id) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(static_cast<std::int32_t>(best));
  }
  BeamResult result;
  result.unfinished = !h.finished;
  result.ranking.push_back(std::move(h));
  return result;
}

}  // namespace

BeamResult BeamSearch(NextTokenScorer& scorer, const DecodeConfig& config) {
  if (config.beam_size < 1 || config.max_length < 1) {
    throw ConfigError("beam_size and max_length must be >= 1");
  }
  const auto k = static_cast<std::size_t>(config.beam_size);
  const double alpha = config.length_penalty;
  if (k == 1) return ArgmaxSearch(scorer, config);

  std::vector<Hypothesis> alive(1);
  std::vector<Hypothesis> finished;
  double best_finished = -INFINITY;
  for (int step = 1; step <= config.max_length; ++step) {
    std::vector<Sequence> prefixes;
    prefixes.reserve(alive.size());
    for (const auto& h : alive) prefixes.push_back(h.tokens);
    const auto log_probs = scorer.NextLogProbs(prefixes);
    if (log_probs.size() != alive.size()) throw ContractError("scorer returned wrong row count");

    std::vector<Candidate> cands;
    for (std::size_t a = 0; a < alive.size(); ++a) {
      for (std::size_t v = 0; v < log_probs[a].size(); ++v) {
        cands.push_back({a, static_cast<std::int32_t>(v), alive[a].log_prob + log_probs[a][v]});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
      return x.log_prob > y.log_prob;
    });

    std::vector<Hypothesis> next;
    for (const Candidate& c : cands) {
      if (c.log_prob == -INFINITY) break;
      const double score = c.log_prob / LengthPenalty(step, alpha);
      if (c.token == config.eos_id) {
        finished.push_back({alive[c.parent].tokens, c.log_prob, score, true});
        best_finished = std::max(best_finished, score);
      } else if (next.size() < k) {
        Hypothesis h{alive[c.parent].tokens, c.log_prob, score, false};
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
    if (alive.empty()) break;
    if (!finished.empty()) {
      // Log-probabilities only fall, so the best reachable score of an alive
      // hypothesis uses the most favourable remaining length penalty.
      const double lp = alpha >= 0.0 ? LengthPenalty(config.max_length, alpha)
                                     : LengthPenalty(step + 1, alpha);
      if (best_finished >= alive.front().log_prob / lp) break;
    }
  }

  BeamResult result;
  if (finished.empty()) {
    result.unfinished = true;
    result.ranking = std::move(alive);
  } else {
    result.ranking = std::move(finished);
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const Hypothesis& x, const Hypothesis& y) { return x.score > y.score; });
  if (result.ranking.size() > k) result.ranking.resize(k);
  return result;
}

template <typename T>
TransformerScorer<T>::TransformerScorer(const Transformer<T>& model, const TokenMatrix& source)
    : model_(model), source_(source) {
  if (source.rows != 1) throw ShapeError("TransformerScorer takes one source row");
  TapeScope<T> no_tape(nullptr);
  encoded_ = model_.Encode(source_, ForwardOptions{});
}

template <typename T>
std::vector<std::vector<double>> TransformerScorer<T>::NextLogProbs(
    const std::vector<Sequence>& prefixes) {
  if (prefixes.empty()) return {};
  const auto rows = static_cast<std::int64_t>(prefixes.size());
  const auto len = static_cast<std::int64_t>(prefixes.front().size()) + 1;
  TokenMatrix inputs;
  inputs.rows = rows;
  inputs.cols = len;
  for (const auto& p : prefixes) {
    if (static_cast<std::int64_t>(p.size()) + 1 != len) {
      throw ShapeError("prefixes must have equal lengths");
    }
    inputs.ids.push_back(kBosId);
    inputs.ids.insert(inputs.ids.end(), p.begin(), p.end());
  }
  inputs.mask.assign(inputs.ids.size(), 1);

  TapeScope<T> no_tape(nullptr);
  const Tensor<T> logits =
      model_.DecoderLogits(model_.EmbedTargets(inputs), RepeatRows(encoded_, rows),
                           RepeatRows(source_, rows), ForwardOptions{});
  const auto v = logits.dim(2);
  std::vector<std::vector<double>> out;
  out.reserve(prefixes.size());
  for (std::int64_t r = 0; r < rows; ++r) {
    out.push_back(LogSoftmaxRow(logits.data() + (r * len + len - 1) * v, v));
  }
  return out;
}

template <typename T>
std::vector<Sequence> GreedyDecode(const Transformer<T>& model, const TokenMatrix& source,
                                   const DecodeConfig& config) {
  config.Validate(model.config().max_positions);
  TapeScope<T> no_tape(nullptr);
  const Tensor<T> encoded = model.Encode(source, ForwardOptions{});
  const auto rows = source.rows;
  std::vector<Sequence> out(static_cast<std::size_t>(rows));
  std::vector<bool> done(static_cast<std::size_t>(rows), false);
  std::vector<std::vector<std::int32_t>> inputs(static_cast<std::size_t>(rows), {kBosId});
  for (int step = 1; step <= config.max_length; ++step) {
    TokenMatrix m;
    m.rows = rows;
    m.cols = step;
    for (const auto& row : inputs) m.ids.insert(m.ids.end(), row.begin(), row.end());
    m.mask.assign(m.ids.size(), 1);
    const Tensor<T> logits =
        model.DecoderLogits(model.EmbedTargets(m), encoded, source, ForwardOptions{});
    const auto v = logits.dim(2);
    bool all_done = true;
    for (std::int64_t r = 0; r < rows; ++r) {
      if (done[r]) {
        inputs[r].push_back(config.eos_id);
        continue;
      }
      const T* row = logits.data() + (r * step + step - 1) * v;
      const auto token = static_cast<std::int32_t>(std::max_element(row, row + v) - row);
      inputs[r].push_back(token);
      if (token == config.eos_id) {
        done[r] = true;
      } else {
        out[r].push_back(token);
        all_done = false;
      }
    }
    if (all_done) break;
  }
  return out;
}

template <typename T>
std::vector<BeamResult> BeamDecode(const Transformer<T>& model, const TokenMatrix& source,
                                   const DecodeConfig& config) {
  config.Validate(model.config().max_positions);
  std::vector<BeamResult> out;
  for (std::int64_t r = 0; r < source.rows; ++r) {
    TransformerScorer<T> scorer(model, SelectRows(source, r, r + 1));
    out.push_back(BeamSearch(scorer, config));
  }
  return out;
}

template <typename T>
std::vector<Sequence> DecodeCorpus(const Transformer<T>& model, const Corpus& corpus,
                                   const DecodeConfig& config, int rows_per_batch) {
  if (rows_per_batch < 1) throw ConfigError("rows_per_batch must be >= 1");
  std::vector<Sequence> out;
  out.reserve(corpus.pairs.size());
  for (std::size_t begin = 0; begin < corpus.pairs.size(); begin += rows_per_batch) {
    const std::size_t end = std::min(corpus.pairs.size(), begin + rows_per_batch);
    const TokenMatrix source = SourceMatrix(corpus, begin, end);
    if (config.beam_size == 1) {
      for (auto& s : GreedyDecode(model, source, config)) out.push_back(std::move(s));
    } else {
      for (auto& r : BeamDecode(model, source, config)) out.push_back(r.best().tokens);
    }
  }
  return out;
}

template <typename T>
std::vector<Sequence> TeacherForcedPredictions(const Transformer<T>& model, const Corpus& corpus,
                                               int rows_per_batch) {
  if (rows_per_batch < 1) throw ConfigError("rows_per_batch must be >= 1");
  TapeScope<T> no_tape(nullptr);
  std::vector<Sequence> out;
  out.reserve(corpus.pairs.size());
  for (std::size_t begin = 0; begin < corpus.pairs.size(); begin += rows_per_batch) {
    const std::size_t end = std::min(corpus.pairs.size(), begin + rows_per_batch);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Batch batch = MakeBatch(corpus, idx);
    const Tensor<T> enc = model.Encode(batch.source, ForwardOptions{});
    const TokenMatrix inputs = batch.DecoderInput();
    const Tensor<T> logits =
        model.DecoderLogits(model.EmbedTargets(inputs), enc, batch.source, ForwardOptions{});
    const auto v = logits.dim(2);
    for (std::int64_t r = 0; r < batch.size(); ++r) {
      Sequence pred;
      for (int t = 0; t < batch.target_lengths[r]; ++t) {
        const T* row = logits.data() + (r * inputs.cols + t) * v;
        pred.push_back(static_cast<std::int32_t>(std::max_element(row, row + v) - row));
      }
      out.push_back(std::move(pred));
    }
  }
  return out;
}

template <typename T>
EmpiricalErrors ComputeEmpiricalErrors(const Transformer<T>& model, const Corpus& corpus,
                                       const DecodeConfig& config, int max_t, int window) {
  const auto hyps = DecodeCorpus(model, corpus, config);
  std::vector<Sequence> refs;
  refs.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) refs.push_back(p.target);
  EmpiricalErrors out;
  out.error_rate = ErrorRateCurve(FuzzyPrecisionPerStep(hyps, refs, window));
  out.table = EmpiricalErrorTable(out.error_rate, max_t);
  return out;
}

#define SSDEC_INSTANTIATE_DECODE(T)                                                          \
  template class TransformerScorer<T>;                                                       \
  template std::vector<Sequence> GreedyDecode(const Transformer<T>&, const TokenMatrix&,     \
                                              const DecodeConfig&);                          \
  template std::vector<BeamResult> BeamDecode(const Transformer<T>&, const TokenMatrix&,     \
                                              const DecodeConfig&);                          \
  template std::vector<Sequence> DecodeCorpus(const Transformer<T>&, const Corpus&,          \
                                              const DecodeConfig&, int);                     \
  template std::vector<Sequence> TeacherForcedPredictions(const Transformer<T>&,             \
                                                          const Corpus&, int);               \
  template EmpiricalErrors ComputeEmpiricalErrors(const Transformer<T>&, const Corpus&,      \
                                                  const DecodeConfig&, int, int);

SSDEC_INSTANTIATE_DECODE(float)
SSDEC_INSTANTIATE_DECODE(double)

}  // namespace ssdec
