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

#ifndef SSDEC_DATA_H_
#define SSDEC_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ssdec/tensor.h"

namespace ssdec {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kBosId = 1;
inline constexpr std::int32_t kEosId = 2;
inline constexpr std::int32_t kUnkId = 3;
// Fills truncated/padded hypotheses during fuzzy matching; never matches.
inline constexpr std::int32_t kNullId = 4;
inline constexpr std::int32_t kFirstContentId = 5;

// Token <-> id bijection. Ids 0..4 are the reserved symbols above.
class Vocab {
 public:
  Vocab();
  // Reserved symbols plus content tokens "w5" .. "w<size-1>".
  static Vocab Synthetic(int size);

  std::int32_t Add(std::string_view token);
  // kUnkId for unknown tokens.
  std::int32_t Id(std::string_view token) const;
  bool Contains(std::string_view token) const;
  const std::string& Token(std::int32_t id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  // Space-joined tokens.
  std::string Join(std::span<const std::int32_t> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

// Content tokens only; sentinels are added when batching.
struct SequencePair {
  std::vector<std::int32_t> source;
  std::vector<std::int32_t> target;
  bool operator==(const SequencePair&) const = default;
};

struct Corpus {
  Vocab vocab;
  std::vector<SequencePair> pairs;
};

enum class TaskKind { kCopy, kReverse, kNoisyMap };

std::string_view ToString(TaskKind kind);
TaskKind ParseTaskKind(std::string_view text);

struct TaskConfig {
  TaskKind kind = TaskKind::kCopy;
  int vocab_size = 50;
  int min_length = 5;
  int max_length = 10;
  int count = 1000;
  std::uint64_t seed = 1;
  // NoisyMap: target = (scale * (id - 5) + shift) mod (vocab_size - 5) + 5,
  // then each target token is replaced by a random content token with
  // probability noise_rate.
  int map_scale = 7;
  int map_shift = 3;
  double noise_rate = 0.1;

  void Validate() const;
};

Corpus GenerateTask(const TaskConfig& config);

// The noiseless NoisyMap token function.
std::int32_t NoisyMapToken(const TaskConfig& config, std::int32_t id);

// Lines of "source tokens<TAB>target tokens", whitespace tokenized. The
// first overload builds the vocabulary from the file; the second maps
// unseen tokens to kUnkId.
Corpus LoadTsvCorpus(const std::filesystem::path& path);
Corpus LoadTsvCorpus(const std::filesystem::path& path, const Vocab& vocab);
void WriteTsvCorpus(const std::filesystem::path& path, const Corpus& corpus);

// Row-major [rows, cols] token ids; mask is 1 on real tokens, 0 on padding.
struct TokenMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> mask;

  std::int32_t at(std::int64_t r, std::int64_t c) const { return ids[r * cols + c]; }
  Shape shape() const { return {rows, cols}; }
  // Columns [begin, end).
  TokenMatrix Columns(std::int64_t begin, std::int64_t end) const;
};

// Padded batch. Every target row is BOS, content, EOS, then padding.
struct Batch {
  TokenMatrix source;
  TokenMatrix target;
  std::vector<int> source_lengths;
  // Content tokens, excluding sentinels.
  std::vector<int> target_lengths;
  std::vector<std::size_t> pair_indices;

  std::int64_t size() const { return source.rows; }
  // target[:, :-1]; position 0 holds BOS.
  TokenMatrix DecoderInput() const { return target.Columns(0, target.cols - 1); }
  // target[:, 1:]; the next-token labels.
  TokenMatrix Labels() const { return target.Columns(1, target.cols); }
  std::int64_t NumLabelTokens() const;
};

Batch MakeBatch(const Corpus& corpus, std::span<const std::size_t> indices);

// Length-bucketed batches whose padded cost rows * max(src cols, tgt cols)
// stays within token_budget. A pair larger than the budget gets its own
// batch. Every pair appears exactly once.
std::vector<std::vector<std::size_t>> PlanBatches(const Corpus& corpus,
                                                  std::int64_t token_budget);

// Endless batch sequence: the planned batches in a fresh seeded order each
// epoch. Batch(step) depends only on (corpus, budget, seed, step), so runs
// resume at any step.
class BatchStream {
 public:
  BatchStream(const Corpus& corpus, std::int64_t token_budget, std::uint64_t seed);

  Batch At(std::int64_t step);
  std::int64_t batches_per_epoch() const { return static_cast<std::int64_t>(plan_.size()); }
  const std::vector<std::vector<std::size_t>>& plan() const { return plan_; }
  std::vector<std::size_t> EpochOrder(std::int64_t epoch) const;

 private:
  const Corpus* corpus_;
  std::uint64_t seed_;
  std::vector<std::vector<std::size_t>> plan_;
  std::int64_t cached_epoch_ = -1;
  std::vector<std::size_t> cached_order_;
};

}  // namespace ssdec

#endif  // SSDEC_DATA_H_
