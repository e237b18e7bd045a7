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

#include "ssdec/data.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ssdec/error.h"
#include "ssdec/rng.h"

namespace ssdec {
namespace {

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

int Gcd(int a, int b) {
  while (b != 0) {
    const int t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

Corpus LoadTsvImpl(const std::filesystem::path& path, Vocab* fixed_vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  Corpus corpus;
  if (fixed_vocab) corpus.vocab = *fixed_vocab;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected exactly one tab between source and target");
    }
    const auto src = SplitWhitespace(std::string_view(line).substr(0, tab));
    const auto tgt = SplitWhitespace(std::string_view(line).substr(tab + 1));
    if (src.empty() || tgt.empty()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": source and target must both be non-empty");
    }
    SequencePair pair;
    for (const auto& t : src) {
      pair.source.push_back(fixed_vocab ? corpus.vocab.Id(t) : corpus.vocab.Add(t));
    }
    for (const auto& t : tgt) {
      pair.target.push_back(fixed_vocab ? corpus.vocab.Id(t) : corpus.vocab.Add(t));
    }
    corpus.pairs.push_back(std::move(pair));
  }
  if (corpus.pairs.empty()) throw DataError("corpus " + path.string() + " is empty");
  return corpus;
}

}  // namespace

Vocab::Vocab() {
  for (const char* t : {"<pad>", "<s>", "</s>", "<unk>", "<null>"}) Add(t);
}

Vocab Vocab::Synthetic(int size) {
  if (size <= kFirstContentId) {
    throw ConfigError("synthetic vocabulary needs more than " +
                      std::to_string(kFirstContentId) + " ids");
  }
  Vocab v;
  for (int i = kFirstContentId; i < size; ++i) v.Add("w" + std::to_string(i));
  return v;
}

std::int32_t Vocab::Add(std::string_view token) {
  auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(std::string(token), id);
  return id;
}

std::int32_t Vocab::Id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocab::Contains(std::string_view token) const {
  return ids_.count(std::string(token)) != 0;
}

const std::string& Vocab::Token(std::int32_t id) const {
  if (id < 0 || id >= size()) throw ContractError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocab::Join(std::span<const std::int32_t> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += Token(ids[i]);
  }
  return out;
}

std::string_view ToString(TaskKind kind) {
  switch (kind) {
    case TaskKind::kCopy: return "copy";
    case TaskKind::kReverse: return "reverse";
    case TaskKind::kNoisyMap: return "noisy_map";
  }
  return "unknown";
}

TaskKind ParseTaskKind(std::string_view text) {
  for (auto k : {TaskKind::kCopy, TaskKind::kReverse, TaskKind::kNoisyMap}) {
    if (ToString(k) == text) return k;
  }
  throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

void TaskConfig::Validate() const {
  if (vocab_size <= kFirstContentId) {
    throw ConfigError("task vocab_size must exceed " + std::to_string(kFirstContentId));
  }
  if (min_length < 1 || max_length < min_length) {
    throw ConfigError("task length range [" + std::to_string(min_length) + ", " +
                      std::to_string(max_length) + "] is empty or non-positive");
  }
  if (count < 0) throw ConfigError("task count must be >= 0");
  if (kind == TaskKind::kNoisyMap) {
    const int content = vocab_size - kFirstContentId;
    if (Gcd(map_scale, content) != 1) {
      throw ConfigError("noisy_map scale " + std::to_string(map_scale) +
                        " must be coprime with the content vocabulary size " +
                        std::to_string(content));
    }
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
      throw ConfigError("noisy_map noise_rate must lie in [0, 1]");
    }
  }
}

std::int32_t NoisyMapToken(const TaskConfig& config, std::int32_t id) {
  const std::int64_t content = config.vocab_size - kFirstContentId;
  std::int64_t v = (static_cast<std::int64_t>(config.map_scale) * (id - kFirstContentId) +
                    config.map_shift) % content;
  if (v < 0) v += content;
  return static_cast<std::int32_t>(v + kFirstContentId);
}

Corpus GenerateTask(const TaskConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.vocab = Vocab::Synthetic(config.vocab_size);
  Rng rng(DeriveSeed(config.seed, "task"));
  corpus.pairs.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    const auto len = static_cast<std::size_t>(rng.Between(config.min_length, config.max_length));
    SequencePair p;
    p.source.resize(len);
    for (auto& tok : p.source) {
      tok = static_cast<std::int32_t>(rng.Between(kFirstContentId, config.vocab_size - 1));
    }
    switch (config.kind) {
      case TaskKind::kCopy:
        p.target = p.source;
        break;
      case TaskKind::kReverse:
        p.target.assign(p.source.rbegin(), p.source.rend());
        break;
      case TaskKind::kNoisyMap:
        p.target.resize(len);
        for (std::size_t j = 0; j < len; ++j) {
          p.target[j] = NoisyMapToken(config, p.source[j]);
          if (config.noise_rate > 0.0 && rng.Bernoulli(config.noise_rate)) {
            p.target[j] =
                static_cast<std::int32_t>(rng.Between(kFirstContentId, config.vocab_size - 1));
          }
        }
        break;
    }
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

Corpus LoadTsvCorpus(const std::filesystem::path& path) { return LoadTsvImpl(path, nullptr); }

Corpus LoadTsvCorpus(const std::filesystem::path& path, const Vocab& vocab) {
  Vocab copy = vocab;
  return LoadTsvImpl(path, &copy);
}

void WriteTsvCorpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& p : corpus.pairs) {
    out << corpus.vocab.Join(p.source) << '\t' << corpus.vocab.Join(p.target) << '\n';
  }
}

TokenMatrix TokenMatrix::Columns(std::int64_t begin, std::int64_t end) const {
  TokenMatrix out;
  out.rows = rows;
  out.cols = end - begin;
  out.ids.reserve(static_cast<std::size_t>(out.rows * out.cols));
  out.mask.reserve(out.ids.capacity());
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = begin; c < end; ++c) {
      out.ids.push_back(ids[r * cols + c]);
      out.mask.push_back(mask[r * cols + c]);
    }
  }
  return out;
}

std::int64_t Batch::NumLabelTokens() const {
  std::int64_t n = 0;
  for (int len : target_lengths) n += len + 1;
  return n;
}

Batch MakeBatch(const Corpus& corpus, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ContractError("cannot build an empty batch");
  Batch b;
  std::int64_t max_src = 0, max_tgt = 0;
  for (auto i : indices) {
    const auto& p = corpus.pairs.at(i);
    max_src = std::max<std::int64_t>(max_src, static_cast<std::int64_t>(p.source.size()));
    max_tgt = std::max<std::int64_t>(max_tgt, static_cast<std::int64_t>(p.target.size()));
  }
  const auto rows = static_cast<std::int64_t>(indices.size());
  b.source.rows = b.target.rows = rows;
  b.source.cols = max_src;
  b.target.cols = max_tgt + 2;
  b.source.ids.assign(static_cast<std::size_t>(rows * max_src), kPadId);
  b.source.mask.assign(b.source.ids.size(), 0);
  b.target.ids.assign(static_cast<std::size_t>(rows * b.target.cols), kPadId);
  b.target.mask.assign(b.target.ids.size(), 0);
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto& p = corpus.pairs[indices[r]];
    for (std::size_t j = 0; j < p.source.size(); ++j) {
      b.source.ids[r * max_src + j] = p.source[j];
      b.source.mask[r * max_src + j] = 1;
    }
    std::int32_t* row = b.target.ids.data() + r * b.target.cols;
    std::uint8_t* mrow = b.target.mask.data() + r * b.target.cols;
    row[0] = kBosId;
    for (std::size_t j = 0; j < p.target.size(); ++j) row[j + 1] = p.target[j];
    row[p.target.size() + 1] = kEosId;
    std::fill(mrow, mrow + p.target.size() + 2, 1);
    b.source_lengths.push_back(static_cast<int>(p.source.size()));
    b.target_lengths.push_back(static_cast<int>(p.target.size()));
    b.pair_indices.push_back(indices[r]);
  }
  return b;
}

std::vector<std::vector<std::size_t>> PlanBatches(const Corpus& corpus,
                                                  std::int64_t token_budget) {
  if (token_budget < 1) throw ConfigError("token budget must be >= 1");
  std::vector<std::size_t> order(corpus.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  auto width = [&](std::size_t i) {
    const auto& p = corpus.pairs[i];
    return std::max<std::int64_t>(static_cast<std::int64_t>(p.source.size()),
                                  static_cast<std::int64_t>(p.target.size()) + 2);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = corpus.pairs[a];
    const auto& pb = corpus.pairs[b];
    if (pa.target.size() != pb.target.size()) return pa.target.size() < pb.target.size();
    return pa.source.size() < pb.source.size();
  });
  std::vector<std::vector<std::size_t>> plan;
  std::vector<std::size_t> current;
  std::int64_t current_width = 0;
  for (auto i : order) {
    const std::int64_t w = std::max(current_width, width(i));
    if (!current.empty() && w * static_cast<std::int64_t>(current.size() + 1) > token_budget) {
      plan.push_back(std::move(current));
      current.clear();
      current_width = 0;
    }
    current.push_back(i);
    current_width = std::max(current_width, width(i));
  }
  if (!current.empty()) plan.push_back(std::move(current));
  return plan;
}

BatchStream::BatchStream(const Corpus& corpus, std::int64_t token_budget, std::uint64_t seed)
    : corpus_(&corpus), seed_(seed), plan_(PlanBatches(corpus, token_budget)) {
  if (plan_.empty()) throw DataError("cannot stream batches from an empty corpus");
}

std::vector<std::size_t> BatchStream::EpochOrder(std::int64_t epoch) const {
  std::vector<std::size_t> order(plan_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(seed_, "epoch", static_cast<std::uint64_t>(epoch)));
  rng.Shuffle(order.begin(), order.end());
  return order;
}

Batch BatchStream::At(std::int64_t step) {
  const std::int64_t nb = batches_per_epoch();
  const std::int64_t epoch = step / nb;
  if (epoch != cached_epoch_) {
    cached_order_ = EpochOrder(epoch);
    cached_epoch_ = epoch;
  }
  return MakeBatch(*corpus_, plan_[cached_order_[static_cast<std::size_t>(step % nb)]]);
}

}  // namespace ssdec
