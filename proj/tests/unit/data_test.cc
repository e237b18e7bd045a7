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
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "ssdec/error.h"

namespace ssdec {
namespace {

std::filesystem::path TempFile(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

TEST(Vocab, ReservedIds) {
  const Vocab v = Vocab::Synthetic(10);
  EXPECT_EQ(v.size(), 10);
  EXPECT_EQ(v.Id("w5"), 5);
  EXPECT_EQ(v.Id("nope"), kUnkId);
  EXPECT_EQ(v.Token(kPadId), v.Token(0));
  EXPECT_EQ(v.Join(std::vector<std::int32_t>{5, 6}), "w5 w6");
}

TEST(GenerateTask, Deterministic) {
  TaskConfig c;
  c.count = 50;
  const Corpus a = GenerateTask(c), b = GenerateTask(c);
  EXPECT_EQ(a.pairs, b.pairs);
  c.seed = 2;
  EXPECT_NE(GenerateTask(c).pairs, a.pairs);
}

TEST(GenerateTask, ContentTokensAndLengths) {
  for (auto kind : {TaskKind::kCopy, TaskKind::kReverse, TaskKind::kNoisyMap}) {
    TaskConfig c;
    c.kind = kind;
    c.count = 200;
    c.min_length = 3;
    c.max_length = 7;
    for (const auto& p : GenerateTask(c).pairs) {
      EXPECT_GE(p.source.size(), 3u);
      EXPECT_LE(p.source.size(), 7u);
      EXPECT_EQ(p.source.size(), p.target.size());
      for (auto id : p.source) EXPECT_GE(id, kFirstContentId);
      for (auto id : p.target) {
        EXPECT_GE(id, kFirstContentId);
        EXPECT_LT(id, c.vocab_size);
      }
    }
  }
}

TEST(GenerateTask, ReverseOfPalindromeEqualsCopy) {
  TaskConfig c;
  c.kind = TaskKind::kReverse;
  c.count = 300;
  for (const auto& p : GenerateTask(c).pairs) {
    std::vector<std::int32_t> r(p.source.rbegin(), p.source.rend());
    EXPECT_EQ(p.target, r);
    if (r == p.source) EXPECT_EQ(p.target, p.source);
  }
}

TEST(GenerateTask, NoiselessNoisyMapIsBijection) {
  TaskConfig c;
  c.kind = TaskKind::kNoisyMap;
  c.noise_rate = 0.0;
  std::set<std::int32_t> image;
  for (std::int32_t id = kFirstContentId; id < c.vocab_size; ++id) {
    const auto m = NoisyMapToken(c, id);
    EXPECT_GE(m, kFirstContentId);
    EXPECT_LT(m, c.vocab_size);
    image.insert(m);
  }
  EXPECT_EQ(image.size(), static_cast<std::size_t>(c.vocab_size - kFirstContentId));
  c.count = 100;
  for (const auto& p : GenerateTask(c).pairs) {
    for (std::size_t j = 0; j < p.source.size(); ++j) EXPECT_EQ(p.target[j], NoisyMapToken(c, p.source[j]));
  }
}

TEST(GenerateTask, NoiseRateIsRespected) {
  TaskConfig c;
  c.kind = TaskKind::kNoisyMap;
  c.count = 2000;
  c.noise_rate = 0.1;
  std::int64_t changed = 0, total = 0;
  for (const auto& p : GenerateTask(c).pairs) {
    for (std::size_t j = 0; j < p.source.size(); ++j) {
      changed += p.target[j] != NoisyMapToken(c, p.source[j]);
      ++total;
    }
  }
  // A substitution may redraw the mapped token itself.
  const double expect = 0.1 * (1.0 - 1.0 / (c.vocab_size - kFirstContentId));
  EXPECT_NEAR(static_cast<double>(changed) / total, expect, 0.01);
}

TEST(GenerateTask, RejectsBadRanges) {
  TaskConfig c;
  c.min_length = 8;
  c.max_length = 4;
  EXPECT_THROW(GenerateTask(c), ConfigError);
  c = {};
  c.min_length = 0;
  EXPECT_THROW(GenerateTask(c), ConfigError);
  c = {};
  c.vocab_size = 5;
  EXPECT_THROW(GenerateTask(c), ConfigError);
}

TEST(LoadTsvCorpus, OneLine) {
  const auto p = TempFile("ssdec_one.tsv", "a b\tc d\n");
  const Corpus c = LoadTsvCorpus(p);
  ASSERT_EQ(c.pairs.size(), 1u);
  EXPECT_EQ(c.pairs[0].source.size(), 2u);
  EXPECT_EQ(c.pairs[0].target.size(), 2u);
  EXPECT_EQ(c.vocab.Join(c.pairs[0].target), "c d");
  std::filesystem::remove(p);
}

TEST(LoadTsvCorpus, EmptyAndMalformed) {
  const auto e = TempFile("ssdec_empty.tsv", "");
  EXPECT_THROW(LoadTsvCorpus(e), DataError);
  const auto m = TempFile("ssdec_bad.tsv", "a b\tc\nno tab here\n");
  try {
    LoadTsvCorpus(m);
    FAIL() << "expected DataError";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find(":2"), std::string::npos) << err.what();
  }
  std::filesystem::remove(e);
  std::filesystem::remove(m);
}

TEST(LoadTsvCorpus, RoundTripAndUnknowns) {
  TaskConfig tc;
  tc.count = 40;
  const Corpus c = GenerateTask(tc);
  const auto p = std::filesystem::temp_directory_path() / "ssdec_rt.tsv";
  WriteTsvCorpus(p, c);
  const Corpus r = LoadTsvCorpus(p, c.vocab);
  EXPECT_EQ(r.pairs, c.pairs);
  const auto q = TempFile("ssdec_unk.tsv", "w5 zzz\tw6\n");
  EXPECT_EQ(LoadTsvCorpus(q, c.vocab).pairs[0].source[1], kUnkId);
  std::filesystem::remove(p);
  std::filesystem::remove(q);
}

TEST(MakeBatch, SentinelsAndPadding) {
  Corpus c;
  c.vocab = Vocab::Synthetic(10);
  c.pairs = {{{5, 6, 7}, {8, 9}}, {{5}, {6, 7, 8}}};
  const std::vector<std::size_t> idx{0, 1};
  const Batch b = MakeBatch(c, idx);
  EXPECT_EQ(b.target.cols, 5);
  EXPECT_EQ(b.target.ids, (std::vector<std::int32_t>{1, 8, 9, 2, 0, 1, 6, 7, 8, 2}));
  EXPECT_EQ(b.target.mask, (std::vector<std::uint8_t>{1, 1, 1, 1, 0, 1, 1, 1, 1, 1}));
  EXPECT_EQ(b.source.mask, (std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0}));
  EXPECT_EQ(b.NumLabelTokens(), 7);
  EXPECT_EQ(b.DecoderInput().cols, 4);
  EXPECT_EQ(b.Labels().at(0, 0), 8);
}

TEST(PlanBatches, SinglePairAndBudget) {
  Corpus one;
  one.vocab = Vocab::Synthetic(10);
  one.pairs = {{{5, 6}, {7, 8}}};
  EXPECT_EQ(PlanBatches(one, 100).size(), 1u);

  TaskConfig tc;
  tc.count = 500;
  tc.min_length = 2;
  tc.max_length = 30;
  const Corpus c = GenerateTask(tc);
  const auto plan = PlanBatches(c, 256);
  std::vector<int> seen(c.pairs.size(), 0);
  for (const auto& batch : plan) {
    const Batch b = MakeBatch(c, batch);
    EXPECT_LE(b.size() * std::max(b.source.cols, b.target.cols), 256);
    for (auto i : batch) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(BatchStream, SameSeedSameSequence) {
  TaskConfig tc;
  tc.count = 300;
  const Corpus c = GenerateTask(tc);
  BatchStream a(c, 128, 9), b(c, 128, 9), d(c, 128, 10);
  bool differs = false;
  for (int s = 0; s < 3 * a.batches_per_epoch(); ++s) {
    EXPECT_EQ(a.At(s).pair_indices, b.At(s).pair_indices);
    differs |= a.At(s).pair_indices != d.At(s).pair_indices;
  }
  EXPECT_TRUE(differs);
  // Random access matches sequential access.
  BatchStream e(c, 128, 9);
  EXPECT_EQ(e.At(17).pair_indices, a.At(17).pair_indices);
}

}  // namespace
}  // namespace ssdec
