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

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssdec/error.h"
#include "ssdec/sampler.h"

namespace ssdec {
namespace {

// Next-token distributions drawn at random per prefix, fixed by the seed.
class RandomScorer : public NextTokenScorer {
 public:
  RandomScorer(int vocab, std::uint64_t seed, double sharpness = 2.0)
      : vocab_(vocab), seed_(seed), sharpness_(sharpness) {}
  int vocab_size() const override { return vocab_; }
  std::vector<std::vector<double>> NextLogProbs(const std::vector<Sequence>& prefixes) override {
    std::vector<std::vector<double>> out;
    for (const auto& p : prefixes) {
      std::uint64_t h = seed_;
      for (auto t : p) h = Mix64(h ^ static_cast<std::uint64_t>(t + 1));
      Rng rng(h);
      std::vector<double> row(vocab_);
      double mx = -INFINITY;
      for (double& v : row) {
        v = sharpness_ * rng.Normal();
        mx = std::max(mx, v);
      }
      double z = 0.0;
      for (double v : row) z += std::exp(v - mx);
      for (double& v : row) v = v - mx - std::log(z);
      out.push_back(std::move(row));
    }
    return out;
  }

 private:
  int vocab_;
  std::uint64_t seed_;
  double sharpness_;
};

// Scorer that never emits EOS.
class NoEosScorer : public NextTokenScorer {
 public:
  int vocab_size() const override { return 4; }
  std::vector<std::vector<double>> NextLogProbs(const std::vector<Sequence>& prefixes) override {
    return std::vector<std::vector<double>>(
        prefixes.size(), {std::log(0.7), std::log(0.3), -INFINITY, -INFINITY});
  }
};

TEST(LengthPenalty, Values) {
  EXPECT_EQ(LengthPenalty(1, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(LengthPenalty(1, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(LengthPenalty(7, 0.5), std::sqrt(2.0));
}

TEST(DecodeConfig, Validation) {
  DecodeConfig c;
  c.beam_size = 0;
  EXPECT_THROW(c.Validate(128), ConfigError);
  c = {};
  c.max_length = 200;
  EXPECT_THROW(c.Validate(128), ConfigError);
  EXPECT_NO_THROW(DecodeConfig{}.Validate(128));
}

TEST(BeamSearch, MatchesExhaustiveOnSmallInstances) {
  for (int seed = 0; seed < 100; ++seed) {
    RandomScorer s(4, seed, 1.5);
    DecodeConfig c;
    c.beam_size = 4;
    c.max_length = 3;
    c.length_penalty = seed % 3 == 0 ? 0.0 : 0.6;
    const auto want = oracle::ExhaustiveBest(s, c);
    const auto got = BeamSearch(s, c);
    ASSERT_FALSE(got.unfinished);
    EXPECT_EQ(got.best().tokens, want.tokens) << seed;
    EXPECT_NEAR(got.best().score, want.score, 1e-12) << seed;
  }
}

TEST(BeamSearch, WiderBeamNeverScoresWorse) {
  for (int seed = 0; seed < 100; ++seed) {
    RandomScorer s(5, 1000 + seed, 1.0);
    DecodeConfig c;
    c.max_length = 4;
    double prev = -INFINITY;
    for (int beam = 1; beam <= 6; ++beam) {
      c.beam_size = beam;
      const auto r = BeamSearch(s, c);
      if (r.unfinished) continue;
      EXPECT_GE(r.best().score, prev - 1e-12) << seed << " beam " << beam;
      prev = r.best().score;
    }
  }
}

TEST(BeamSearch, ZeroAlphaRanksByLogProb) {
  RandomScorer s(5, 42);
  DecodeConfig c;
  c.beam_size = 5;
  c.max_length = 4;
  c.length_penalty = 0.0;
  const auto r = BeamSearch(s, c);
  for (const auto& h : r.ranking) EXPECT_EQ(h.score, h.log_prob);
  for (std::size_t i = 1; i < r.ranking.size(); ++i) {
    EXPECT_GE(r.ranking[i - 1].score, r.ranking[i].score);
  }
}

TEST(BeamSearch, BeamOneIsGreedy) {
  for (int seed = 0; seed < 50; ++seed) {
    RandomScorer s(6, seed);
    DecodeConfig c;
    c.beam_size = 1;
    c.max_length = 8;
    // Greedy by hand.
    Sequence greedy;
    for (int step = 0; step < c.max_length; ++step) {
      const auto lp = s.NextLogProbs({greedy})[0];
      const auto tok = static_cast<std::int32_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      if (tok == c.eos_id) break;
      greedy.push_back(tok);
    }
    EXPECT_EQ(BeamSearch(s, c).best().tokens, greedy) << seed;
  }
}

TEST(BeamSearch, UnfinishedWhenNoEos) {
  NoEosScorer s;
  DecodeConfig c;
  c.beam_size = 2;
  c.max_length = 3;
  const auto r = BeamSearch(s, c);
  EXPECT_TRUE(r.unfinished);
  EXPECT_EQ(r.best().tokens, (Sequence{0, 0, 0}));
  EXPECT_FALSE(r.best().finished);
}

ModelConfig Small(int vocab) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.hidden_size = 16;
  c.filter_size = 32;
  c.num_heads = 2;
  c.num_encoder_layers = 1;
  c.num_decoder_layers = 1;
  c.max_positions = 24;
  return c;
}

Corpus CopyCorpus(int count, std::uint64_t seed, int vocab = 12) {
  TaskConfig tc;
  tc.vocab_size = vocab;
  tc.min_length = 3;
  tc.max_length = 8;
  tc.count = count;
  tc.seed = seed;
  return GenerateTask(tc);
}

TEST(GreedyDecode, MaxLengthOneAndDeterminism) {
  Transformer<float> m(Small(12), 1);
  const Corpus c = CopyCorpus(5, 1);
  DecodeConfig d;
  d.beam_size = 1;
  d.max_length = 1;
  for (const auto& s : DecodeCorpus(m, c, d)) EXPECT_LE(s.size(), 1u);
  d.max_length = 10;
  EXPECT_EQ(DecodeCorpus(m, c, d), DecodeCorpus(m, c, d));
}

TEST(BeamDecode, BeamOneEqualsGreedyOnModel) {
  Transformer<double> m(Small(12), 2);
  const Corpus c = CopyCorpus(6, 2);
  DecodeConfig d;
  d.beam_size = 1;
  d.max_length = 10;
  const auto greedy = DecodeCorpus(m, c, d, 3);
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    Corpus one;
    one.vocab = c.vocab;
    one.pairs = {c.pairs[i]};
    std::vector<std::size_t> idx{0};
    const auto r = BeamDecode(m, MakeBatch(one, idx).source, d);
    EXPECT_EQ(r[0].best().tokens, greedy[i]) << i;
  }
}

TEST(TransformerScorer, MatchesExhaustiveOracle) {
  auto cfg = Small(5);
  Transformer<double> m(cfg, 3);
  Rng rng(3);
  for (int i = 0; i < 4; ++i) {
    TokenMatrix src;
    src.rows = 1;
    src.cols = 4;
    for (int j = 0; j < 4; ++j) {
      src.ids.push_back(static_cast<std::int32_t>(rng.Below(5)));
      src.mask.push_back(1);
    }
    TransformerScorer<double> scorer(m, src);
    DecodeConfig d;
    d.beam_size = 5;
    d.max_length = 3;
    const auto got = BeamSearch(scorer, d);
    const auto want = oracle::ExhaustiveBest(scorer, d);
    ASSERT_FALSE(got.unfinished);
    EXPECT_EQ(got.best().tokens, want.tokens);
    EXPECT_NEAR(got.best().score, want.score, 1e-12);
  }
}

TEST(TransformerScorer, LogProbsNormalize) {
  Transformer<double> m(Small(12), 4);
  const Corpus c = CopyCorpus(1, 4);
  std::vector<std::size_t> idx{0};
  TransformerScorer<double> s(m, MakeBatch(c, idx).source);
  for (const auto& row : s.NextLogProbs({{5, 6}, {7, 7}})) {
    double z = 0.0;
    for (double v : row) z += std::exp(v);
    EXPECT_NEAR(z, 1.0, 1e-12);
  }
  EXPECT_THROW(s.NextLogProbs({{5}, {5, 6}}), ShapeError);
}

TEST(TeacherForcedPredictions, TruncatedToReferenceLength) {
  Transformer<float> m(Small(12), 5);
  const Corpus c = CopyCorpus(7, 5);
  const auto p = TeacherForcedPredictions(m, c, 3);
  ASSERT_EQ(p.size(), c.pairs.size());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i].size(), c.pairs[i].target.size());
}

TEST(EmpiricalErrors, UntrainedModelIsMostlyWrong) {
  Transformer<float> m(Small(30), 6);
  const Corpus c = CopyCorpus(40, 6, 30);
  DecodeConfig d;
  d.beam_size = 1;
  d.max_length = 12;
  const auto e = ComputeEmpiricalErrors(m, c, d, 8, 1);
  ASSERT_EQ(e.table.size(), 8u);
  for (double v : e.table) {
    EXPECT_GE(v, 0.8);
    EXPECT_LE(v, 1.0);
  }
}

// Short smoke runs on the copy task.
class CopyTaskSmoke : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    TaskConfig tc;
    tc.vocab_size = 20;
    tc.min_length = 3;
    tc.max_length = 8;
    tc.count = 2200;
    tc.seed = 11;
    all_ = new Corpus(GenerateTask(tc));
    train_ = new Corpus(*all_);
    held_ = new Corpus(*all_);
    train_->pairs.resize(2000);
    held_->pairs.assign(all_->pairs.begin() + 2000, all_->pairs.end());
  }
  static void TearDownTestSuite() {
    delete all_;
    delete train_;
    delete held_;
  }

  static double TrainAndScore(const SamplerConfig& s, int steps, std::vector<Sequence>* out) {
    ModelConfig mc;
    mc.vocab_size = 20;
    mc.hidden_size = 32;
    mc.filter_size = 64;
    mc.num_heads = 4;
    mc.num_encoder_layers = 1;
    mc.num_decoder_layers = 1;
    mc.max_positions = 16;
    Transformer<float> m(mc, 1);
    OptimizerConfig o;
    o.warmup_steps = 200;
    o.learning_rate = 2.0;
    ScheduledSamplingTrainer<float> tr(m, s, o, 3);
    BatchStream stream(*train_, 256, 5);
    Train(tr, stream, steps);
    DecodeConfig d;
    d.beam_size = 1;
    d.max_length = 12;
    *out = DecodeCorpus(m, *held_, d);
    std::vector<Sequence> refs;
    for (const auto& p : held_->pairs) refs.push_back(p.target);
    return TokenAccuracy(*out, refs);
  }

  static Corpus* all_;
  static Corpus* train_;
  static Corpus* held_;
};

Corpus* CopyTaskSmoke::all_ = nullptr;
Corpus* CopyTaskSmoke::train_ = nullptr;
Corpus* CopyTaskSmoke::held_ = nullptr;

TEST_F(CopyTaskSmoke, TeacherForcedModelCopies) {
  SamplerConfig s;
  s.mode = SamplingMode::kTeacherForcing;
  std::vector<Sequence> hyps;
  TrainAndScore(s, 2000, &hyps);
  int exact = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) exact += hyps[i] == held_->pairs[i].source;
  EXPECT_GE(exact, static_cast<int>(0.95 * hyps.size()));
}

TEST_F(CopyTaskSmoke, ScheduledSamplingReachesHighAccuracy) {
  SamplerConfig s;
  s.mode = SamplingMode::kDecodingSteps;
  s.schedule = ScheduleSpec::Exponential(0.95);
  std::vector<Sequence> hyps;
  EXPECT_GT(TrainAndScore(s, 2000, &hyps), 0.9);
}

}  // namespace
}  // namespace ssdec
