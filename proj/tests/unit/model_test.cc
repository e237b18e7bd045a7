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

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssdec/error.h"
#include "ssdec/sampler.h"

namespace ssdec {
namespace {

ModelConfig Tiny() {
  ModelConfig c;
  c.vocab_size = 12;
  c.hidden_size = 8;
  c.filter_size = 16;
  c.num_heads = 2;
  c.num_encoder_layers = 1;
  c.num_decoder_layers = 1;
  c.max_positions = 16;
  return c;
}

Corpus TinyCorpus(int count, std::uint64_t seed, int vocab = 12) {
  TaskConfig tc;
  tc.vocab_size = vocab;
  tc.min_length = 2;
  tc.max_length = 6;
  tc.count = count;
  tc.seed = seed;
  return GenerateTask(tc);
}

Batch AllOf(const Corpus& c) {
  std::vector<std::size_t> idx(c.pairs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return MakeBatch(c, idx);
}

TEST(ModelConfig, Validation) {
  ModelConfig c = Tiny();
  c.num_heads = 3;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = Tiny();
  c.dropout = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  EXPECT_NO_THROW(Tiny().Validate());
}

TEST(ModelConfig, JsonRoundTrip) {
  ModelConfig c = Tiny();
  c.dropout = 0.25;
  c.share_embeddings = false;
  EXPECT_EQ(ModelConfig::FromJson(c.ToJson()), c);
  EXPECT_THROW(ModelConfig::FromJson("{not json"), ConfigError);
}

TEST(Transformer, TiedWeightsShareStorage) {
  Transformer<double> m(Tiny(), 1);
  EXPECT_TRUE(m.params().source_embedding.SameStorage(m.params().target_embedding));
  EXPECT_TRUE(m.params().target_embedding.SameStorage(m.params().output_projection));
  auto c = Tiny();
  c.share_embeddings = false;
  c.share_softmax_weights = false;
  Transformer<double> u(c, 1);
  EXPECT_FALSE(u.params().source_embedding.SameStorage(u.params().target_embedding));
  EXPECT_GT(u.NumParameters(), m.NumParameters());
  // Named parameters list tied storage once.
  int embeddings = 0;
  for (const auto& [name, t] : m.NamedParameters()) {
    embeddings += t.SameStorage(m.params().target_embedding);
  }
  EXPECT_EQ(embeddings, 1);
}

TEST(Transformer, SameSeedSameWeights) {
  Transformer<double> a(Tiny(), 5), b(Tiny(), 5), c(Tiny(), 6);
  auto pa = a.NamedParameters(), pb = b.NamedParameters(), pc = c.NamedParameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::equal(pa[i].second.values().begin(), pa[i].second.values().end(),
                           pb[i].second.values().begin()));
    differs |= !std::equal(pa[i].second.values().begin(), pa[i].second.values().end(),
                           pc[i].second.values().begin());
  }
  EXPECT_TRUE(differs);
}

TEST(Encode, OutputShape) {
  Transformer<double> m(Tiny(), 1);
  const Batch b = AllOf(TinyCorpus(3, 1));
  auto enc = m.Encode(b.source, {});
  EXPECT_EQ(enc.shape(), (Shape{3, b.source.cols, 8}));
}

TEST(Encode, PadTailDoesNotChangeRealPositions) {
  Transformer<double> m(Tiny(), 2);
  TokenMatrix a;
  a.rows = 1;
  a.cols = 3;
  a.ids = {5, 6, 7};
  a.mask = {1, 1, 1};
  TokenMatrix b = a;
  b.cols = 5;
  b.ids = {5, 6, 7, 9, 11};
  b.mask = {1, 1, 1, 0, 0};
  auto ea = m.Encode(a, {});
  auto eb = m.Encode(b, {});
  for (int p = 0; p < 3; ++p) {
    for (int h = 0; h < 8; ++h) EXPECT_NEAR(ea.values()[p * 8 + h], eb.values()[p * 8 + h], 1e-12);
  }
}

TEST(Encode, TooLongThrows) {
  Transformer<double> m(Tiny(), 1);
  TokenMatrix s;
  s.rows = 1;
  s.cols = 20;
  s.ids.assign(20, 5);
  s.mask.assign(20, 1);
  EXPECT_THROW(m.Encode(s, {}), LengthError);
}

TEST(DecoderLogits, Causality) {
  Transformer<double> m(Tiny(), 3);
  const Batch b = AllOf(TinyCorpus(1, 2));
  auto enc = m.Encode(b.source, {});
  auto in = m.EmbedTargets(b.DecoderInput());
  auto base = m.DecoderLogits(in, enc, b.source, {});
  const auto n = in.dim(1);
  for (std::int64_t changed = 0; changed < n; ++changed) {
    auto alt = in.Clone();
    for (int h = 0; h < 8; ++h) alt.values()[changed * 8 + h] += 0.5;
    auto out = m.DecoderLogits(alt, enc, b.source, {});
    for (std::int64_t t = 0; t < n; ++t) {
      double diff = 0.0;
      for (int v = 0; v < 12; ++v) diff += std::abs(out.values()[t * 12 + v] - base.values()[t * 12 + v]);
      if (t < changed) EXPECT_EQ(diff, 0.0) << t;
      if (t >= changed) EXPECT_GT(diff, 0.0) << t;
    }
  }
}

TEST(DecoderLogits, SingleTokenShape) {
  Transformer<double> m(Tiny(), 1);
  const Batch b = AllOf(TinyCorpus(2, 3));
  auto enc = m.Encode(b.source, {});
  auto in = m.EmbedTargets(b.DecoderInput().Columns(0, 1));
  EXPECT_EQ(m.DecoderLogits(in, enc, b.source, {}).shape(), (Shape{2, 1, 12}));
}

TEST(DecoderLogits, SharedSoftmaxIsEmbeddingTranspose) {
  // Without decoder layers the final states are the scaled inputs plus
  // positions, so logits must equal embedding^T times those states.
  auto c = Tiny();
  c.num_decoder_layers = 0;
  c.dropout = 0.0;
  Transformer<double> z(c, 4);
  const Batch b = AllOf(TinyCorpus(1, 4));
  auto enc = z.Encode(b.source, {});
  auto in = z.EmbedTargets(b.DecoderInput());
  auto logits = z.DecoderLogits(in, enc, b.source, {});
  const auto& e = z.params().target_embedding;
  const auto& pos = z.params().positional;
  const double scale = std::sqrt(8.0);
  for (std::int64_t t = 0; t < in.dim(1); ++t) {
    for (int v = 0; v < 12; ++v) {
      double s = 0.0;
      for (int h = 0; h < 8; ++h) {
        const double state = in.values()[t * 8 + h] * scale + pos.values()[t * 8 + h];
        s += e.values()[v * 8 + h] * state;
      }
      EXPECT_NEAR(logits.values()[t * 12 + v], s, 1e-10);
    }
  }
}

TEST(TeacherForcingLoss, UntrainedIsNearLogV) {
  auto c = Tiny();
  c.vocab_size = 50;
  c.hidden_size = 16;
  Transformer<double> m(c, 7);
  const Batch b = AllOf(TinyCorpus(20, 5, 50));
  const double loss = m.TeacherForcingLoss(b, {}).item();
  EXPECT_NEAR(loss, std::log(50.0), 0.1 * std::log(50.0));
}

TEST(TeacherForcingLoss, InvariantToRowOrder) {
  Transformer<double> m(Tiny(), 8);
  const Corpus c = TinyCorpus(6, 6);
  std::vector<std::size_t> fwd{0, 1, 2, 3, 4, 5}, rev{5, 4, 3, 2, 1, 0};
  EXPECT_NEAR(m.TeacherForcingLoss(MakeBatch(c, fwd), {}).item(),
              m.TeacherForcingLoss(MakeBatch(c, rev), {}).item(), 1e-12);
}

TEST(TeacherForcingLoss, DecreasesOnCopyTask) {
  auto cfg = Tiny();
  cfg.hidden_size = 16;
  cfg.filter_size = 32;
  Transformer<float> m(cfg, 9);
  const Corpus c = TinyCorpus(50, 7);
  SamplerConfig s;
  s.mode = SamplingMode::kTeacherForcing;
  OptimizerConfig o;
  o.warmup_steps = 100;
  o.learning_rate = 1.0;
  ScheduledSamplingTrainer<float> tr(m, s, o, 1);
  BatchStream stream(c, 64, 1);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double loss = tr.Step(stream.At(i)).loss;
    if (i < 20) first += loss;
    if (i >= 180) last += loss;
  }
  EXPECT_LT(last, 0.7 * first);
}

TEST(Transformer, GradientsMatchFiniteDifferences) {
  auto c = Tiny();
  c.dropout = 0.0;
  c.label_smoothing = 0.1;
  Transformer<double> m(c, 10);
  const Batch b = AllOf(TinyCorpus(2, 8));
  Rng rng(3);
  auto r = oracle::CheckGradients([&] { return m.TeacherForcingLoss(b, {}); },
                                  m.NamedParameters(), rng, 3);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
  EXPECT_GT(r.checked, 20);
}

TEST(Transformer, CheckpointRoundTrip) {
  Transformer<float> a(Tiny(), 1), b(Tiny(), 2);
  Checkpoint ck;
  a.SaveTo(ck);
  b.LoadFrom(ck);
  const Batch batch = AllOf(TinyCorpus(3, 9));
  EXPECT_EQ(a.TeacherForcingLoss(batch, {}).item(), b.TeacherForcingLoss(batch, {}).item());
}

TEST(SinusoidalPositions, FirstRow) {
  auto p = SinusoidalPositions(4, 6);
  ASSERT_EQ(p.size(), 24u);
  // Position 0: sin terms are 0 and cos terms are 1.
  int ones = 0, zeros = 0;
  for (int h = 0; h < 6; ++h) {
    ones += p[h] == 1.0;
    zeros += p[h] == 0.0;
  }
  EXPECT_EQ(ones, 3);
  EXPECT_EQ(zeros, 3);
}

}  // namespace
}  // namespace ssdec
