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

#include "ssdec/ops.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssdec/error.h"

namespace ssdec {
namespace {

using TD = Tensor<double>;

TD Random(Shape shape, Rng& rng, double scale = 1.0) {
  auto t = TD::Zeros(std::move(shape));
  for (double& v : t.values()) v = scale * rng.Normal();
  return t;
}

TD Param(Shape shape, Rng& rng, double scale = 1.0) {
  auto t = Random(std::move(shape), rng, scale);
  t.set_requires_grad(true);
  return t;
}

void ExpectValues(const TD& t, const std::vector<double>& want, double tol = 0.0) {
  ASSERT_EQ(t.size(), static_cast<std::int64_t>(want.size()));
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t.values()[i], want[i], tol) << i;
}

TEST(MatMul, Identity) {
  auto i2 = TD::FromValues({2, 2}, {1, 0, 0, 1});
  auto m = TD::FromValues({2, 2}, {1, 2, 3, 4});
  ExpectValues(MatMul(i2, m), {1, 2, 3, 4});
}

TEST(MatMul, RowTimesColumn) {
  auto a = TD::FromValues({1, 2}, {1, 2});
  auto b = TD::FromValues({2, 1}, {3, 4});
  ExpectValues(MatMul(a, b), {11});
}

TEST(MatMul, ZeroMatrix) {
  Rng rng(1);
  ExpectValues(MatMul(TD::Zeros({3, 4}), Random({4, 2}, rng)), std::vector<double>(6, 0.0));
}

TEST(MatMul, BatchedAndTransposedAgree) {
  Rng rng(2);
  auto a = Random({2, 3, 4}, rng);
  auto b = Random({2, 4, 5}, rng);
  auto c = MatMul(a, b);
  auto ct = MatMul(a, Transpose(b, 1, 2), true);
  ASSERT_EQ(c.shape(), (Shape{2, 3, 5}));
  for (std::int64_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c.values()[i], ct.values()[i], 1e-12);
  // Naive product as reference.
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 5; ++j) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += a.values()[n * 12 + i * 4 + k] * b.values()[n * 20 + k * 5 + j];
        EXPECT_NEAR(c.values()[n * 15 + i * 5 + j], s, 1e-12);
      }
    }
  }
}

TEST(MatMul, ShapeMismatchThrows) {
  EXPECT_THROW(MatMul(TD::Zeros({2, 3}), TD::Zeros({2, 3})), ShapeError);
}

TEST(Softmax, SpecExamples) {
  ExpectValues(Softmax(TD::FromValues({2}, {0, 0})), {0.5, 0.5});
  ExpectValues(Softmax(TD::FromValues({2}, {1000, 1000})), {0.5, 0.5});
  ExpectValues(Softmax(TD::FromValues({2}, {0, std::log(3.0)})), {0.25, 0.75}, 1e-15);
}

TEST(Softmax, NonFiniteThrows) {
  EXPECT_THROW(Softmax(TD::FromValues({2}, {0, NAN})), NumericError);
}

TEST(MaskedSoftmax, MaskedKeysGetZeroWeight) {
  Rng rng(3);
  auto s = Random({1, 1, 2, 3}, rng);
  AttentionMask m;
  m.batch = 1;
  m.keys = 3;
  m.key_keep = {1, 0, 1};
  auto p = MaskedSoftmax(s, m);
  for (int q = 0; q < 2; ++q) {
    EXPECT_EQ(p.values()[q * 3 + 1], 0.0);
    EXPECT_NEAR(p.values()[q * 3] + p.values()[q * 3 + 2], 1.0, 1e-15);
  }
}

TEST(MaskedSoftmax, CausalAndEmptyRows) {
  auto s = TD::Zeros({1, 1, 3, 3});
  AttentionMask m;
  m.batch = 1;
  m.keys = 3;
  m.causal = true;
  ExpectValues(MaskedSoftmax(s, m), {1, 0, 0, 0.5, 0.5, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
  m.key_keep = {0, 0, 0};
  ExpectValues(MaskedSoftmax(s, m), std::vector<double>(9, 0.0));
}

TEST(CrossEntropy, UniformLogits) {
  auto logits = TD::Zeros({3, 4});
  std::vector<std::int32_t> t{0, 1, 2};
  std::vector<std::uint8_t> keep{1, 1, 1};
  EXPECT_NEAR(CrossEntropyLabelSmoothed(logits, t, keep, 0.0).item(), std::log(4.0), 1e-15);
  // Smoothing does not change anything for uniform predictions.
  EXPECT_NEAR(CrossEntropyLabelSmoothed(logits, t, keep, 0.1).item(), std::log(4.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectIsNearZero) {
  auto logits = TD::FromValues({1, 3}, {100, 0, 0});
  std::vector<std::int32_t> t{0};
  std::vector<std::uint8_t> keep{1};
  EXPECT_LT(CrossEntropyLabelSmoothed(logits, t, keep, 0.0).item(), 1e-40);
}

TEST(CrossEntropy, MatchesPlainImplementation) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5, v = 7;
    auto logits = Random({n, v}, rng, 3.0);
    std::vector<std::int32_t> t(n);
    std::vector<std::uint8_t> keep(n);
    for (int i = 0; i < n; ++i) {
      t[i] = static_cast<std::int32_t>(rng.Below(v));
      keep[i] = i == 0 || rng.Bernoulli(0.7);
    }
    const double eps = trial % 2 ? 0.1 : 0.0;
    double total = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      const double* row = logits.data() + i * v;
      double z = 0.0;
      for (int j = 0; j < v; ++j) z += std::exp(row[j]);
      double loss = 0.0;
      for (int j = 0; j < v; ++j) {
        const double q = (j == t[i] ? 1.0 - eps : 0.0) + eps / v;
        loss -= q * (row[j] - std::log(z));
      }
      total += loss;
      ++count;
    }
    EXPECT_NEAR(CrossEntropyLabelSmoothed(logits, t, keep, eps).item(), total / count, 1e-12);
  }
}

TEST(CrossEntropy, AllMaskedThrows) {
  std::vector<std::int32_t> t{0};
  std::vector<std::uint8_t> keep{0};
  EXPECT_THROW(CrossEntropyLabelSmoothed(TD::Zeros({1, 2}), t, keep, 0.0), ContractError);
}

TEST(Backward, ProductRule) {
  auto x = TD::Scalar(2.0).set_requires_grad(true);
  auto y = TD::Scalar(3.0).set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(&tape);
  tape.Backward(Mul(x, y));
  EXPECT_EQ(x.grad()[0], 3.0);
  EXPECT_EQ(y.grad()[0], 2.0);
}

TEST(Backward, OffPathParameterGetsZero) {
  auto x = TD::Scalar(2.0).set_requires_grad(true);
  auto unused = TD::Scalar(5.0).set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(&tape);
  tape.Backward(Mul(x, x));
  EXPECT_EQ(unused.grad()[0], 0.0);
}

TEST(Backward, TwoLayerNetMatchesFiniteDifferences) {
  Rng rng(5);
  auto x = Random({4, 3}, rng);
  auto w1 = Param({3, 5}, rng), b1 = Param({5}, rng), w2 = Param({5, 2}, rng);
  auto loss = [&] { return Sum(Mul(MatMul(Relu(Add(MatMul(x, w1), b1)), w2), TD::Full({4, 2}, 0.5))); };
  auto r = oracle::CheckGradients(loss, {{"w1", w1}, {"b1", b1}, {"w2", w2}}, rng, 16);
  EXPECT_LE(r.max_rel_error, 1e-6) << r.worst;
}

TEST(Backward, EveryPrimitiveMatchesFiniteDifferences) {
  Rng rng(6);
  auto a = Param({2, 3, 4}, rng);
  auto gain = Param({4}, rng), bias = Param({4}, rng);
  auto table = Param({6, 4}, rng);
  auto probs_logits = Param({2, 3, 6}, rng);
  std::vector<std::int32_t> ids{1, 5, 0, 2, 2, 3};
  std::vector<std::int32_t> targets{0, 1, 2, 3, 4, 5};
  std::vector<std::uint8_t> keep{1, 1, 0, 1, 1, 1};
  AttentionMask mask;
  mask.batch = 2;
  mask.keys = 3;
  mask.key_keep = {1, 1, 0, 1, 1, 1};
  mask.causal = true;
  auto loss = [&] {
    auto emb = EmbeddingLookup(table, ids, {2, 3});                         // [2,3,4]
    auto mix = WeightedEmbeddingMix(Softmax(probs_logits), table);           // [2,3,4]
    auto h = LayerNorm(Add(Add(a, emb), Scale(mix, 0.5)), gain, bias);       // [2,3,4]
    auto scores = Reshape(MatMul(h, h, true), {2, 1, 3, 3});
    auto attn = Reshape(MaskedSoftmax(scores, mask), {2, 3, 3});
    auto ctx = MatMul(attn, h);                                              // [2,3,4]
    auto cat = Concat<double>({Slice(ctx, 1, 0, 2), Slice(Permute(h, {0, 1, 2}), 1, 2, 3)}, 1);
    auto flat = Reshape(Relu(cat), {6, 4});
    auto logits = MatMul(flat, table, true);                                 // [6,6]
    return Add(CrossEntropyLabelSmoothed(logits, targets, keep, 0.1),
               Scale(Sum(Mul(Transpose(ctx, 0, 1), Transpose(ctx, 0, 1))), 0.01));
  };
  auto r = oracle::CheckGradients(
      loss, {{"a", a}, {"gain", gain}, {"bias", bias}, {"table", table}, {"probs", probs_logits}},
      rng, 24);
  EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
}

TEST(Dropout, IdentityWhenNotTraining) {
  Rng rng(7);
  auto x = Random({10}, rng);
  EXPECT_TRUE(Dropout(x, 0.5, &rng, false).SameStorage(x));
  EXPECT_TRUE(Dropout(x, 0.0, &rng, true).SameStorage(x));
}

TEST(Dropout, InvertedScaling) {
  Rng rng(8);
  auto x = TD::Full({20000}, 1.0);
  auto y = Dropout(x, 0.25, &rng, true);
  double sum = 0.0;
  for (double v : y.values()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15);
    sum += v;
  }
  EXPECT_NEAR(sum / 20000.0, 1.0, 0.03);
  EXPECT_THROW(Dropout(x, 0.5, nullptr, true), ContractError);
}

TEST(Shape, PermuteConcatSliceRoundTrip) {
  Rng rng(9);
  auto x = Random({2, 3, 4}, rng);
  auto p = Permute(Permute(x, {2, 0, 1}), {1, 2, 0});
  ExpectValues(p, std::vector<double>(x.values().begin(), x.values().end()));
  auto c = Concat<double>({Slice(x, 2, 0, 1), Slice(x, 2, 1, 4)}, 2);
  ExpectValues(c, std::vector<double>(x.values().begin(), x.values().end()));
  EXPECT_THROW(Reshape(x, {5, 5}), ShapeError);
  EXPECT_THROW(Slice(x, 1, 2, 5), ShapeError);
}

TEST(Embedding, OutOfRangeIdThrows) {
  std::vector<std::int32_t> ids{7};
  EXPECT_THROW(EmbeddingLookup(TD::Zeros({5, 2}), ids, {1}), ContractError);
}

TEST(Gemm, AccumulateFlag) {
  std::vector<double> a{1, 2}, b{3, 4}, c{10};
  Gemm<double>(1, 1, 2, a.data(), b.data(), c.data(), true);
  EXPECT_EQ(c[0], 21.0);
  Gemm<double>(1, 1, 2, a.data(), b.data(), c.data(), false);
  EXPECT_EQ(c[0], 11.0);
}

}  // namespace
}  // namespace ssdec
