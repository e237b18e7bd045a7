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

#include "ssdec/metrics.h"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "ssdec/error.h"
#include "ssdec/rng.h"

namespace ssdec {
namespace {

// a b c d e as ids.
const Sequence kRef{5, 6, 7, 8};
const Sequence kSwapped{6, 5, 7, 8};

std::vector<Sequence> RandomCorpus(Rng& rng, int n, int vocab, int max_len) {
  std::vector<Sequence> out(n);
  for (auto& s : out) {
    s.resize(rng.Between(1, max_len));
    for (auto& t : s) t = static_cast<std::int32_t>(rng.Between(5, vocab - 1));
  }
  return out;
}

TEST(StrictPrecision, IdenticalAndDisjoint) {
  auto c = StrictPrecisionPerStep({kRef, {5, 6}}, {kRef, {5, 6}});
  for (double v : c.values) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(c.counts, (std::vector<std::int64_t>{2, 2, 1, 1}));
  auto d = StrictPrecisionPerStep({{9, 9, 9, 9}}, {kRef});
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(StrictPrecision, SwappedPrefix) {
  auto c = StrictPrecisionPerStep({kSwapped}, {kRef});
  EXPECT_EQ(c.values, (std::vector<double>{0, 0, 1, 1}));
  EXPECT_EQ(c.steps, (std::vector<std::int64_t>{0, 1, 2, 3}));
}

TEST(StrictPrecision, EmptyCorpusThrows) {
  EXPECT_THROW(StrictPrecisionPerStep({}, {}), ContractError);
  EXPECT_THROW(StrictPrecisionPerStep({kRef}, {}), ContractError);
}

TEST(FuzzyPrecision, SwappedPrefixWindowThree) {
  auto c = FuzzyPrecisionPerStep({kSwapped}, {kRef}, 3);
  EXPECT_EQ(c.values, (std::vector<double>{1, 1, 1, 1}));
}

TEST(FuzzyPrecision, TrailingWindow) {
  // Hypothesis token at step 0 only appears at reference step 1.
  auto centered = FuzzyPrecisionPerStep({kSwapped}, {kRef}, 3, WindowAlignment::kCentered);
  auto trailing = FuzzyPrecisionPerStep({kSwapped}, {kRef}, 3, WindowAlignment::kTrailing);
  EXPECT_EQ(centered.values[0], 1.0);
  EXPECT_EQ(trailing.values[0], 0.0);
  EXPECT_EQ(trailing.values[1], 1.0);
}

TEST(FuzzyPrecision, LongerHypothesisTailIgnored) {
  auto c = FuzzyPrecisionPerStep({{5, 6, 7, 8, 9, 9}}, {kRef}, 3);
  EXPECT_EQ(c.size(), 4u);
  for (double v : c.values) EXPECT_EQ(v, 1.0);
}

TEST(FuzzyPrecision, ShortHypothesisPaddingNeverMatches) {
  auto c = FuzzyPrecisionPerStep({{5}}, {kRef}, 3);
  EXPECT_EQ(c.values, (std::vector<double>{1, 0, 0, 0}));
}

TEST(FuzzyPrecision, EvenWindowRejected) {
  EXPECT_THROW(FuzzyPrecisionPerStep({kRef}, {kRef}, 2), ConfigError);
  EXPECT_THROW(FuzzyPrecisionPerStep({kRef}, {kRef}, 0), ConfigError);
}

TEST(FuzzyPrecision, WindowOneIsStrictAndWiderIsNotBelow) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    auto refs = RandomCorpus(rng, 20, 9, 12);
    auto hyps = RandomCorpus(rng, 20, 9, 12);
    auto strict = StrictPrecisionPerStep(hyps, refs);
    auto w1 = FuzzyPrecisionPerStep(hyps, refs, 1);
    EXPECT_EQ(strict.values, w1.values);
    auto w3 = FuzzyPrecisionPerStep(hyps, refs, 3);
    for (std::size_t i = 0; i < strict.size(); ++i) EXPECT_GE(w3.values[i], strict.values[i]);
  }
}

TEST(AccumulatedErrorCurve, IdenticalIsZero) {
  for (double v : AccumulatedErrorCurve({kRef}, {kRef}).values) EXPECT_EQ(v, 0.0);
}

TEST(AccumulatedErrorCurve, HalfErrorGrowsLinearly) {
  // Two pairs per step, exactly one wrong everywhere, window 1.
  std::vector<Sequence> refs(2, Sequence(10, 5));
  std::vector<Sequence> hyps{Sequence(10, 5), Sequence(10, 6)};
  auto c = AccumulatedErrorCurve(hyps, refs, 1);
  for (std::size_t t = 0; t < c.size(); ++t) EXPECT_DOUBLE_EQ(c.values[t], 0.5 * (t + 1));
}

TEST(AccumulatedErrorCurve, NonDecreasing) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = AccumulatedErrorCurve(RandomCorpus(rng, 10, 8, 15), RandomCorpus(rng, 10, 8, 15));
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GE(c.values[i], c.values[i - 1]);
  }
}

TEST(CurveDifference, RequiresSameSteps) {
  auto a = StrictPrecisionPerStep({kRef}, {kRef});
  auto b = StrictPrecisionPerStep({kSwapped}, {kRef});
  EXPECT_EQ(CurveDifference(a, b).values, (std::vector<double>{1, 1, 0, 0}));
  auto shorter = StrictPrecisionPerStep({{5}}, {{5}});
  EXPECT_THROW(CurveDifference(a, shorter), ContractError);
}

TEST(EmpiricalErrorTable, InterpolatesAndHolds) {
  StepCurve c;
  c.steps = {1, 3, 4};
  c.values = {0.2, 0.6, 0.1};
  c.counts = {5, 5, 0};
  auto t = EmpiricalErrorTable(c, 6);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_DOUBLE_EQ(t[0], 0.2);
  EXPECT_DOUBLE_EQ(t[1], 0.2);
  EXPECT_DOUBLE_EQ(t[2], 0.4);
  EXPECT_DOUBLE_EQ(t[3], 0.6);
  EXPECT_DOUBLE_EQ(t[4], 0.6);  // zero count is ignored
  EXPECT_DOUBLE_EQ(t[5], 0.6);
  StepCurve none;
  EXPECT_THROW(EmpiricalErrorTable(none, 3), ContractError);
}

TEST(TokenAccuracy, CountsReferenceTokens) {
  EXPECT_DOUBLE_EQ(TokenAccuracy({kSwapped, {5}}, {kRef, {5, 6}}), 3.0 / 6.0);
}

TEST(CorpusBleuLite, IdenticalIsOne) {
  auto r = CorpusBleuLite({kRef, {5, 6, 7, 8, 9}}, {kRef, {5, 6, 7, 8, 9}});
  EXPECT_DOUBLE_EQ(r.score, 1.0);
  EXPECT_DOUBLE_EQ(r.brevity_penalty, 1.0);
}

TEST(CorpusBleuLite, EmptyHypotheses) {
  auto r = CorpusBleuLite({{}}, {kRef});
  EXPECT_EQ(r.score, 0.0);
  EXPECT_TRUE(r.empty_hypotheses);
}

TEST(CorpusBleuLite, HandExample) {
  // "a b c d" vs "a b c e": p1 = 3/4, p2 = (2+1)/(3+1), p3 = (1+1)/(2+1), p4 = (0+1)/(1+1).
  auto r = CorpusBleuLite({{5, 6, 7, 8}}, {{5, 6, 7, 9}});
  const double want = std::pow(0.75 * 0.75 * (2.0 / 3.0) * 0.5, 0.25);
  EXPECT_NEAR(r.score, want, 1e-15);
  EXPECT_NEAR(r.score, 0.6580370064762462, 1e-15);
  EXPECT_EQ(r.precisions[0], 0.75);
}

TEST(CorpusBleuLite, BrevityPenalty) {
  auto r = CorpusBleuLite({{5, 6}}, {kRef});
  EXPECT_NEAR(r.brevity_penalty, std::exp(1.0 - 2.0), 1e-15);
}

TEST(CorpusBleuLite, AgreesWithIndependentImplementation) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto refs = RandomCorpus(rng, 8, 9, 10);
    auto hyps = RandomCorpus(rng, 8, 9, 10);
    if (trial % 3 == 0) hyps[0] = refs[0];
    EXPECT_NEAR(CorpusBleuLite(hyps, refs).score, oracle::Bleu(hyps, refs, 4), 1e-9);
  }
}

TEST(Spearman, KnownValues) {
  EXPECT_DOUBLE_EQ(SpearmanCorrelation({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(SpearmanCorrelation({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_DOUBLE_EQ(SpearmanCorrelation({1, 2, 3}, {5, 5, 5}), 0.0);
  // Ties get average ranks: y ranks (1.5, 1.5, 3), Pearson with (1, 2, 3).
  EXPECT_NEAR(SpearmanCorrelation({1, 2, 3}, {0, 0, 1}), std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_THROW(SpearmanCorrelation({1}, {1}), ContractError);
}

TEST(WriteCurveCsv, Format) {
  std::ostringstream os;
  WriteCurveCsv(os, StrictPrecisionPerStep({kSwapped}, {kRef}));
  EXPECT_EQ(os.str(), "step,value,count\n0,0,1\n1,0,1\n2,1,1\n3,1,1\n");
}

}  // namespace
}  // namespace ssdec
