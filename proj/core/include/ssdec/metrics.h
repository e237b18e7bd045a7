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

#ifndef SSDEC_METRICS_H_
#define SSDEC_METRICS_H_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

namespace ssdec {

using Sequence = std::vector<std::int32_t>;

// Per-decoding-step series. Steps are 0-based: step 0 is the first
// generated token.
struct StepCurve {
  std::vector<std::int64_t> steps;
  std::vector<double> values;
  // Number of pairs that contributed to each step.
  std::vector<std::int64_t> counts;

  std::size_t size() const { return steps.size(); }
  // Throws ContractError unless lengths agree and steps strictly increase.
  void Validate() const;
};

enum class WindowAlignment {
  kCentered,  // t - w/2 .. t + w/2
  kTrailing,  // t - w + 1 .. t
};

// Fraction of pairs whose hypothesis token equals the reference token at
// each step. Hypotheses are truncated or padded to the reference length;
// padding never matches. Throws ContractError on empty or unpaired input.
StepCurve StrictPrecisionPerStep(const std::vector<Sequence>& hypotheses,
                                 const std::vector<Sequence>& references);

// As above, but a token is correct when it occurs anywhere in the reference
// window around the same step. `window` must be odd and >= 1.
StepCurve FuzzyPrecisionPerStep(const std::vector<Sequence>& hypotheses,
                                const std::vector<Sequence>& references, int window = 3,
                                WindowAlignment alignment = WindowAlignment::kCentered);

// 1 - value at every step; counts are kept.
StepCurve ErrorRateCurve(const StepCurve& precision);

// Running sum of fuzzy error rates; non-decreasing.
StepCurve AccumulatedErrorCurve(const std::vector<Sequence>& hypotheses,
                                const std::vector<Sequence>& references, int window = 3,
                                WindowAlignment alignment = WindowAlignment::kCentered);

// a - b on matching steps. Throws ContractError when the steps differ.
StepCurve CurveDifference(const StepCurve& a, const StepCurve& b);

// Dense error-rate table for steps 0 .. max_t - 1. Steps missing from
// `error_rate` or with a zero count are linearly interpolated from their
// neighbours and held constant past either end.
std::vector<double> EmpiricalErrorTable(const StepCurve& error_rate, int max_t);

// Matching tokens at identical positions over all reference tokens.
double TokenAccuracy(const std::vector<Sequence>& hypotheses,
                     const std::vector<Sequence>& references);

struct BleuResult {
  double score = 0.0;
  // Set when the hypothesis corpus has no tokens.
  bool empty_hypotheses = false;
  std::vector<double> precisions;  // smoothed, index n-1
  double brevity_penalty = 1.0;
};

// Simplified corpus BLEU for toy data. Clipped n-gram precisions; p1 raw,
// add-one smoothing for n >= 2; brevity penalty exp(1 - r/c) when c <= r.
// Not comparable to official scoring scripts.
BleuResult CorpusBleuLite(const std::vector<Sequence>& hypotheses,
                          const std::vector<Sequence>& references, int max_n = 4);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant.
double SpearmanCorrelation(const std::vector<double>& x, const std::vector<double>& y);

// CSV with header step,value,count.
void WriteCurveCsv(std::ostream& out, const StepCurve& curve);
void WriteCurveCsv(const std::filesystem::path& path, const StepCurve& curve);

}  // namespace ssdec

#endif  // SSDEC_METRICS_H_
