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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "ssdec/csv.h"
#include "ssdec/error.h"

namespace ssdec {
namespace {

void CheckPaired(const std::vector<Sequence>& hyps, const std::vector<Sequence>& refs) {
  if (hyps.size() != refs.size()) {
    throw ContractError("got " + std::to_string(hyps.size()) + " hypotheses for " +
                        std::to_string(refs.size()) + " references");
  }
}

std::size_t MaxLength(const std::vector<Sequence>& refs) {
  std::size_t n = 0;
  for (const auto& r : refs) n = std::max(n, r.size());
  return n;
}

// Shared per-step loop. `hit(h, r, t)` decides whether step t (0-based) of
// the truncated/padded hypothesis is correct.
template <typename Hit>
StepCurve PerStep(const std::vector<Sequence>& hyps, const std::vector<Sequence>& refs,
                  Hit hit) {
  const std::size_t n = MaxLength(refs);
  std::vector<std::int64_t> correct(n, 0);
  std::vector<std::int64_t> count(n, 0);
  for (std::size_t p = 0; p < refs.size(); ++p) {
    for (std::size_t t = 0; t < refs[p].size(); ++t) {
      ++count[t];
      // Truncate/pad: positions past the hypothesis are null and never match.
      if (t < hyps[p].size() && hit(hyps[p], refs[p], t)) ++correct[t];
    }
  }
  StepCurve curve;
  for (std::size_t t = 0; t < n; ++t) {
    if (count[t] == 0) continue;
    curve.steps.push_back(static_cast<std::int64_t>(t));
    curve.values.push_back(static_cast<double>(correct[t]) / static_cast<double>(count[t]));
    curve.counts.push_back(count[t]);
  }
  return curve;
}

std::vector<double> AverageRanks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void StepCurve::Validate() const {
  if (steps.size() != values.size() || steps.size() != counts.size()) {
    throw ContractError("step curve columns have different lengths");
  }
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i] <= steps[i - 1]) throw ContractError("step curve steps must increase");
  }
}

StepCurve StrictPrecisionPerStep(const std::vector<Sequence>& hypotheses,
                                 const std::vector<Sequence>& references) {
  CheckPaired(hypotheses, references);
  if (references.empty()) throw ContractError("strict precision of an empty corpus");
  return PerStep(hypotheses, references, [](const Sequence& h, const Sequence& r,
                                            std::size_t t) { return h[t] == r[t]; });
}

StepCurve FuzzyPrecisionPerStep(const std::vector<Sequence>& hypotheses,
                                const std::vector<Sequence>& references, int window,
                                WindowAlignment alignment) {
  if (window < 1 || window % 2 == 0) {
    throw ConfigError("fuzzy window must be odd and >= 1, got " + std::to_string(window));
  }
  CheckPaired(hypotheses, references);
  const auto w = static_cast<std::ptrdiff_t>(window);
  const std::ptrdiff_t before = alignment == WindowAlignment::kCentered ? w / 2 : w - 1;
  const std::ptrdiff_t after = alignment == WindowAlignment::kCentered ? w / 2 : 0;
  return PerStep(hypotheses, references,
                 [&](const Sequence& h, const Sequence& r, std::size_t t) {
                   const auto pos = static_cast<std::ptrdiff_t>(t);
                   const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - before);
                   const std::ptrdiff_t hi =
                       std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r.size()) - 1,
                                                pos + after);
                   for (std::ptrdiff_t j = lo; j <= hi; ++j) {
                     if (r[j] == h[t]) return true;
                   }
                   return false;
                 });
}

StepCurve ErrorRateCurve(const StepCurve& precision) {
  StepCurve out = precision;
  for (double& v : out.values) v = 1.0 - v;
  return out;
}

StepCurve AccumulatedErrorCurve(const std::vector<Sequence>& hypotheses,
                                const std::vector<Sequence>& references, int window,
                                WindowAlignment alignment) {
  StepCurve out =
      ErrorRateCurve(FuzzyPrecisionPerStep(hypotheses, references, window, alignment));
  double total = 0.0;
  for (double& v : out.values) {
    total += v;
    v = total;
  }
  return out;
}

StepCurve CurveDifference(const StepCurve& a, const StepCurve& b) {
  if (a.steps != b.steps) throw ContractError("curves cover different steps");
  StepCurve out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = a.values[i] - b.values[i];
    out.counts[i] = std::min(a.counts[i], b.counts[i]);
  }
  return out;
}

std::vector<double> EmpiricalErrorTable(const StepCurve& error_rate, int max_t) {
  error_rate.Validate();
  if (max_t < 1) throw ConfigError("max_t must be >= 1");
  std::map<std::int64_t, double> known;
  for (std::size_t i = 0; i < error_rate.size(); ++i) {
    const auto t = error_rate.steps[i];
    if (t >= 0 && t < max_t && error_rate.counts[i] > 0) {
      known[t] = std::clamp(error_rate.values[i], 0.0, 1.0);
    }
  }
  if (known.empty()) throw ContractError("no decoding step has samples");
  std::vector<double> table(static_cast<std::size_t>(max_t), 0.0);
  for (std::int64_t t = 0; t < max_t; ++t) {
    auto hi = known.lower_bound(t);
    if (hi != known.end() && hi->first == t) {
      table[t] = hi->second;
    } else if (hi == known.end()) {
      table[t] = std::prev(hi)->second;
    } else if (hi == known.begin()) {
      table[t] = hi->second;
    } else {
      auto lo = std::prev(hi);
      const double frac = static_cast<double>(t - lo->first) /
                          static_cast<double>(hi->first - lo->first);
      table[t] = lo->second + frac * (hi->second - lo->second);
    }
  }
  return table;
}

double TokenAccuracy(const std::vector<Sequence>& hypotheses,
                     const std::vector<Sequence>& references) {
  CheckPaired(hypotheses, references);
  std::int64_t total = 0;
  std::int64_t correct = 0;
  for (std::size_t p = 0; p < references.size(); ++p) {
    const auto& r = references[p];
    const auto& h = hypotheses[p];
    total += static_cast<std::int64_t>(r.size());
    for (std::size_t t = 0; t < r.size() && t < h.size(); ++t) correct += h[t] == r[t];
  }
  if (total == 0) throw ContractError("token accuracy over zero reference tokens");
  return static_cast<double>(correct) / static_cast<double>(total);
}

BleuResult CorpusBleuLite(const std::vector<Sequence>& hypotheses,
                          const std::vector<Sequence>& references, int max_n) {
  CheckPaired(hypotheses, references);
  if (max_n < 1) throw ConfigError("max_n must be >= 1");
  if (references.empty()) throw ContractError("BLEU of an empty corpus");
  BleuResult out;
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;
  for (std::size_t p = 0; p < references.size(); ++p) {
    hyp_len += static_cast<std::int64_t>(hypotheses[p].size());
    ref_len += static_cast<std::int64_t>(references[p].size());
  }
  out.precisions.assign(static_cast<std::size_t>(max_n), 0.0);
  if (hyp_len == 0) {
    out.empty_hypotheses = true;
    out.brevity_penalty = 0.0;
    return out;
  }
  std::vector<std::int64_t> matches(max_n, 0);
  std::vector<std::int64_t> totals(max_n, 0);
  for (std::size_t p = 0; p < references.size(); ++p) {
    const auto& h = hypotheses[p];
    const auto& r = references[p];
    for (int n = 1; n <= max_n; ++n) {
      std::map<std::vector<std::int32_t>, std::int64_t> ref_counts;
      for (std::size_t i = 0; i + n <= r.size(); ++i) {
        ++ref_counts[Sequence(r.begin() + i, r.begin() + i + n)];
      }
      std::map<std::vector<std::int32_t>, std::int64_t> hyp_counts;
      for (std::size_t i = 0; i + n <= h.size(); ++i) {
        ++hyp_counts[Sequence(h.begin() + i, h.begin() + i + n)];
      }
      for (const auto& [gram, c] : hyp_counts) {
        totals[n - 1] += c;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const double m = static_cast<double>(matches[n - 1]);
    const double c = static_cast<double>(totals[n - 1]);
    const double prec = n == 1 ? m / c : (m + 1.0) / (c + 1.0);
    out.precisions[n - 1] = prec;
    if (prec <= 0.0) {
      out.brevity_penalty = hyp_len > ref_len
                                ? 1.0
                                : std::exp(1.0 - static_cast<double>(ref_len) /
                                                     static_cast<double>(hyp_len));
      out.score = 0.0;
      return out;
    }
    log_sum += std::log(prec);
  }
  out.brevity_penalty =
      hyp_len > ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  out.score = out.brevity_penalty * std::exp(log_sum / static_cast<double>(max_n));
  return out;
}

double SpearmanCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ContractError("Spearman inputs differ in length");
  if (x.size() < 2) throw ContractError("Spearman needs at least two points");
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void WriteCurveCsv(std::ostream& out, const StepCurve& curve) {
  curve.Validate();
  out << "step,value,count\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << curve.steps[i] << ',' << FormatDouble(curve.values[i]) << ',' << curve.counts[i]
        << '\n';
  }
}

void WriteCurveCsv(const std::filesystem::path& path, const StepCurve& curve) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  WriteCurveCsv(out, curve);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace ssdec
