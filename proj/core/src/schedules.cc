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

#include "ssdec/schedules.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssdec/error.h"

namespace ssdec {
namespace {

bool InUnitInterval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

// Piecewise-linear interpolation of the table, constant past its ends.
double InterpolateTable(const std::vector<double>& table, double x) {
  if (x <= 0.0) return table.front();
  const double last = static_cast<double>(table.size() - 1);
  if (x >= last) return table.back();
  const auto lo = static_cast<std::size_t>(std::floor(x));
  const double frac = x - static_cast<double>(lo);
  if (frac == 0.0) return table[lo];
  return table[lo] + frac * (table[lo + 1] - table[lo]);
}

// Integral of the interpolated table over [0, t].
double IntegrateTable(const std::vector<double>& table, double t) {
  if (t <= 0.0) return 0.0;
  const double last = static_cast<double>(table.size() - 1);
  double total = 0.0;
  const double covered = std::min(t, last);
  const auto whole = static_cast<std::size_t>(std::floor(covered));
  for (std::size_t j = 0; j < whole; ++j) {
    total += 0.5 * (table[j] + table[j + 1]);
  }
  const double frac = covered - static_cast<double>(whole);
  if (frac > 0.0) {
    const double end = InterpolateTable(table, covered);
    total += 0.5 * (table[whole] + end) * frac;
  }
  if (t > last) total += (t - last) * table.back();
  return total;
}

// Golden probability of the decay-direction schedule, without clamping.
double EvalDecayUnclamped(const ScheduleSpec& s, double x) {
  switch (s.family) {
    case ScheduleFamily::kLinear:
      return std::clamp(std::max(s.epsilon, s.k * x + s.b), 0.0, 1.0);
    case ScheduleFamily::kExponential:
      return std::pow(s.k, x);
    case ScheduleFamily::kSigmoid:
      return s.k / (s.k + std::exp(x / s.k));
    case ScheduleFamily::kAlwaysSample:
      return 0.0;
    case ScheduleFamily::kUniform:
      return s.uniform_p;
    case ScheduleFamily::kEmpirical:
      return 1.0 - InterpolateTable(s.empirical_table, x);
  }
  return 0.0;
}

// Integral of (1 - f(t)) over [lo, hi] on the Linear family's middle segment.
double LinearSegment(const ScheduleSpec& s, double lo, double hi) {
  if (hi <= lo) return 0.0;
  return (1.0 - s.b) * (hi - lo) - 0.5 * s.k * (hi * hi - lo * lo);
}

// Integral over [0, t] of (1 - decay value), no clamping.
double AccumulatedDecayUnclamped(const ScheduleSpec& s, double t) {
  if (t <= 0.0) return 0.0;
  switch (s.family) {
    case ScheduleFamily::kLinear: {
      // k < 0: the line drops through 1 at x1 and reaches the floor at x2.
      const double x1 = std::max(0.0, (1.0 - s.b) / s.k);
      const double x2 = std::max(0.0, (s.epsilon - s.b) / s.k);
      double total = 0.0;
      total += LinearSegment(s, std::min(t, x1), std::min(t, x2));
      if (t > x2) total += (t - x2) * (1.0 - s.epsilon);
      return total;
    }
    case ScheduleFamily::kExponential: {
      const double log_k = std::log(s.k);
      return t - std::expm1(t * log_k) / log_k;
    }
    case ScheduleFamily::kSigmoid: {
      // Antiderivative of k / (k + e^{x/k}) is x - k*ln(k + e^{x/k}).
      const double u = t / s.k;
      double log_ratio;
      if (u < 40.0) {
        log_ratio = std::log1p(std::expm1(u) / (s.k + 1.0));
      } else {
        log_ratio = u + std::log1p(s.k * std::exp(-u)) - std::log1p(s.k);
      }
      return s.k * log_ratio;
    }
    case ScheduleFamily::kAlwaysSample:
      return t;
    case ScheduleFamily::kUniform:
      return (1.0 - s.uniform_p) * t;
    case ScheduleFamily::kEmpirical:
      return IntegrateTable(s.empirical_table, t);
  }
  return 0.0;
}

std::string FormatNumber(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

ScheduleSpec ScheduleSpec::Linear(double k, double epsilon, double b) {
  ScheduleSpec s;
  s.family = ScheduleFamily::kLinear;
  s.k = k;
  s.epsilon = epsilon;
  s.b = b;
  return s;
}

ScheduleSpec ScheduleSpec::Exponential(double k) {
  ScheduleSpec s;
  s.family = ScheduleFamily::kExponential;
  s.k = k;
  return s;
}

ScheduleSpec ScheduleSpec::Sigmoid(double k) {
  ScheduleSpec s;
  s.family = ScheduleFamily::kSigmoid;
  s.k = k;
  return s;
}

ScheduleSpec ScheduleSpec::AlwaysSample() {
  ScheduleSpec s;
  s.family = ScheduleFamily::kAlwaysSample;
  return s;
}

ScheduleSpec ScheduleSpec::Uniform(double p) {
  ScheduleSpec s;
  s.family = ScheduleFamily::kUniform;
  s.uniform_p = p;
  return s;
}

ScheduleSpec ScheduleSpec::Empirical(std::vector<double> error_rates) {
  ScheduleSpec s;
  s.family = ScheduleFamily::kEmpirical;
  s.empirical_table = std::move(error_rates);
  return s;
}

ScheduleSpec ScheduleSpec::Increasing() const {
  ScheduleSpec s = *this;
  s.direction = ScheduleDirection::kIncrease;
  return s;
}

ScheduleSpec ScheduleSpec::Named(std::string label) const {
  ScheduleSpec s = *this;
  s.name = std::move(label);
  return s;
}

void ScheduleSpec::Validate() const {
  auto fail = [this](const std::string& what) { throw ConfigError(Label() + ": " + what); };
  if (max_value && (!std::isfinite(*max_value) || *max_value < 0.0)) {
    fail("max_value must be finite and >= 0");
  }
  switch (family) {
    case ScheduleFamily::kLinear:
      if (!std::isfinite(k) || !(k < 0.0)) {
        fail("linear schedule requires k < 0");
      }
      if (!InUnitInterval(epsilon)) {
        fail("linear floor epsilon must lie in [0, 1]");
      }
      if (!std::isfinite(b)) {
        fail("linear offset b must be finite");
      }
      break;
    case ScheduleFamily::kExponential:
      if (!(k > 0.0 && k < 1.0)) {
        fail("exponential schedule requires 0 < k < 1");
      }
      break;
    case ScheduleFamily::kSigmoid:
      if (!std::isfinite(k) || !(k >= 1.0)) {
        fail("sigmoid schedule requires k >= 1");
      }
      break;
    case ScheduleFamily::kAlwaysSample:
      break;
    case ScheduleFamily::kUniform:
      if (!InUnitInterval(uniform_p)) {
        fail("uniform probability must lie in [0, 1]");
      }
      break;
    case ScheduleFamily::kEmpirical:
      if (empirical_table.empty()) {
        fail("empirical schedule needs a table");
      }
      for (double v : empirical_table) {
        if (!InUnitInterval(v)) {
          fail("empirical error rates must lie in [0, 1]");
        }
      }
      break;
  }
}

std::string ScheduleSpec::Label() const {
  if (!name.empty()) return name;
  std::string out(ToString(family));
  if (family == ScheduleFamily::kAlwaysSample ||
      family == ScheduleFamily::kUniform) {
    if (direction == ScheduleDirection::kIncrease) out += "_increase";
  } else {
    out += "_";
    out += ToString(direction);
  }
  switch (family) {
    case ScheduleFamily::kLinear:
      out += "(k=" + FormatNumber(k) + ";eps=" + FormatNumber(epsilon) +
             ";b=" + FormatNumber(b) + ")";
      break;
    case ScheduleFamily::kExponential:
    case ScheduleFamily::kSigmoid:
      out += "(k=" + FormatNumber(k) + ")";
      break;
    case ScheduleFamily::kUniform:
      out += "(p=" + FormatNumber(uniform_p) + ")";
      break;
    default:
      break;
  }
  return out;
}

void JointSpec::Validate() const {
  f.Validate();
  g.Validate();
}

std::string JointSpec::Label() const {
  if (!name.empty()) return name;
  return std::string(ToString(method)) + "[" + f.Label() + "|" + g.Label() + "]";
}

std::string_view ToString(ScheduleFamily family) {
  switch (family) {
    case ScheduleFamily::kLinear: return "linear";
    case ScheduleFamily::kExponential: return "exponential";
    case ScheduleFamily::kSigmoid: return "sigmoid";
    case ScheduleFamily::kAlwaysSample: return "always_sample";
    case ScheduleFamily::kUniform: return "uniform";
    case ScheduleFamily::kEmpirical: return "empirical";
  }
  return "unknown";
}

std::string_view ToString(ScheduleDirection direction) {
  return direction == ScheduleDirection::kDecay ? "decay" : "increase";
}

std::string_view ToString(JointMethod method) {
  switch (method) {
    case JointMethod::kProduct: return "product";
    case JointMethod::kArithmeticMean: return "arithmetic_mean";
    case JointMethod::kComposite: return "composite";
    case JointMethod::kCompositeAlt: return "composite_alt";
  }
  return "unknown";
}

ScheduleFamily ParseScheduleFamily(std::string_view text) {
  for (auto f : {ScheduleFamily::kLinear, ScheduleFamily::kExponential,
                 ScheduleFamily::kSigmoid, ScheduleFamily::kAlwaysSample,
                 ScheduleFamily::kUniform, ScheduleFamily::kEmpirical}) {
    if (ToString(f) == text) return f;
  }
  throw ConfigError("unknown schedule family '" + std::string(text) + "'");
}

ScheduleDirection ParseScheduleDirection(std::string_view text) {
  if (text == "decay") return ScheduleDirection::kDecay;
  if (text == "increase") return ScheduleDirection::kIncrease;
  throw ConfigError("unknown schedule direction '" + std::string(text) + "'");
}

JointMethod ParseJointMethod(std::string_view text) {
  for (auto m : {JointMethod::kProduct, JointMethod::kArithmeticMean,
                 JointMethod::kComposite, JointMethod::kCompositeAlt}) {
    if (ToString(m) == text) return m;
  }
  throw ConfigError("unknown joint method '" + std::string(text) + "'");
}

double EvalSchedule(const ScheduleSpec& spec, double step) {
  spec.Validate();
  if (!(step >= 0.0)) throw ContractError("schedule step must be >= 0");
  if (spec.max_value) step = std::min(step, *spec.max_value);
  const double decay = EvalDecayUnclamped(spec, step);
  return spec.direction == ScheduleDirection::kDecay ? decay : 1.0 - decay;
}

double EvalJoint(const JointSpec& spec, double train_step, double dec_step) {
  switch (spec.method) {
    case JointMethod::kProduct:
      return EvalSchedule(spec.f, train_step) * EvalSchedule(spec.g, dec_step);
    case JointMethod::kArithmeticMean:
      return 0.5 * (EvalSchedule(spec.f, train_step) +
                    EvalSchedule(spec.g, dec_step));
    case JointMethod::kComposite:
      return EvalSchedule(spec.g,
                          dec_step * (1.0 - EvalSchedule(spec.f, train_step)));
    case JointMethod::kCompositeAlt:
      return EvalSchedule(spec.f,
                          train_step * (1.0 - EvalSchedule(spec.g, dec_step)));
  }
  return 0.0;
}

double AccumulatedErrors(const ScheduleSpec& g, double t) {
  g.Validate();
  if (!(t >= 0.0)) throw ContractError("accumulation horizon must be >= 0");
  double decay_accum;
  if (g.max_value && t > *g.max_value) {
    const double cap = *g.max_value;
    decay_accum = AccumulatedDecayUnclamped(g, cap) +
                  (t - cap) * (1.0 - EvalDecayUnclamped(g, cap));
  } else {
    decay_accum = AccumulatedDecayUnclamped(g, t);
  }
  if (g.direction == ScheduleDirection::kDecay) return decay_accum;
  // 1 - (1 - d) = d, so the increase integral is t minus the decay one.
  return std::max(0.0, t - decay_accum);
}

CurveTable DumpScheduleCurves(const std::vector<ScheduleSpec>& specs,
                              int max_steps) {
  if (max_steps < 1) throw ContractError("max_steps must be >= 1");
  CurveTable table;
  table.header.push_back("step");
  for (const auto& s : specs) table.header.push_back(s.Label());
  for (int t = 0; t < max_steps; ++t) {
    std::vector<double> row{static_cast<double>(t)};
    for (const auto& s : specs) row.push_back(EvalSchedule(s, t));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CurveTable DumpAccumulatedCurves(const std::vector<ScheduleSpec>& specs,
                                 int max_steps) {
  if (max_steps < 1) throw ContractError("max_steps must be >= 1");
  CurveTable table;
  table.header.push_back("step");
  for (const auto& s : specs) table.header.push_back(s.Label());
  for (int t = 0; t < max_steps; ++t) {
    std::vector<double> row{static_cast<double>(t)};
    for (const auto& s : specs) row.push_back(AccumulatedErrors(s, t));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CurveTable DumpJointGrid(const JointSpec& spec, int max_i, int max_t,
                         double i_stride) {
  if (max_i < 1 || max_t < 1) throw ContractError("grid sizes must be >= 1");
  spec.Validate();
  CurveTable table;
  table.header = {"i", "t", "value"};
  for (int r = 0; r < max_i; ++r) {
    const double i = r * i_stride;
    for (int t = 0; t < max_t; ++t) {
      table.rows.push_back({i, static_cast<double>(t), EvalJoint(spec, i, t)});
    }
  }
  return table;
}

}  // namespace ssdec
