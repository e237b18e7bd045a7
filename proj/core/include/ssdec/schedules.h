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

#ifndef SSDEC_SCHEDULES_H_
#define SSDEC_SCHEDULES_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ssdec {

// Every schedule returns the probability of feeding the golden token.
// One minus that value is the probability of feeding a model prediction.
enum class ScheduleFamily {
  kLinear,
  kExponential,
  kSigmoid,
  kAlwaysSample,
  kUniform,
  kEmpirical,
};

enum class ScheduleDirection { kDecay, kIncrease };

// A schedule family and its parameters. Schedules are defined on the real
// half-line so they can be evaluated at non-integral positions.
struct ScheduleSpec {
  ScheduleFamily family = ScheduleFamily::kUniform;
  ScheduleDirection direction = ScheduleDirection::kDecay;
  // Slope (Linear), radix (Exponential) or temperature (Sigmoid).
  double k = 0.0;
  // Floor of the Linear family.
  double epsilon = 0.0;
  // Offset of the Linear family.
  double b = 1.0;
  double uniform_p = 0.5;
  // Error rate per decoding step for the Empirical family.
  std::vector<double> empirical_table;
  // When set, arguments above this value are clamped to it.
  std::optional<double> max_value;
  // Column label used by curve dumps.
  std::string name;

  static ScheduleSpec Linear(double k, double epsilon, double b);
  static ScheduleSpec Exponential(double k);
  static ScheduleSpec Sigmoid(double k);
  static ScheduleSpec AlwaysSample();
  static ScheduleSpec Uniform(double p = 0.5);
  static ScheduleSpec Empirical(std::vector<double> error_rates);

  // Same parameters with direction flipped to kIncrease (g -> 1 - g).
  ScheduleSpec Increasing() const;
  ScheduleSpec Named(std::string label) const;

  // Throws ConfigError when the parameters break the family's invariants.
  void Validate() const;

  // Short descriptive label such as "exponential_decay(k=0.99)".
  std::string Label() const;
};

enum class JointMethod {
  kProduct,
  kArithmeticMean,
  // h(i, t) = g(t * (1 - f(i)))
  kComposite,
  // h(i, t) = f(i * (1 - g(t))); the swapped composition.
  kCompositeAlt,
};

struct JointSpec {
  JointMethod method = JointMethod::kComposite;
  ScheduleSpec f;  // over training steps
  ScheduleSpec g;  // over decoding steps
  std::string name;

  void Validate() const;
  std::string Label() const;
};

std::string_view ToString(ScheduleFamily family);
std::string_view ToString(ScheduleDirection direction);
std::string_view ToString(JointMethod method);
ScheduleFamily ParseScheduleFamily(std::string_view text);
ScheduleDirection ParseScheduleDirection(std::string_view text);
JointMethod ParseJointMethod(std::string_view text);

// Golden-token probability at `step` (real-valued, >= 0).
double EvalSchedule(const ScheduleSpec& spec, double step);

// Joint golden-token probability at training step i and decoding step t.
double EvalJoint(const JointSpec& spec, double train_step, double dec_step);

// Integral of (1 - g(x)) over [0, t]: the expected number of predicted
// inputs fed before decoding step t.
double AccumulatedErrors(const ScheduleSpec& g, double t);

// Tabulated schedules for export. Rows are keyed by integer steps.
struct CurveTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// One row per step in [0, max_steps): step followed by one column per spec.
CurveTable DumpScheduleCurves(const std::vector<ScheduleSpec>& specs,
                              int max_steps);
// Same layout holding AccumulatedErrors instead of schedule values.
CurveTable DumpAccumulatedCurves(const std::vector<ScheduleSpec>& specs,
                                 int max_steps);
// Long format grid with columns i,t,value; training step i = row * i_stride.
CurveTable DumpJointGrid(const JointSpec& spec, int max_i, int max_t,
                         double i_stride = 1.0);

}  // namespace ssdec

#endif  // SSDEC_SCHEDULES_H_
