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

#ifndef SSDEC_TESTS_ACCEPTANCE_CRITERIA_H_
#define SSDEC_TESTS_ACCEPTANCE_CRITERIA_H_

#include <chrono>
#include <filesystem>
#include <string>

namespace ssdec::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome ScheduleClosedForms();          // 1
Outcome AccumulatedErrorQuadrature();   // 2
Outcome GradientChecks();               // 3
Outcome AllGoldenEqualsTeacherForcing();  // 4
Outcome MaskStatistics();               // 5
Outcome BeamMatchesEnumeration();       // 6
Outcome MetricSelfConsistency();        // 10

// Trains the shared toy models into `work_dir` unless a run with the same
// recipe is already there.
void PrepareToyRuns(const std::filesystem::path& work_dir);

Outcome GapShape(const std::filesystem::path& work_dir);             // 7
Outcome DecodingStepOrderings(const std::filesystem::path& work_dir);  // 8
Outcome CompositeOrdering(const std::filesystem::path& work_dir);      // 9

}  // namespace ssdec::acceptance

#endif  // SSDEC_TESTS_ACCEPTANCE_CRITERIA_H_
