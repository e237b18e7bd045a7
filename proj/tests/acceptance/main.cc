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

// Acceptance suite. Prints one line per criterion:
//
//   criterion <n>: PASS|FAIL <measurements>
//
// and exits non-zero when any selected criterion fails.

#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <vector>

#include "CLI11.hpp"
#include "criteria.h"
#include "ssdec/runtime.h"

int main(int argc, char** argv) {
  using namespace ssdec::acceptance;
  ssdec::ConfigureAllocator();

  CLI::App app{"ssdec acceptance suite"};
  std::vector<int> selected;
  std::string work_dir = "acceptance_work";
  bool prepare_only = false;
  app.add_option("-c,--criterion", selected, "Criteria to run (default: all)")
      ->check(CLI::Range(1, 10));
  app.add_option("-w,--work-dir", work_dir, "Directory for trained toy models and curves");
  app.add_flag("--prepare", prepare_only, "Only train the shared toy models");
  CLI11_PARSE(app, argc, argv);

  if (prepare_only) {
    try {
      PrepareToyRuns(work_dir);
    } catch (const std::exception& e) {
      std::cerr << "prepare failed: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  const std::map<int, std::function<Outcome()>> criteria = {
      {1, ScheduleClosedForms},
      {2, AccumulatedErrorQuadrature},
      {3, GradientChecks},
      {4, AllGoldenEqualsTeacherForcing},
      {5, MaskStatistics},
      {6, BeamMatchesEnumeration},
      {7, [&] { return GapShape(work_dir); }},
      {8, [&] { return DecodingStepOrderings(work_dir); }},
      {9, [&] { return CompositeOrdering(work_dir); }},
      {10, MetricSelfConsistency},
  };
  if (selected.empty()) {
    for (const auto& [n, fn] : criteria) selected.push_back(n);
  }

  int failures = 0;
  for (int n : selected) {
    Outcome o;
    try {
      o = criteria.at(n)();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d: %s %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
