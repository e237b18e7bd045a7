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

#ifndef SSDEC_CSV_H_
#define SSDEC_CSV_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ssdec/schedules.h"

namespace ssdec {

// Writes a CurveTable as comma separated text with a header line. Numbers
// are printed with round-trip precision.
void WriteCsv(std::ostream& out, const CurveTable& table);
void WriteCsv(const std::filesystem::path& path, const CurveTable& table);

// Formats a double so that reading it back yields the same value.
std::string FormatDouble(double v);

}  // namespace ssdec

#endif  // SSDEC_CSV_H_
