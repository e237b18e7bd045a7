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

#ifndef SSDEC_TOOLS_COMMANDS_H_
#define SSDEC_TOOLS_COMMANDS_H_

#include <filesystem>
#include <ostream>

#include "run_config.h"
#include "ssdec/data.h"
#include "ssdec/model.h"

namespace ssdec::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

struct RunData {
  Corpus train;
  Corpus eval;
};

// Generated task split into train and held-out pairs, or the TSV corpora.
RunData LoadRunData(const RunConfig& config);

// Checkpoint named by config.checkpoint, or the final one in output_dir.
std::filesystem::path CheckpointPath(const RunConfig& config);

// Reads the model_config.json written next to the checkpoint when present.
Transformer<float> LoadModel(const RunConfig& config, const std::filesystem::path& checkpoint);

// Each command writes into config.output_dir, reports to `log` and returns a
// process exit code. Errors other than divergence propagate as exceptions.
int ScheduleDump(const RunConfig& config, std::ostream& log);
int TrainModel(const RunConfig& config, std::ostream& log);
int GapCurve(const RunConfig& config, std::ostream& log);
int Evaluate(const RunConfig& config, std::ostream& log);
int DecodeSources(const RunConfig& config, std::ostream& log);

}  // namespace ssdec::cli

#endif  // SSDEC_TOOLS_COMMANDS_H_
