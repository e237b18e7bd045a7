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

#ifndef SSDEC_TOOLS_RUN_CONFIG_H_
#define SSDEC_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ssdec/data.h"
#include "ssdec/decode.h"
#include "ssdec/model.h"
#include "ssdec/optimizer.h"
#include "ssdec/sampler.h"
#include "ssdec/schedules.h"

namespace ssdec::cli {

// Environment variable that replaces output_dir when set and non-empty.
inline constexpr const char* kOutputDirEnv = "SSDEC_OUTPUT_DIR";

struct DataSection {
  TaskConfig task;
  // When train_tsv is set the task generator is not used.
  std::string train_tsv;
  std::string eval_tsv;
  // Generated pairs held out from training for evaluation.
  int held_out = 1000;
  std::int64_t token_budget = 2048;
};

struct TrainSection {
  std::int64_t steps = 3000;
  std::int64_t checkpoint_every = 500;
  std::int64_t log_flush_every = 50;
  // Checkpoint to continue from; step numbering continues.
  std::string resume;
};

struct ScheduleDumpSection {
  std::vector<ScheduleSpec> decoding;
  int decoding_max_steps = 128;
  std::vector<ScheduleSpec> training;
  int training_max_steps = 300000;
  std::vector<JointSpec> joint;
  int joint_max_i = 100;
  int joint_max_t = 128;
  double joint_i_stride = 3000.0;
};

struct GapSection {
  // "train" samples training pairs, "eval" takes the evaluation set.
  std::string split = "train";
  int pairs = 1000;
  int window = 3;
};

struct RunConfig {
  // Root of every random stream: init, data, train.
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  // Input checkpoint of gap-curve, evaluate and decode.
  std::string checkpoint;
  // Plain-text source sentences for decode; the evaluation set otherwise.
  std::string decode_input;
  DataSection data;
  ModelConfig model;
  SamplerConfig sampler;
  OptimizerConfig optimizer;
  DecodeConfig decode;
  TrainSection train;
  ScheduleDumpSection schedules;
  GapSection gap;

  // Throws ConfigError.
  void Validate() const;
};

// NoisyMap toy task, decoding-step sampling after a teacher-forced warm
// start, and the decoding-step and training-step curve sets.
RunConfig DefaultRunConfig();

nlohmann::ordered_json ToJson(const RunConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig RunConfigFromJson(const nlohmann::json& doc);

nlohmann::ordered_json ScheduleToJson(const ScheduleSpec& spec);
ScheduleSpec ScheduleFromJson(const nlohmann::json& doc);

// Applies "dotted.key=value". The value is parsed as JSON when possible and
// taken as a string otherwise. The key must already exist.
void ApplyOverride(nlohmann::ordered_json& doc, std::string_view assignment);

// Defaults, then the optional file, then overrides, then the environment.
RunConfig ResolveRunConfig(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides);

}  // namespace ssdec::cli

#endif  // SSDEC_TOOLS_RUN_CONFIG_H_
