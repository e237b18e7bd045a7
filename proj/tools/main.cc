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

#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.h"
#include "run_config.h"
#include "ssdec/error.h"
#include "ssdec/runtime.h"

namespace {

using ssdec::cli::RunConfig;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
};

void AddCommon(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("-c,--config", opts.config_file, "JSON run config merged over the defaults")
      ->check(CLI::ExistingFile);
  sub->add_option("-s,--set", opts.overrides, "Override a config key: dotted.key=value")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  ssdec::ConfigureAllocator();
  CLI::App app{"Scheduled sampling over decoding steps: training and analysis tool"};
  app.require_subcommand(1);

  CommonOptions opts;
  using Command = std::function<int(const RunConfig&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"schedule-dump", "Write schedule, accumulated-error and joint curves",
       ssdec::cli::ScheduleDump},
      {"train", "Train a model with the configured sampling strategy", ssdec::cli::TrainModel},
      {"gap-curve", "Per-step precision of teacher forcing versus decoding",
       ssdec::cli::GapCurve},
      {"evaluate", "Decode the evaluation set and score it", ssdec::cli::Evaluate},
      {"decode", "Decode source sentences to hypotheses.txt", ssdec::cli::DecodeSources},
      {"show-config", "Print the resolved config",
       [](const RunConfig& c, std::ostream& out) {
         out << ssdec::cli::ToJson(c).dump(2) << '\n';
         return ssdec::cli::kExitOk;
       }},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, opts);
    handlers[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ssdec::cli::kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    std::optional<std::filesystem::path> file;
    if (!opts.config_file.empty()) file = opts.config_file;
    const RunConfig config = ssdec::cli::ResolveRunConfig(file, opts.overrides);
    std::ostream& log = chosen->get_name() == "show-config" ? std::cout : std::cerr;
    return handlers.at(chosen)(config, log);
  } catch (const ssdec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ssdec::cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ssdec::cli::kExitError;
  }
}
