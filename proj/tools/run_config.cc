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

#include "run_config.h"

#include <cstdlib>
#include <fstream>

#include "ssdec/error.h"

namespace ssdec::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename J>
void Merge(J& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config section '" + path + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      Merge(slot, it.value(), key);
    } else if (slot.is_object()) {
      throw ConfigError("config key '" + key + "' must be an object");
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T Get(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

ordered_json TaskToJson(const TaskConfig& t) {
  ordered_json j;
  j["kind"] = std::string(ToString(t.kind));
  j["vocab_size"] = t.vocab_size;
  j["min_length"] = t.min_length;
  j["max_length"] = t.max_length;
  j["count"] = t.count;
  j["seed"] = t.seed;
  j["map_scale"] = t.map_scale;
  j["map_shift"] = t.map_shift;
  j["noise_rate"] = t.noise_rate;
  return j;
}

TaskConfig TaskFromJson(const json& j) {
  TaskConfig t;
  t.kind = ParseTaskKind(Get<std::string>(j, "kind"));
  t.vocab_size = Get<int>(j, "vocab_size");
  t.min_length = Get<int>(j, "min_length");
  t.max_length = Get<int>(j, "max_length");
  t.count = Get<int>(j, "count");
  t.seed = Get<std::uint64_t>(j, "seed");
  t.map_scale = Get<int>(j, "map_scale");
  t.map_shift = Get<int>(j, "map_shift");
  t.noise_rate = Get<double>(j, "noise_rate");
  return t;
}

ordered_json JointToJson(const JointSpec& s) {
  ordered_json j;
  j["method"] = std::string(ToString(s.method));
  j["f"] = ScheduleToJson(s.f);
  j["g"] = ScheduleToJson(s.g);
  j["name"] = s.name;
  return j;
}

JointSpec JointFromJson(const json& doc) {
  ordered_json base = JointToJson(JointSpec{});
  // f and g are replaced whole so that partial schedule objects start from
  // the schedule defaults rather than the joint defaults.
  if (!doc.is_object()) throw ConfigError("joint schedule must be an object");
  json patch = doc;
  json f = patch.contains("f") ? patch["f"] : json(base["f"]);
  json g = patch.contains("g") ? patch["g"] : json(base["g"]);
  patch.erase("f");
  patch.erase("g");
  Merge(base, patch, "joint");
  JointSpec s;
  s.method = ParseJointMethod(Get<std::string>(base, "method"));
  s.f = ScheduleFromJson(f);
  s.g = ScheduleFromJson(g);
  s.name = Get<std::string>(base, "name");
  return s;
}

ordered_json ModelToJson(const ModelConfig& m) {
  return ordered_json::parse(m.ToJson());
}

ordered_json SamplerToJson(const SamplerConfig& s) {
  ordered_json j;
  j["mode"] = std::string(ToString(s.mode));
  j["schedule"] = ScheduleToJson(s.schedule);
  j["joint"] = JointToJson(s.joint);
  j["representation"] = std::string(ToString(s.representation));
  j["warm_start_steps"] = s.warm_start_steps;
  j["block_first_pass_gradient"] = s.block_first_pass_gradient;
  return j;
}

SamplerConfig SamplerFromJson(const json& j) {
  SamplerConfig s;
  s.mode = ParseSamplingMode(Get<std::string>(j, "mode"));
  s.schedule = ScheduleFromJson(j.at("schedule"));
  s.joint = JointFromJson(j.at("joint"));
  s.representation = ParsePredictionRepresentation(Get<std::string>(j, "representation"));
  s.warm_start_steps = Get<std::int64_t>(j, "warm_start_steps");
  s.block_first_pass_gradient = Get<bool>(j, "block_first_pass_gradient");
  return s;
}

ordered_json OptimizerToJson(const OptimizerConfig& o) {
  ordered_json j;
  j["learning_rate"] = o.learning_rate;
  j["warmup_steps"] = o.warmup_steps;
  j["beta1"] = o.beta1;
  j["beta2"] = o.beta2;
  j["epsilon"] = o.epsilon;
  j["clip_norm"] = o.clip_norm;
  return j;
}

OptimizerConfig OptimizerFromJson(const json& j) {
  OptimizerConfig o;
  o.learning_rate = Get<double>(j, "learning_rate");
  o.warmup_steps = Get<int>(j, "warmup_steps");
  o.beta1 = Get<double>(j, "beta1");
  o.beta2 = Get<double>(j, "beta2");
  o.epsilon = Get<double>(j, "epsilon");
  o.clip_norm = Get<double>(j, "clip_norm");
  return o;
}

ordered_json DecodeToJson(const DecodeConfig& d) {
  ordered_json j;
  j["beam_size"] = d.beam_size;
  j["length_penalty"] = d.length_penalty;
  j["max_length"] = d.max_length;
  return j;
}

DecodeConfig DecodeFromJson(const json& j) {
  DecodeConfig d;
  d.beam_size = Get<int>(j, "beam_size");
  d.length_penalty = Get<double>(j, "length_penalty");
  d.max_length = Get<int>(j, "max_length");
  return d;
}

template <typename T, typename F>
ordered_json ListToJson(const std::vector<T>& items, F to_json) {
  ordered_json a = ordered_json::array();
  for (const auto& item : items) a.push_back(to_json(item));
  return a;
}

template <typename T, typename F>
std::vector<T> ListFromJson(const json& doc, const char* key, F from_json) {
  const json& a = doc.at(key);
  if (!a.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array");
  std::vector<T> out;
  for (const auto& item : a) out.push_back(from_json(item));
  return out;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ordered_json ScheduleToJson(const ScheduleSpec& spec) {
  ordered_json j;
  j["family"] = std::string(ToString(spec.family));
  j["direction"] = std::string(ToString(spec.direction));
  j["k"] = spec.k;
  j["epsilon"] = spec.epsilon;
  j["b"] = spec.b;
  j["uniform_p"] = spec.uniform_p;
  j["empirical_table"] = spec.empirical_table;
  j["max_value"] = spec.max_value ? json(*spec.max_value) : json(nullptr);
  j["name"] = spec.name;
  return j;
}

ScheduleSpec ScheduleFromJson(const json& doc) {
  ordered_json full = ScheduleToJson(ScheduleSpec{});
  Merge(full, doc, "schedule");
  ScheduleSpec s;
  s.family = ParseScheduleFamily(Get<std::string>(full, "family"));
  s.direction = ParseScheduleDirection(Get<std::string>(full, "direction"));
  s.k = Get<double>(full, "k");
  s.epsilon = Get<double>(full, "epsilon");
  s.b = Get<double>(full, "b");
  s.uniform_p = Get<double>(full, "uniform_p");
  s.empirical_table = Get<std::vector<double>>(full, "empirical_table");
  if (!full.at("max_value").is_null()) s.max_value = Get<double>(full, "max_value");
  s.name = Get<std::string>(full, "name");
  return s;
}

RunConfig DefaultRunConfig() {
  RunConfig c;
  c.data.task.kind = TaskKind::kNoisyMap;
  c.data.task.min_length = 20;
  c.data.task.max_length = 60;
  c.data.task.count = 21000;
  c.data.task.seed = 2718;
  c.optimizer.warmup_steps = 800;
  c.sampler.warm_start_steps = 1000;
  c.sampler.joint.f = ScheduleSpec::Sigmoid(20000.0);
  c.sampler.joint.f.max_value = 300000.0;
  c.sampler.joint.g = ScheduleSpec::Exponential(0.99);
  c.sampler.joint.g.max_value = 128.0;
  c.sampler.schedule.max_value = 128.0;

  auto capped = [](ScheduleSpec s, double cap, std::string name) {
    s.max_value = cap;
    return s.Named(std::move(name));
  };
  auto& d = c.schedules.decoding;
  const ScheduleSpec g_linear = ScheduleSpec::Linear(-1.0 / 64.0, 0.0, 1.0);
  const ScheduleSpec g_exp = ScheduleSpec::Exponential(0.99);
  const ScheduleSpec g_sigmoid = ScheduleSpec::Sigmoid(20.0);
  d.push_back(capped(g_linear, 128.0, "linear_decay"));
  d.push_back(capped(g_exp, 128.0, "exponential_decay"));
  d.push_back(capped(g_sigmoid, 128.0, "sigmoid_decay"));
  d.push_back(capped(g_linear.Increasing(), 128.0, "linear_increase"));
  d.push_back(capped(g_exp.Increasing(), 128.0, "exponential_increase"));
  d.push_back(capped(g_sigmoid.Increasing(), 128.0, "sigmoid_increase"));
  d.push_back(ScheduleSpec::Uniform(0.5).Named("uniform"));

  auto& t = c.schedules.training;
  const ScheduleSpec f_linear = ScheduleSpec::Linear(-1.0 / 150000.0, 0.0, 1.0);
  const ScheduleSpec f_exp = ScheduleSpec::Exponential(0.99999);
  const ScheduleSpec f_sigmoid = ScheduleSpec::Sigmoid(20000.0);
  t.push_back(capped(f_linear, 300000.0, "linear_decay"));
  t.push_back(capped(f_exp, 300000.0, "exponential_decay"));
  t.push_back(capped(f_sigmoid, 300000.0, "sigmoid_decay"));

  for (JointMethod m : {JointMethod::kProduct, JointMethod::kArithmeticMean,
                        JointMethod::kComposite, JointMethod::kCompositeAlt}) {
    JointSpec j;
    j.method = m;
    j.f = c.sampler.joint.f;
    j.g = c.sampler.joint.g;
    j.name = std::string(ToString(m));
    c.schedules.joint.push_back(j);
  }
  return c;
}

void RunConfig::Validate() const {
  model.Validate();
  sampler.Validate();
  optimizer.Validate();
  decode.Validate(model.max_positions);
  if (data.train_tsv.empty()) {
    data.task.Validate();
    if (data.held_out < 0 || data.held_out >= data.task.count) {
      throw ConfigError("data.held_out must lie in [0, data.task.count)");
    }
    if (data.task.vocab_size > model.vocab_size) {
      throw ConfigError("model.vocab_size " + std::to_string(model.vocab_size) +
                        " is smaller than data.task.vocab_size " +
                        std::to_string(data.task.vocab_size));
    }
  }
  if (data.token_budget <= 0) throw ConfigError("data.token_budget must be positive");
  if (train.steps < 0) throw ConfigError("train.steps must be >= 0");
  if (train.checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  if (train.log_flush_every <= 0) throw ConfigError("train.log_flush_every must be positive");
  for (const auto& s : schedules.decoding) s.Validate();
  for (const auto& s : schedules.training) s.Validate();
  for (const auto& s : schedules.joint) s.Validate();
  if (schedules.decoding_max_steps < 0 || schedules.training_max_steps < 0 ||
      schedules.joint_max_i < 0 || schedules.joint_max_t < 0 ||
      !(schedules.joint_i_stride > 0.0)) {
    throw ConfigError("schedule dump ranges must be non-negative with a positive stride");
  }
  if (gap.split != "train" && gap.split != "eval") {
    throw ConfigError("gap.split must be 'train' or 'eval', got '" + gap.split + "'");
  }
  if (gap.pairs <= 0) throw ConfigError("gap.pairs must be positive");
  if (gap.window < 1) throw ConfigError("gap.window must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ordered_json ToJson(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["checkpoint"] = c.checkpoint;
  j["decode_input"] = c.decode_input;
  j["data"] = {{"task", TaskToJson(c.data.task)},
               {"train_tsv", c.data.train_tsv},
               {"eval_tsv", c.data.eval_tsv},
               {"held_out", c.data.held_out},
               {"token_budget", c.data.token_budget}};
  j["model"] = ModelToJson(c.model);
  j["sampler"] = SamplerToJson(c.sampler);
  j["optimizer"] = OptimizerToJson(c.optimizer);
  j["decode"] = DecodeToJson(c.decode);
  j["train"] = {{"steps", c.train.steps},
                {"checkpoint_every", c.train.checkpoint_every},
                {"log_flush_every", c.train.log_flush_every},
                {"resume", c.train.resume}};
  j["schedules"] = {{"decoding", ListToJson(c.schedules.decoding, ScheduleToJson)},
                    {"decoding_max_steps", c.schedules.decoding_max_steps},
                    {"training", ListToJson(c.schedules.training, ScheduleToJson)},
                    {"training_max_steps", c.schedules.training_max_steps},
                    {"joint", ListToJson(c.schedules.joint, JointToJson)},
                    {"joint_max_i", c.schedules.joint_max_i},
                    {"joint_max_t", c.schedules.joint_max_t},
                    {"joint_i_stride", c.schedules.joint_i_stride}};
  j["gap"] = {{"split", c.gap.split}, {"pairs", c.gap.pairs}, {"window", c.gap.window}};
  return j;
}

RunConfig RunConfigFromJson(const json& doc) {
  ordered_json full = ToJson(DefaultRunConfig());
  Merge(full, doc, "");
  const json j = full;
  RunConfig c;
  c.seed = Get<std::uint64_t>(j, "seed");
  c.output_dir = Get<std::string>(j, "output_dir");
  c.checkpoint = Get<std::string>(j, "checkpoint");
  c.decode_input = Get<std::string>(j, "decode_input");
  const json& data = j.at("data");
  c.data.task = TaskFromJson(data.at("task"));
  c.data.train_tsv = Get<std::string>(data, "train_tsv");
  c.data.eval_tsv = Get<std::string>(data, "eval_tsv");
  c.data.held_out = Get<int>(data, "held_out");
  c.data.token_budget = Get<std::int64_t>(data, "token_budget");
  c.model = ModelConfig::FromJson(j.at("model").dump());
  c.sampler = SamplerFromJson(j.at("sampler"));
  c.optimizer = OptimizerFromJson(j.at("optimizer"));
  c.decode = DecodeFromJson(j.at("decode"));
  const json& train = j.at("train");
  c.train.steps = Get<std::int64_t>(train, "steps");
  c.train.checkpoint_every = Get<std::int64_t>(train, "checkpoint_every");
  c.train.log_flush_every = Get<std::int64_t>(train, "log_flush_every");
  c.train.resume = Get<std::string>(train, "resume");
  const json& s = j.at("schedules");
  c.schedules.decoding = ListFromJson<ScheduleSpec>(s, "decoding", ScheduleFromJson);
  c.schedules.decoding_max_steps = Get<int>(s, "decoding_max_steps");
  c.schedules.training = ListFromJson<ScheduleSpec>(s, "training", ScheduleFromJson);
  c.schedules.training_max_steps = Get<int>(s, "training_max_steps");
  c.schedules.joint = ListFromJson<JointSpec>(s, "joint", JointFromJson);
  c.schedules.joint_max_i = Get<int>(s, "joint_max_i");
  c.schedules.joint_max_t = Get<int>(s, "joint_max_t");
  c.schedules.joint_i_stride = Get<double>(s, "joint_i_stride");
  const json& gap = j.at("gap");
  c.gap.split = Get<std::string>(gap, "split");
  c.gap.pairs = Get<int>(gap, "pairs");
  c.gap.window = Get<int>(gap, "window");
  return c;
}

void ApplyOverride(ordered_json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key = Trim(assignment.substr(0, eq));
  const std::string text = Trim(assignment.substr(eq + 1));
  ordered_json* slot = &doc;
  std::size_t begin = 0;
  while (true) {
    const auto dot = key.find('.', begin);
    const std::string part = key.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (slot->is_array()) {
      std::size_t index = 0;
      try {
        std::size_t used = 0;
        index = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("override key '" + key + "': '" + part + "' is not an array index");
      }
      if (index >= slot->size()) throw ConfigError("override key '" + key + "' is out of range");
      slot = &(*slot)[index];
    } else if (slot->is_object() && slot->contains(part)) {
      slot = &(*slot)[part];
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  ordered_json value = ordered_json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  *slot = std::move(value);
}

RunConfig ResolveRunConfig(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides) {
  ordered_json doc = ToJson(DefaultRunConfig());
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    json patch = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (patch.is_discarded()) throw ConfigError("config file " + file->string() + " is not JSON");
    Merge(doc, patch, "");
  }
  for (const auto& o : overrides) ApplyOverride(doc, o);
  RunConfig c = RunConfigFromJson(json(doc));
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    c.output_dir = env;
  }
  c.Validate();
  return c;
}

}  // namespace ssdec::cli
