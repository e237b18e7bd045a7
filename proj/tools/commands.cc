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

#include "commands.h"

#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ssdec/checkpoint.h"
#include "ssdec/csv.h"
#include "ssdec/decode.h"
#include "ssdec/error.h"
#include "ssdec/metrics.h"
#include "ssdec/rng.h"
#include "ssdec/sampler.h"

namespace ssdec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kLogHeader = "step,loss,golden_fraction,mean_p,mode";
constexpr const char* kModelSidecar = "model_config.json";

fs::path PrepareOutputDir(const RunConfig& config) {
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  std::ofstream out(dir / "resolved_config.json");
  if (!out) throw Error("cannot write " + (dir / "resolved_config.json").string());
  out << ToJson(config).dump(2) << '\n';
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<Sequence> References(const Corpus& corpus) {
  std::vector<Sequence> refs;
  refs.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) refs.push_back(p.target);
  return refs;
}

std::string FileStem(std::string label) {
  for (char& c : label) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  }
  return label;
}

void WriteLogRow(std::ostream& out, const StepRecord& r) {
  out << r.step << ',' << FormatDouble(r.loss) << ',' << FormatDouble(r.golden_fraction) << ','
      << FormatDouble(r.mean_probability) << ',' << r.mode << '\n';
}

// Keeps the rows of an earlier run that precede `first_step`.
std::vector<std::string> LogRowsBefore(const fs::path& path, std::int64_t first_step) {
  std::vector<std::string> rows;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != kLogHeader) return rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::int64_t step = std::stoll(line.substr(0, line.find(',')));
    if (step < first_step) rows.push_back(line);
  }
  return rows;
}

void SaveTrainer(const ScheduledSamplingTrainer<float>& trainer, const fs::path& path) {
  Checkpoint ckpt;
  trainer.SaveTo(ckpt);
  ckpt.Save(path);
}

ordered_json CurveSummary(const StepCurve& curve) {
  const std::vector<double> steps(curve.steps.begin(), curve.steps.end());
  ordered_json j;
  j["steps"] = curve.size();
  j["spearman"] = curve.size() >= 2 ? SpearmanCorrelation(steps, curve.values) : 0.0;
  return j;
}

}  // namespace

RunData LoadRunData(const RunConfig& config) {
  RunData data;
  if (!config.data.train_tsv.empty()) {
    data.train = LoadTsvCorpus(config.data.train_tsv);
    if (!config.data.eval_tsv.empty()) {
      data.eval = LoadTsvCorpus(config.data.eval_tsv, data.train.vocab);
    } else {
      data.eval.vocab = data.train.vocab;
    }
  } else {
    Corpus all = GenerateTask(config.data.task);
    const auto split = all.pairs.size() - static_cast<std::size_t>(config.data.held_out);
    data.train.vocab = all.vocab;
    data.train.pairs.assign(all.pairs.begin(), all.pairs.begin() + split);
    if (!config.data.eval_tsv.empty()) {
      data.eval = LoadTsvCorpus(config.data.eval_tsv, all.vocab);
    } else {
      data.eval.vocab = all.vocab;
      data.eval.pairs.assign(all.pairs.begin() + split, all.pairs.end());
    }
  }
  if (data.train.vocab.size() > config.model.vocab_size) {
    throw ConfigError("corpus vocabulary has " + std::to_string(data.train.vocab.size()) +
                      " symbols but model.vocab_size is " +
                      std::to_string(config.model.vocab_size));
  }
  return data;
}

fs::path CheckpointPath(const RunConfig& config) {
  if (!config.checkpoint.empty()) return config.checkpoint;
  return fs::path(config.output_dir) / "checkpoint_final.ckpt";
}

Transformer<float> LoadModel(const RunConfig& config, const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw Error("checkpoint " + checkpoint.string() + " not found");
  ModelConfig model_config = config.model;
  const fs::path sidecar = checkpoint.parent_path() / kModelSidecar;
  if (fs::exists(sidecar)) {
    std::ifstream in(sidecar);
    std::stringstream text;
    text << in.rdbuf();
    model_config = ModelConfig::FromJson(text.str());
  }
  Transformer<float> model(model_config, DeriveSeed(config.seed, "init"));
  model.LoadFrom(Checkpoint::Load(checkpoint));
  return model;
}

int ScheduleDump(const RunConfig& config, std::ostream& log) {
  const fs::path dir = PrepareOutputDir(config);
  const auto& s = config.schedules;
  WriteCsv(dir / "schedule_curves.csv", DumpScheduleCurves(s.decoding, s.decoding_max_steps));
  WriteCsv(dir / "accumulated_errors.csv",
           DumpAccumulatedCurves(s.decoding, s.decoding_max_steps));
  WriteCsv(dir / "training_curves.csv", DumpScheduleCurves(s.training, s.training_max_steps));
  for (std::size_t i = 0; i < s.joint.size(); ++i) {
    const auto& joint = s.joint[i];
    const std::string stem =
        joint.name.empty() ? std::string(ToString(joint.method)) + "_" + std::to_string(i)
                           : FileStem(joint.name);
    WriteCsv(dir / ("joint_" + stem + ".csv"),
             DumpJointGrid(joint, s.joint_max_i, s.joint_max_t, s.joint_i_stride));
  }
  log << "wrote " << 3 + s.joint.size() << " curve files to " << dir.string() << '\n';
  return kExitOk;
}

int TrainModel(const RunConfig& config, std::ostream& log) {
  const fs::path dir = PrepareOutputDir(config);
  const RunData data = LoadRunData(config);
  if (data.train.pairs.empty()) throw ConfigError("training corpus is empty");
  WriteText(dir / kModelSidecar, config.model.ToJson() + "\n");

  Transformer<float> model(config.model, DeriveSeed(config.seed, "init"));
  ScheduledSamplingTrainer<float> trainer(model, config.sampler, config.optimizer,
                                          DeriveSeed(config.seed, "train"));
  if (!config.train.resume.empty()) {
    trainer.LoadFrom(Checkpoint::Load(config.train.resume));
    log << "resumed from " << config.train.resume << " at step " << trainer.step() << '\n';
  }
  BatchStream stream(data.train, config.data.token_budget, DeriveSeed(config.seed, "data"));

  const fs::path log_path = dir / "train_log.csv";
  const auto kept = config.train.resume.empty() ? std::vector<std::string>{}
                                                : LogRowsBefore(log_path, trainer.step());
  std::ofstream out(log_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + log_path.string());
  out << kLogHeader << '\n';
  for (const auto& row : kept) out << row << '\n';

  log << "training " << model.NumParameters() << " parameters on " << data.train.pairs.size()
      << " pairs, " << stream.batches_per_epoch() << " batches per epoch\n";
  StepRecord last;
  auto diverged = [&](const Error& e) {
    out.flush();
    // The failing update was not applied, so the trainer holds the last good state.
    const fs::path saved = dir / "checkpoint_last_good.ckpt";
    SaveTrainer(trainer, saved);
    log << "error: training diverged at step " << trainer.step() << ": " << e.what() << '\n'
        << "last good state saved to " << saved.string() << '\n'
        << "lower optimizer.learning_rate, raise optimizer.warmup_steps or set "
           "optimizer.clip_norm, then resume with --set train.resume="
        << saved.string() << '\n';
    return kExitDiverged;
  };
  try {
    while (trainer.step() < config.train.steps) {
      last = trainer.Step(stream.At(trainer.step()));
      WriteLogRow(out, last);
      const std::int64_t done = trainer.step();
      if (done % config.train.log_flush_every == 0) {
        out.flush();
        log << "step " << done << " loss " << last.loss << " golden " << last.golden_fraction
            << '\n';
      }
      if (config.train.checkpoint_every > 0 && done % config.train.checkpoint_every == 0) {
        SaveTrainer(trainer, dir / ("checkpoint_" + std::to_string(done) + ".ckpt"));
      }
    }
  } catch (const DivergenceError& e) {
    return diverged(e);
  } catch (const NumericError& e) {
    // Activations overflowed before the loss could be formed.
    return diverged(e);
  }
  out.flush();
  SaveTrainer(trainer, dir / "checkpoint_final.ckpt");
  log << "finished at step " << trainer.step() << "; final loss " << last.loss << '\n';
  return kExitOk;
}

int GapCurve(const RunConfig& config, std::ostream& log) {
  const fs::path dir = PrepareOutputDir(config);
  const RunData data = LoadRunData(config);
  const Transformer<float> model = LoadModel(config, CheckpointPath(config));

  const Corpus& from = config.gap.split == "train" ? data.train : data.eval;
  const std::size_t n = std::min<std::size_t>(from.pairs.size(), config.gap.pairs);
  if (n == 0) throw ConfigError("gap split '" + config.gap.split + "' has no pairs");
  std::vector<std::size_t> order(from.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  if (config.gap.split == "train") {
    Rng rng(DeriveSeed(config.seed, "gap"));
    rng.Shuffle(order.begin(), order.end());
  }
  Corpus sample;
  sample.vocab = from.vocab;
  for (std::size_t i = 0; i < n; ++i) sample.pairs.push_back(from.pairs[order[i]]);

  const auto refs = References(sample);
  const StepCurve train = StrictPrecisionPerStep(TeacherForcedPredictions(model, sample), refs);
  const StepCurve infer =
      FuzzyPrecisionPerStep(DecodeCorpus(model, sample, config.decode), refs, config.gap.window);
  WriteCurveCsv(dir / "gap_train_precision.csv", train);
  WriteCurveCsv(dir / "gap_inference_precision.csv", infer);
  WriteCurveCsv(dir / "gap_difference.csv", CurveDifference(train, infer));

  ordered_json summary;
  summary["pairs"] = n;
  summary["split"] = config.gap.split;
  summary["window"] = config.gap.window;
  summary["train"] = CurveSummary(train);
  summary["inference"] = CurveSummary(infer);
  WriteText(dir / "gap_summary.json", summary.dump(2) + "\n");
  log << "gap curves over " << n << " " << config.gap.split << " pairs: spearman train "
      << summary["train"]["spearman"].get<double>() << ", inference "
      << summary["inference"]["spearman"].get<double>() << '\n';
  return kExitOk;
}

int Evaluate(const RunConfig& config, std::ostream& log) {
  const fs::path dir = PrepareOutputDir(config);
  const RunData data = LoadRunData(config);
  if (data.eval.pairs.empty()) throw ConfigError("evaluation corpus is empty");
  const Transformer<float> model = LoadModel(config, CheckpointPath(config));

  const auto hyps = DecodeCorpus(model, data.eval, config.decode);
  const auto refs = References(data.eval);
  const double accuracy = TokenAccuracy(hyps, refs);
  const BleuResult bleu = CorpusBleuLite(hyps, refs);
  const StepCurve strict = StrictPrecisionPerStep(hyps, refs);
  const StepCurve fuzzy = FuzzyPrecisionPerStep(hyps, refs, config.gap.window);
  WriteCurveCsv(dir / "eval_strict_precision.csv", strict);
  WriteCurveCsv(dir / "eval_fuzzy_precision.csv", fuzzy);
  WriteCurveCsv(dir / "eval_accumulated_errors.csv",
                AccumulatedErrorCurve(hyps, refs, config.gap.window));

  ordered_json metrics;
  metrics["pairs"] = data.eval.pairs.size();
  metrics["token_accuracy"] = accuracy;
  metrics["bleu"] = bleu.score;
  metrics["bleu_precisions"] = bleu.precisions;
  metrics["brevity_penalty"] = bleu.brevity_penalty;
  metrics["empty_hypotheses"] = bleu.empty_hypotheses;
  metrics["beam_size"] = config.decode.beam_size;
  WriteText(dir / "metrics.json", metrics.dump(2) + "\n");

  std::ostringstream summary;
  summary << "pairs " << data.eval.pairs.size() << '\n'
          << "token_accuracy " << FormatDouble(accuracy) << '\n'
          << "bleu " << FormatDouble(bleu.score) << '\n';
  WriteText(dir / "summary.txt", summary.str());
  log << summary.str();
  return kExitOk;
}

int DecodeSources(const RunConfig& config, std::ostream& log) {
  const fs::path dir = PrepareOutputDir(config);
  const RunData data = LoadRunData(config);
  const Transformer<float> model = LoadModel(config, CheckpointPath(config));

  Corpus sources;
  sources.vocab = data.train.vocab;
  if (config.decode_input.empty()) {
    for (const auto& p : data.eval.pairs) sources.pairs.push_back({p.source, {}});
  } else {
    std::ifstream in(config.decode_input);
    if (!in) throw Error("cannot open decode input " + config.decode_input);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      SequencePair pair;
      std::istringstream tokens(line);
      for (std::string t; tokens >> t;) pair.source.push_back(sources.vocab.Id(t));
      if (pair.source.empty()) {
        throw DataError(config.decode_input + ":" + std::to_string(line_no) + ": empty source");
      }
      sources.pairs.push_back(std::move(pair));
    }
  }
  const auto hyps = DecodeCorpus(model, sources, config.decode);
  std::ostringstream text;
  for (const auto& h : hyps) text << sources.vocab.Join(h) << '\n';
  WriteText(dir / "hypotheses.txt", text.str());
  log << "decoded " << hyps.size() << " sources into " << (dir / "hypotheses.txt").string()
      << '\n';
  return kExitOk;
}

}  // namespace ssdec::cli
