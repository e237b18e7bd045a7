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

#include <benchmark/benchmark.h>

#include <vector>

#include "ssdec/data.h"
#include "ssdec/decode.h"
#include "ssdec/model.h"
#include "ssdec/ops.h"
#include "ssdec/rng.h"
#include "ssdec/sampler.h"
#include "ssdec/schedules.h"

namespace ssdec {
namespace {

Tensor<float> RandomTensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<float>(rng.Uniform(-1.0, 1.0));
  return Tensor<float>::FromValues(shape, std::move(v));
}

ModelConfig BenchModel() {
  ModelConfig m;
  m.vocab_size = 50;
  m.hidden_size = 64;
  m.filter_size = 128;
  m.num_heads = 4;
  return m;
}

Corpus BenchCorpus() {
  TaskConfig t;
  t.kind = TaskKind::kNoisyMap;
  t.min_length = 20;
  t.max_length = 60;
  t.count = 2000;
  return GenerateTask(t);
}

void BM_MatMul(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const auto a = RandomTensor({n, n}, 1);
  const auto b = RandomTensor({n, n}, 2);
  TapeScope<float> no_tape(nullptr);
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_MatMul)->RangeMultiplier(2)->Range(64, 512);

void BM_TeacherForcingForward(benchmark::State& state) {
  const Corpus corpus = BenchCorpus();
  const Transformer<float> model(BenchModel(), 1);
  BatchStream stream(corpus, 2048, 3);
  const Batch batch = stream.At(0);
  TapeScope<float> no_tape(nullptr);
  for (auto _ : state) benchmark::DoNotOptimize(model.TeacherForcingLoss(batch, {}));
}
BENCHMARK(BM_TeacherForcingForward)->Unit(benchmark::kMillisecond);

// One optimizer update: arg 0 is teacher forcing, 1 the two-pass sampler.
void BM_TrainStep(benchmark::State& state) {
  const Corpus corpus = BenchCorpus();
  Transformer<float> model(BenchModel(), 1);
  SamplerConfig sampler;
  sampler.mode = state.range(0) == 0 ? SamplingMode::kTeacherForcing : SamplingMode::kDecodingSteps;
  OptimizerConfig opt;
  opt.warmup_steps = 800;
  ScheduledSamplingTrainer<float> trainer(model, sampler, opt, 5);
  BatchStream stream(corpus, 2048, 3);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.Step(stream.At(trainer.step())));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BeamDecode(benchmark::State& state) {
  const Corpus corpus = BenchCorpus();
  const Transformer<float> model(BenchModel(), 1);
  Corpus one;
  one.vocab = corpus.vocab;
  one.pairs.push_back(corpus.pairs.front());
  DecodeConfig config;
  config.beam_size = static_cast<int>(state.range(0));
  config.max_length = 32;
  for (auto _ : state) benchmark::DoNotOptimize(DecodeCorpus(model, one, config));
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AccumulatedErrors(benchmark::State& state) {
  const ScheduleSpec g = ScheduleSpec::Sigmoid(20.0);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(AccumulatedErrors(g, t));
    t = t < 500.0 ? t + 1.0 : 0.0;
  }
}
BENCHMARK(BM_AccumulatedErrors);

}  // namespace
}  // namespace ssdec

BENCHMARK_MAIN();
