// Copyright 2026 The cfmea Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cfmea/attack.h"
#include "cfmea/models.h"
#include "cfmea/privacy.h"

namespace cfmea {
namespace {

Matrix Inputs(Index n, Index d) {
  Rng rng(1);
  std::normal_distribution<double> g;
  Matrix x(n, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

void BM_TargetForward(benchmark::State& state) {
  const MlpSpec spec = BuildTargetSpec(10, 1);
  const ParameterSet p = InitParams(spec);
  const Matrix x = Inputs(state.range(0), 10);
  for (auto _ : state) benchmark::DoNotOptimize(Predict(p, spec, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TargetForward)->Arg(1)->Arg(64)->Arg(1000);

void BM_TargetBackward(benchmark::State& state) {
  const MlpSpec spec = BuildTargetSpec(10, 1);
  const ParameterSet p = InitParams(spec);
  const Matrix x = Inputs(64, 10);
  const std::vector<int> y(64, 1);
  BackwardOptions opts;
  opts.mode = state.range(0) == 0 ? GradientMode::kBatch : GradientMode::kPerExample;
  for (auto _ : state) {
    const ForwardResult fwd = Forward(p, spec, x);
    Matrix g;
    CrossEntropy(fwd.outputs, y, &g);
    benchmark::DoNotOptimize(Backward(p, spec, fwd.cache, g, opts));
  }
}
BENCHMARK(BM_TargetBackward)->Arg(0)->Arg(1);

void BM_DpClipAndNoise(benchmark::State& state) {
  MlpSpec spec;
  spec.layer_sizes = {10, 64, 48, 32, 10};
  spec.output_activation = Activation::kLinear;
  const ParameterSet p = InitParams(spec);
  std::vector<ParameterSet> grads(64, p);
  DpConfig dp;
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(PrivatizeGradients(grads, dp, &rng));
}
BENCHMARK(BM_DpClipAndNoise);

void BM_JsDivergence(benchmark::State& state) {
  const std::vector<double> p = {0.3, 0.7}, q = {0.6, 0.4};
  for (auto _ : state) benchmark::DoNotOptimize(JsDivergence(p, q));
}
BENCHMARK(BM_JsDivergence);

}  // namespace
}  // namespace cfmea

BENCHMARK_MAIN();
