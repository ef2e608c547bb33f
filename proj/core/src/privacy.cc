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

#include "cfmea/privacy.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cfmea/error.h"

namespace cfmea {

void DpConfig::Validate() const {
  if (!(l2_norm_clip > 0.0)) {
    Fail(ErrorCode::kConfiguration, "l2_norm_clip must be positive");
  }
  if (!(noise_multiplier >= 0.0) || std::isinf(noise_multiplier)) {
    Fail(ErrorCode::kConfiguration, "noise_multiplier must be finite and >= 0");
  }
  if (microbatch_size < 1) {
    Fail(ErrorCode::kConfiguration, "microbatch_size must be >= 1");
  }
}

double GlobalNorm(const ParameterSet& grads) {
  return std::sqrt(grads.SquaredNorm());
}

namespace {

void ClipInPlace(ParameterSet* g, double clip) {
  const double norm = GlobalNorm(*g);
  // Norms at or under the bound are left bit-for-bit unchanged.
  if (norm > clip) g->Scale(clip / norm);
}

}  // namespace

std::vector<ParameterSet> ClipPerExample(std::span<const ParameterSet> grads,
                                         double clip) {
  if (!(clip > 0.0)) Fail(ErrorCode::kConfiguration, "clip must be positive");
  std::vector<ParameterSet> out(grads.begin(), grads.end());
  for (auto& g : out) ClipInPlace(&g, clip);
  return out;
}

ParameterSet ClippedSum(std::span<const ParameterSet> per_example,
                        const DpConfig& dp, int* num_microbatches) {
  dp.Validate();
  if (per_example.empty()) {
    Fail(ErrorCode::kContract, "DP step needs at least one example gradient");
  }
  ParameterSet sum = ParameterSet::ZerosLike(per_example.front());
  int count = 0;
  const auto n = per_example.size();
  const auto mb = static_cast<std::size_t>(dp.microbatch_size);
  for (std::size_t start = 0; start < n; start += mb) {
    const std::size_t end = std::min(n, start + mb);
    if (end - start == 1) {
      ParameterSet g = per_example[start];
      ClipInPlace(&g, dp.l2_norm_clip);
      sum.AddScaled(g, 1.0);
    } else {
      ParameterSet g = ParameterSet::ZerosLike(per_example.front());
      for (std::size_t i = start; i < end; ++i) g.AddScaled(per_example[i], 1.0);
      g.Scale(1.0 / static_cast<double>(end - start));
      ClipInPlace(&g, dp.l2_norm_clip);
      sum.AddScaled(g, 1.0);
    }
    ++count;
  }
  if (num_microbatches != nullptr) *num_microbatches = count;
  return sum;
}

ParameterSet PrivatizeGradients(std::span<const ParameterSet> per_example,
                                const DpConfig& dp, Rng* noise_rng) {
  int count = 0;
  ParameterSet g = ClippedSum(per_example, dp, &count);
  // noise_multiplier == 0 means no noise, including with the infinite clip.
  if (dp.noise_multiplier > 0.0) {
    if (std::isinf(dp.l2_norm_clip)) {
      Fail(ErrorCode::kConfiguration, "noise needs a finite l2_norm_clip");
    }
    std::normal_distribution<double> noise(0.0, dp.noise_multiplier * dp.l2_norm_clip);
    for (auto& layer : g.layers) {
      for (Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] += noise(*noise_rng);
      }
      for (Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] += noise(*noise_rng);
    }
  }
  g.Scale(1.0 / static_cast<double>(count));
  return g;
}

DpAdamState InitDpAdamState(const ParameterSet& params, const DpConfig& dp) {
  return {InitAdamState(params), MakeRng(dp.seed, "dp-noise")};
}

void DpAdamStep(ParameterSet* params, DpAdamState* state,
                std::span<const ParameterSet> per_example, const DpConfig& dp,
                const AdamConfig& adam) {
  const ParameterSet g = PrivatizeGradients(per_example, dp, &state->noise_rng);
  AdamStep(params, &state->adam, g, adam);
}

}  // namespace cfmea
