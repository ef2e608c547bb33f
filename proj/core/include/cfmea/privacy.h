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

#ifndef CFMEA_PRIVACY_H_
#define CFMEA_PRIVACY_H_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cfmea/nn.h"
#include "cfmea/random.h"

namespace cfmea {

struct DpConfig {
  // Sentinel for "no clipping".
  static constexpr double kNoClip = std::numeric_limits<double>::infinity();

  double l2_norm_clip = 1.0;
  double noise_multiplier = 3.0;
  int microbatch_size = 1;
  uint64_t seed = 0;

  // Throws kConfiguration.
  void Validate() const;
};

// L2 norm of the gradient flattened across every layer.
double GlobalNorm(const ParameterSet& grads);

// Rescales each gradient by min(1, clip / ||g||). Throws kConfiguration when
// clip <= 0.
std::vector<ParameterSet> ClipPerExample(std::span<const ParameterSet> grads,
                                         double clip);

// Groups rows into microbatches of `microbatch_size` (last one may be short),
// averages within each, clips each microbatch gradient and sums them. This
// is the quantity whose sensitivity is bounded by the clip norm.
ParameterSet ClippedSum(std::span<const ParameterSet> per_example,
                        const DpConfig& dp, int* num_microbatches = nullptr);

// Clipped sum + N(0, (noise_multiplier * clip)^2) per coordinate, divided by
// the number of microbatches.
ParameterSet PrivatizeGradients(std::span<const ParameterSet> per_example,
                                const DpConfig& dp, Rng* noise_rng);

struct DpAdamState {
  AdamState adam;
  Rng noise_rng;
};

DpAdamState InitDpAdamState(const ParameterSet& params, const DpConfig& dp);

// PrivatizeGradients followed by a plain AdamStep. Throws kContract on an
// empty gradient list.
void DpAdamStep(ParameterSet* params, DpAdamState* state,
                std::span<const ParameterSet> per_example, const DpConfig& dp,
                const AdamConfig& adam);

}  // namespace cfmea

#endif  // CFMEA_PRIVACY_H_
