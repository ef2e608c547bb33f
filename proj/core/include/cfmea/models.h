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

#ifndef CFMEA_MODELS_H_
#define CFMEA_MODELS_H_

#include <array>
#include <cstdint>
#include <vector>

#include "cfmea/dataset.h"
#include "cfmea/nn.h"

namespace cfmea {

// Hidden widths of the deployed target network, in order.
inline constexpr std::array<int, 16> kTargetHidden = {
    64, 32, 16, 32, 64, 128, 64, 32, 128, 64, 128, 64, 128, 64, 32, 16};

// Hidden widths of the attacker's substitute network.
inline constexpr std::array<int, 3> kThreatHidden = {16, 32, 64};

// gelu hidden layers, softmax head of width 2.
MlpSpec BuildTargetSpec(int input_dim, uint64_t seed = 0);

// relu hidden layers, softmax head of width 2.
MlpSpec BuildThreatSpec(int input_dim, uint64_t seed = 0);

// {d, ceil(d/2), d}
std::vector<int> DefaultAutoencoderHidden(int input_dim);

// relu hidden layers, linear output of width input_dim. Empty `hidden`
// selects DefaultAutoencoderHidden.
MlpSpec BuildAutoencoderSpec(int input_dim, const std::vector<int>& hidden = {},
                             uint64_t seed = 0);

// Minimises MSE between clean rows and reconstructions of Gaussian-corrupted
// rows; fresh corruption is drawn for every batch of every epoch.
TrainedModel TrainDenoisingAutoencoder(const Dataset& train, double noise_std,
                                       const TrainConfig& config,
                                       const std::vector<int>& hidden = {});

}  // namespace cfmea

#endif  // CFMEA_MODELS_H_
