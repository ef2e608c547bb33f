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

#ifndef CFMEA_CHECKPOINT_H_
#define CFMEA_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "cfmea/nn.h"

namespace cfmea {

// Maximum absolute deviation tolerated when a loaded checkpoint replays its
// stored probe batch.
inline constexpr double kProbeTolerance = 1e-9;

// Writes a JSON checkpoint: spec, explicitly shaped weight/bias arrays,
// optional standardizer, metadata and a probe batch with its outputs. When
// `probe_inputs` is empty a deterministic probe of four rows is generated.
void SaveCheckpoint(const TrainedModel& model, const std::filesystem::path& path,
                    const Matrix& probe_inputs = Matrix());

// Parses a checkpoint and replays its probe. Throws kInput on unreadable or
// malformed files and kNumeric when the probe does not reproduce.
TrainedModel LoadCheckpoint(const std::filesystem::path& path);

std::string CheckpointToString(const TrainedModel& model,
                               const Matrix& probe_inputs = Matrix());
TrainedModel CheckpointFromString(const std::string& text);

}  // namespace cfmea

#endif  // CFMEA_CHECKPOINT_H_
