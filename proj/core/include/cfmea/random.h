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

#ifndef CFMEA_RANDOM_H_
#define CFMEA_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace cfmea {

using Rng = std::mt19937_64;

// Independent generator streams derived from one user seed. Each consumer
// (init, shuffle, dropout, dp noise, ...) names its own stream so freezing one
// source of randomness never perturbs another.
uint64_t DeriveSeed(uint64_t seed, std::string_view stream);

inline Rng MakeRng(uint64_t seed, std::string_view stream) {
  return Rng(DeriveSeed(seed, stream));
}

}  // namespace cfmea

#endif  // CFMEA_RANDOM_H_
