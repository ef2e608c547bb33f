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

#include <cmath>
#include <cstring>
#include <string>

#include "cfmea/error.h"
#include "cfmea/linalg.h"
#include "cfmea/random.h"

namespace cfmea {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInput: return "input error";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kData: return "data error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kContract: return "contract error";
    case ErrorCode::kTraining: return "training error";
    case ErrorCode::kRequest: return "request error";
    case ErrorCode::kQuota: return "quota error";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

int Argmax(const Eigen::Ref<const RowVector>& probs) {
  int best = 0;
  for (Index k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = static_cast<int>(k);
  }
  return best;
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }

uint64_t Fnv1a64(const void* data, std::size_t size, uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t DeriveSeed(uint64_t seed, std::string_view stream) {
  return SplitMix64(seed ^ Fnv1a64(stream.data(), stream.size()));
}

}  // namespace cfmea
