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

#ifndef CFMEA_ERROR_H_
#define CFMEA_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfmea {

// Failure categories surfaced by the library. Every thrown cfmea::Error
// carries exactly one of these.
enum class ErrorCode {
  kInput,          // unreadable or malformed input files
  kConfiguration,  // invalid options or inconsistent setup
  kData,           // data that violates a dataset invariant
  kShape,          // dimension mismatch
  kNumeric,        // non-finite values where finite ones are required
  kContract,       // caller broke a documented precondition
  kTraining,       // optimisation diverged
  kRequest,        // malformed service request
  kQuota,          // service query budget exhausted
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace cfmea

#endif  // CFMEA_ERROR_H_
