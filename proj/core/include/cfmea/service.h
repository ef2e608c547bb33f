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

#ifndef CFMEA_SERVICE_H_
#define CFMEA_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "cfmea/explainer.h"
#include "cfmea/nn.h"

namespace cfmea {

enum class ExplanationMode { kNone, kCf, kPrivateCf };

std::string_view ExplanationModeName(ExplanationMode mode);

struct ScenarioConfig {
  ExplanationMode explanation_mode = ExplanationMode::kNone;
  // Attach f(c) to every response carrying a counterfactual.
  bool cf_prediction_in_response = true;
};

struct DeployOptions {
  // Maximum number of accepted queries; unlimited when empty.
  std::optional<int64_t> query_budget;
  // Keep full request/response records for ExportTrace.
  bool record_trace = false;
};

struct QueryResponse {
  RowVector prediction;
  std::optional<Vector> cf;
  std::optional<RowVector> cf_prediction;
};

struct QueryRecord {
  uint64_t input_hash = 0;
  int64_t timestamp_ns = 0;  // system clock, nanoseconds since epoch
  ExplanationMode scenario = ExplanationMode::kNone;
};

// The prediction API boundary. A Service hands out predictions and optional
// counterfactuals; the models behind it are not reachable through it.
// Query() is safe to call concurrently.
class Service {
 public:
  // Throws kConfiguration when generators are given in kNone mode, missing
  // in a CF mode, or not DP-trained in kPrivateCf mode.
  static Service Deploy(TrainedModel classifier,
                        std::optional<GeneratorPair> generators,
                        const ScenarioConfig& scenario,
                        const DeployOptions& options = {});

  // Throws kRequest on a dimension mismatch and kQuota once the budget is
  // exhausted. Rejected calls are not counted.
  QueryResponse Query(const Vector& x);

  int input_dim() const;
  ScenarioConfig scenario() const;
  int64_t total_queries() const;
  std::vector<QueryRecord> query_log() const;

  // One JSON object per accepted query. Requires record_trace.
  void ExportTrace(const std::filesystem::path& path) const;

 private:
  struct State;
  explicit Service(std::shared_ptr<State> state);

  std::shared_ptr<State> state_;
};

}  // namespace cfmea

#endif  // CFMEA_SERVICE_H_
