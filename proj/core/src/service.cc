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

#include "cfmea/service.h"

#include <chrono>
#include <fstream>
#include <mutex>
#include <utility>

#include "json.hpp"

#include "cfmea/error.h"

namespace cfmea {
namespace {

struct TraceRecord {
  QueryRecord record;
  Vector x;
  QueryResponse response;
};

nlohmann::json ToJson(const Eigen::Ref<const RowVector>& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

std::string_view ExplanationModeName(ExplanationMode mode) {
  switch (mode) {
    case ExplanationMode::kNone:
      return "none";
    case ExplanationMode::kCf:
      return "cf";
    case ExplanationMode::kPrivateCf:
      return "private_cf";
  }
  return "unknown";
}

struct Service::State {
  TrainedModel classifier;
  std::optional<GeneratorPair> generators;
  ScenarioConfig scenario;
  DeployOptions options;

  mutable std::mutex mu;
  int64_t total = 0;
  std::vector<QueryRecord> log;
  std::vector<TraceRecord> trace;
};

Service::Service(std::shared_ptr<State> state) : state_(std::move(state)) {}

Service Service::Deploy(TrainedModel classifier,
                        std::optional<GeneratorPair> generators,
                        const ScenarioConfig& scenario,
                        const DeployOptions& options) {
  const ExplanationMode mode = scenario.explanation_mode;
  if (mode == ExplanationMode::kNone && generators) {
    Fail(ErrorCode::kConfiguration, "no-explanation scenario takes no generators");
  }
  if (mode != ExplanationMode::kNone && !generators) {
    Fail(ErrorCode::kConfiguration, "counterfactual scenario needs generators");
  }
  if (mode == ExplanationMode::kPrivateCf && !generators->dp()) {
    Fail(ErrorCode::kConfiguration, "private scenario needs DP-trained generators");
  }
  if (classifier.spec.output_dim() != 2) {
    Fail(ErrorCode::kConfiguration, "deployed classifier must be binary");
  }
  if (generators) {
    for (int t = 0; t < 2; ++t) {
      const GeneratorModel& g = generators->ForTarget(t);
      if (g.target_class != t ||
          g.model.spec.input_dim() != classifier.spec.input_dim() ||
          g.model.spec.output_dim() != classifier.spec.input_dim()) {
        Fail(ErrorCode::kConfiguration, "generator pair does not fit the classifier");
      }
    }
  }
  if (options.query_budget && *options.query_budget < 0) {
    Fail(ErrorCode::kConfiguration, "query budget must be >= 0");
  }
  auto state = std::make_shared<State>();
  state->classifier = std::move(classifier);
  state->generators = std::move(generators);
  state->scenario = scenario;
  state->options = options;
  return Service(std::move(state));
}

QueryResponse Service::Query(const Vector& x) {
  State& s = *state_;
  if (x.size() != s.classifier.spec.input_dim()) {
    Fail(ErrorCode::kRequest, "query has dimension " + std::to_string(x.size()) +
                                  ", expected " +
                                  std::to_string(s.classifier.spec.input_dim()));
  }
  {
    // Reserve the budget slot first so concurrent callers cannot overrun it.
    std::lock_guard<std::mutex> lock(s.mu);
    if (s.options.query_budget && s.total >= *s.options.query_budget) {
      Fail(ErrorCode::kQuota, "query budget exhausted");
    }
    ++s.total;
  }
  QueryResponse r;
  if (s.scenario.explanation_mode == ExplanationMode::kNone) {
    r.prediction = s.classifier.PredictOne(x);
  } else {
    CfPair cf = GenerateCf(*s.generators, s.classifier, x);
    r.prediction = cf.fx;
    r.cf = cf.c;
    if (s.scenario.cf_prediction_in_response) r.cf_prediction = cf.fc;
  }
  QueryRecord rec;
  rec.input_hash = Fnv1a64(x.data(), sizeof(double) * static_cast<size_t>(x.size()));
  rec.timestamp_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  rec.scenario = s.scenario.explanation_mode;
  std::lock_guard<std::mutex> lock(s.mu);
  s.log.push_back(rec);
  if (s.options.record_trace) s.trace.push_back({rec, x, r});
  return r;
}

int Service::input_dim() const { return state_->classifier.spec.input_dim(); }

ScenarioConfig Service::scenario() const { return state_->scenario; }

int64_t Service::total_queries() const {
  std::lock_guard<std::mutex> lock(state_->mu);
  return state_->total;
}

std::vector<QueryRecord> Service::query_log() const {
  std::lock_guard<std::mutex> lock(state_->mu);
  return state_->log;
}

void Service::ExportTrace(const std::filesystem::path& path) const {
  if (!state_->options.record_trace) {
    Fail(ErrorCode::kConfiguration, "service was deployed without record_trace");
  }
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write trace: " + path.string());
  std::lock_guard<std::mutex> lock(state_->mu);
  for (const TraceRecord& t : state_->trace) {
    nlohmann::json j;
    j["input_hash"] = t.record.input_hash;
    j["timestamp_ns"] = t.record.timestamp_ns;
    j["scenario"] = std::string(ExplanationModeName(t.record.scenario));
    j["x"] = ToJson(t.x.transpose());
    j["prediction"] = ToJson(t.response.prediction);
    j["cf"] = t.response.cf ? ToJson(t.response.cf->transpose()) : nlohmann::json();
    j["cf_prediction"] =
        t.response.cf_prediction ? ToJson(*t.response.cf_prediction) : nlohmann::json();
    out << j.dump() << '\n';
  }
}

}  // namespace cfmea
