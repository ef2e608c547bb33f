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

#include "cfmea/metrics.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cfmea/error.h"

namespace cfmea {

double AgreementFromOutputs(const Matrix& outputs_a, const Matrix& outputs_b) {
  if (outputs_a.rows() == 0) {
    Fail(ErrorCode::kContract, "agreement needs a non-empty evaluation set");
  }
  if (outputs_a.rows() != outputs_b.rows() || outputs_a.cols() != outputs_b.cols()) {
    Fail(ErrorCode::kShape, "agreement outputs differ in shape");
  }
  Index same = 0;
  for (Index i = 0; i < outputs_a.rows(); ++i) {
    if (Argmax(outputs_a.row(i)) == Argmax(outputs_b.row(i))) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(outputs_a.rows());
}

double Agreement(const TrainedModel& a, const TrainedModel& b,
                 const Matrix& eval_inputs) {
  if (eval_inputs.rows() == 0) {
    Fail(ErrorCode::kContract, "agreement needs a non-empty evaluation set");
  }
  return AgreementFromOutputs(a.Predict(eval_inputs), b.Predict(eval_inputs));
}

double PredictionGainFromOutputs(const RowVector& fx, const RowVector& fc) {
  if (fx.size() != fc.size() || fx.size() < 2) {
    Fail(ErrorCode::kShape, "prediction gain needs matching two-class outputs");
  }
  const int t = 1 - Argmax(fx);
  return std::max(0.0, fc[t] - fx[t]);
}

double PredictionGain(const TrainedModel& classifier, const Vector& x,
                      const Vector& c) {
  if (x.size() != c.size()) Fail(ErrorCode::kShape, "x and c differ in dimension");
  return PredictionGainFromOutputs(classifier.PredictOne(x), classifier.PredictOne(c));
}

RowStats RowStats::FromValues(Vector values) {
  RowStats s;
  s.values = std::move(values);
  const Index n = s.values.size();
  if (n == 0) return s;
  s.mean = s.values.mean();
  if (n > 1) {
    const double ss = (s.values.array() - s.mean).square().sum();
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

RowStats Realism(const TrainedModel& autoencoder, const Matrix& inputs) {
  if (inputs.cols() != autoencoder.spec.input_dim() ||
      autoencoder.spec.output_dim() != autoencoder.spec.input_dim()) {
    Fail(ErrorCode::kShape, "autoencoder dimension does not match the inputs");
  }
  if (inputs.rows() == 0) return RowStats::FromValues(Vector());
  const Matrix recon = autoencoder.Predict(inputs);
  Vector v = (inputs - recon).array().square().rowwise().mean();
  return RowStats::FromValues(std::move(v));
}

RowStats Actionability(const Matrix& inputs, const Matrix& counterfactuals) {
  if (inputs.rows() != counterfactuals.rows() ||
      inputs.cols() != counterfactuals.cols()) {
    Fail(ErrorCode::kShape, "inputs and counterfactuals differ in shape");
  }
  Vector v = (inputs - counterfactuals).cwiseAbs().rowwise().sum();
  return RowStats::FromValues(std::move(v));
}

RowStats PredictionGains(const Matrix& fx, const Matrix& fc) {
  if (fx.rows() != fc.rows() || fx.cols() != fc.cols()) {
    Fail(ErrorCode::kShape, "prediction matrices differ in shape");
  }
  Vector v(fx.rows());
  for (Index i = 0; i < fx.rows(); ++i) {
    v[i] = PredictionGainFromOutputs(fx.row(i), fc.row(i));
  }
  return RowStats::FromValues(std::move(v));
}

}  // namespace cfmea
