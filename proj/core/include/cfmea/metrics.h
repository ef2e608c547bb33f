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

#ifndef CFMEA_METRICS_H_
#define CFMEA_METRICS_H_

#include "cfmea/linalg.h"
#include "cfmea/nn.h"

namespace cfmea {

// Fraction of rows whose argmax (ties to class 0) matches. Throws kContract
// on an empty evaluation set.
double Agreement(const TrainedModel& a, const TrainedModel& b,
                 const Matrix& eval_inputs);
double AgreementFromOutputs(const Matrix& outputs_a, const Matrix& outputs_b);

// max(0, f(c)[t] - f(x)[t]) with t = 1 - argmax f(x).
double PredictionGain(const TrainedModel& classifier, const Vector& x,
                      const Vector& c);
double PredictionGainFromOutputs(const RowVector& fx, const RowVector& fc);

struct RowStats {
  Vector values;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single row

  static RowStats FromValues(Vector values);
};

// Per-row mean over coordinates of (x - reconstruction(x))^2.
RowStats Realism(const TrainedModel& autoencoder, const Matrix& inputs);

// Per-row L1 distance sum_j |x_j - c_j|.
RowStats Actionability(const Matrix& inputs, const Matrix& counterfactuals);

RowStats PredictionGains(const Matrix& fx, const Matrix& fc);

struct MetricsReport {
  double agreement = 0.0;
  RowStats prediction_gain;
  RowStats actionability;
  RowStats realism_queries;
  RowStats realism_cfs;
};

}  // namespace cfmea

#endif  // CFMEA_METRICS_H_
