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

// Independent reference implementations used as test oracles. Everything
// here is written as plain loops over std::vector so it shares no code
// path with the library under test.

#ifndef CFMEA_TESTS_TESTING_ORACLES_H_
#define CFMEA_TESTS_TESTING_ORACLES_H_

#include <functional>
#include <vector>

#include "cfmea/linalg.h"
#include "cfmea/nn.h"

namespace cfmea::testing {

double ScalarKl(const std::vector<double>& p, const std::vector<double>& q);
double ScalarJs(const std::vector<double>& p, const std::vector<double>& q);

// Row-loop count of rows whose first maximal entries sit at the same index.
long LoopAgreementCount(const Matrix& a, const Matrix& b);

// Row-loop L1 distance and per-row mean squared error.
std::vector<double> LoopL1(const Matrix& x, const Matrix& c);
std::vector<double> LoopRowMse(const Matrix& x, const Matrix& y);

// Dense layer by explicit triple loop: out = x * w + b.
Matrix LoopAffine(const Matrix& x, const Matrix& w, const Vector& b);

// Central finite differences of f at x.
Vector NumericGradient(const std::function<double(const Vector&)>& f,
                       const Vector& x, double step = 1e-6);

// ||a - b|| / max(||a||, ||b||, floor).
double RelativeError(const Vector& a, const Vector& b, double floor = 1e-12);

// Plain logistic regression fit by full-batch gradient descent; returns the
// accuracy on (x_test, y_test).
double LogisticProbeAccuracy(const Matrix& x_train, const std::vector<int>& y_train,
                             const Matrix& x_test, const std::vector<int>& y_test,
                             int iterations = 500, double lr = 0.5);

// The counterfactual value function terms evaluated element by element.
struct ValueOracle {
  double real_term = 0.0;
  bool real_defined = false;
  double fake_term = 0.0;
};
ValueOracle LoopValueFunction(const std::vector<double>& class_weights,
                              const std::vector<double>& d_real,
                              const std::vector<double>& d_fake);

// Scalar Adam on w with gradient g(w), starting at w0.
double ScalarAdam(const std::function<double(double)>& grad, double w0,
                  double lr, int steps);

}  // namespace cfmea::testing

#endif  // CFMEA_TESTS_TESTING_ORACLES_H_
