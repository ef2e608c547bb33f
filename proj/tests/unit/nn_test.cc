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

#include "cfmea/nn.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "cfmea/error.h"
#include "testing/oracles.h"

namespace cfmea {
namespace {

using testing::NumericGradient;
using testing::RelativeError;

MlpSpec Spec(std::vector<int> sizes, Activation hidden, Activation out,
             uint64_t seed = 1) {
  MlpSpec s;
  s.layer_sizes = std::move(sizes);
  s.hidden_activation = hidden;
  s.output_activation = out;
  s.seed = seed;
  return s;
}

Matrix RandomMatrix(Index r, Index c, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Mean loss of the network as a function of its flattened parameters.
using RowLoss = std::function<Vector(const Matrix& out, Matrix* grad)>;

void ExpectGradientMatches(const MlpSpec& spec, const Matrix& x, const RowLoss& loss,
                           double tol = 1e-5) {
  ParameterSet params = InitParams(spec);
  ForwardResult fwd = Forward(params, spec, x);
  Matrix g;
  loss(fwd.outputs, &g);
  const Vector analytic = Flatten(Backward(params, spec, fwd.cache, g).batch);
  auto f = [&](const Vector& flat) {
    ParameterSet p = params;
    Unflatten(flat, &p);
    return loss(Predict(p, spec, x), nullptr).mean();
  };
  const Vector numeric = NumericGradient(f, Flatten(params));
  EXPECT_LE(RelativeError(analytic, numeric), tol);
}

TEST(InitParams, DeterministicAndZeroBias) {
  const MlpSpec spec = Spec({4, 8, 2}, Activation::kRelu, Activation::kSoftmax, 9);
  const ParameterSet a = InitParams(spec);
  const ParameterSet b = InitParams(spec);
  EXPECT_EQ(Flatten(a), Flatten(b));
  for (const auto& layer : a.layers) EXPECT_TRUE(layer.bias.isZero(0.0));
}

TEST(InitParams, LecunVariance) {
  const ParameterSet p = InitParams(Spec({100, 50, 2}, Activation::kRelu, Activation::kSoftmax, 3));
  const Matrix& w = p.layers[0].weight;
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / static_cast<double>(w.size() - 1);
  EXPECT_NEAR(var, 1.0 / 100.0, 0.2 / 100.0);
}

TEST(Forward, SoftmaxRowsSumToOne) {
  const MlpSpec spec = Spec({5, 7, 6, 3}, Activation::kGelu, Activation::kSoftmax);
  const Matrix out = Predict(InitParams(spec), spec, RandomMatrix(40, 5, 2, 4.0));
  for (Index i = 0; i < out.rows(); ++i) {
    EXPECT_NEAR(out.row(i).sum(), 1.0, 1e-6);
    EXPECT_GE(out.row(i).minCoeff(), 0.0);
    EXPECT_LE(out.row(i).maxCoeff(), 1.0);
  }
}

TEST(Forward, ZeroNetworkIsUniform) {
  const MlpSpec spec = Spec({3, 4, 4}, Activation::kRelu, Activation::kSoftmax);
  const ParameterSet zero = ParameterSet::Zeros(spec);
  const Matrix out = Predict(zero, spec, RandomMatrix(5, 3, 3));
  EXPECT_TRUE(out.isApproxToConstant(0.25, 1e-15));
}

TEST(Forward, LinearLayerMatchesLoopOracle) {
  const MlpSpec spec = Spec({3, 4, 2}, Activation::kRelu, Activation::kLinear);
  ParameterSet p = InitParams(spec);
  p.layers[0].weight = Matrix::Identity(3, 4);
  p.layers[0].bias << 0.5, -0.25, 0.0, 1.0;
  p.layers[1].weight = RandomMatrix(4, 2, 5);
  p.layers[1].bias << 0.1, -0.2;
  Matrix x(2, 3);
  x << 1.0, -2.0, 3.0, 0.5, 0.25, -1.0;
  Matrix hidden = testing::LoopAffine(x, p.layers[0].weight, p.layers[0].bias);
  hidden = hidden.cwiseMax(0.0);
  const Matrix expected = testing::LoopAffine(hidden, p.layers[1].weight, p.layers[1].bias);
  EXPECT_TRUE(Predict(p, spec, x).isApprox(expected, 1e-14));
}

TEST(Forward, ShapeMismatchThrows) {
  const MlpSpec spec = Spec({3, 4, 2}, Activation::kRelu, Activation::kSoftmax);
  try {
    Predict(InitParams(spec), spec, Matrix::Zero(2, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

TEST(Forward, NonFiniteOutputThrowsNumeric) {
  const MlpSpec spec = Spec({2, 3, 1}, Activation::kRelu, Activation::kLinear);
  ParameterSet p = InitParams(spec);
  p.layers[0].weight(0, 0) = std::numeric_limits<double>::infinity();
  Matrix x(1, 2);
  x << 1.0, 1.0;
  try {
    Predict(p, spec, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(Forward, DropoutOnlyInTraining) {
  MlpSpec spec = Spec({4, 16, 16, 2}, Activation::kRelu, Activation::kSoftmax);
  spec.dropout_after_hidden = 0.5;
  const ParameterSet p = InitParams(spec);
  const Matrix x = RandomMatrix(8, 4, 11);
  EXPECT_EQ(Predict(p, spec, x), Predict(p, spec, x));
  Rng rng(1);
  ForwardOptions train;
  train.training = true;
  train.dropout_rng = &rng;
  const ForwardResult r = Forward(p, spec, x, train);
  EXPECT_NE(r.outputs, Predict(p, spec, x));
  // Inverted dropout: kept units are scaled by 1 / (1 - rate).
  for (const auto& mask : r.cache.dropout_masks) {
    for (Index i = 0; i < mask.size(); ++i) {
      const double m = mask.data()[i];
      EXPECT_TRUE(m == 0.0 || std::fabs(m - 2.0) < 1e-15);
    }
  }
}

TEST(Backward, PerExampleAveragesToBatch) {
  const MlpSpec spec = Spec({3, 5, 4, 2}, Activation::kGelu, Activation::kSoftmax);
  const ParameterSet p = InitParams(spec);
  const Matrix x = RandomMatrix(6, 3, 4);
  const ForwardResult fwd = Forward(p, spec, x);
  const std::vector<int> y = {0, 1, 1, 0, 1, 0};
  Matrix g;
  CrossEntropy(fwd.outputs, y, &g);
  const ParameterSet batch = Backward(p, spec, fwd.cache, g).batch;
  BackwardOptions per;
  per.mode = GradientMode::kPerExample;
  const auto examples = Backward(p, spec, fwd.cache, g, per).per_example;
  ASSERT_EQ(examples.size(), 6u);
  ParameterSet mean = ParameterSet::ZerosLike(p);
  for (const auto& e : examples) mean.AddScaled(e, 1.0 / 6.0);
  EXPECT_LE((Flatten(mean) - Flatten(batch)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Backward, StaleCacheIsContractError) {
  const MlpSpec spec = Spec({2, 3, 2}, Activation::kRelu, Activation::kSoftmax);
  ParameterSet p = InitParams(spec);
  const ForwardResult fwd = Forward(p, spec, RandomMatrix(2, 2, 1));
  p.layers[0].weight(0, 0) += 1.0;
  try {
    Backward(p, spec, fwd.cache, Matrix::Ones(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContract);
  }
}

TEST(Backward, GeluDerivativeAtZero) {
  EXPECT_DOUBLE_EQ(GeluDerivative(0.0), 0.5);
  EXPECT_DOUBLE_EQ(Gelu(0.0), 0.0);
  for (double z : {-2.0, -0.3, 0.7, 3.1}) {
    const double h = 1e-6;
    EXPECT_NEAR(GeluDerivative(z), (Gelu(z + h) - Gelu(z - h)) / (2 * h), 1e-8);
  }
}

TEST(GradientCheck, CrossEntropySoftmaxGelu) {
  const std::vector<int> y = {0, 1, 1, 0, 1};
  ExpectGradientMatches(Spec({4, 6, 5, 2}, Activation::kGelu, Activation::kSoftmax),
                        RandomMatrix(5, 4, 21),
                        [&](const Matrix& out, Matrix* g) { return CrossEntropy(out, y, g); });
}

TEST(GradientCheck, CrossEntropySoftmaxReluThreeClasses) {
  const std::vector<int> y = {2, 1, 0, 2};
  ExpectGradientMatches(Spec({3, 8, 3}, Activation::kRelu, Activation::kSoftmax, 5),
                        RandomMatrix(4, 3, 22),
                        [&](const Matrix& out, Matrix* g) { return CrossEntropy(out, y, g); });
}

TEST(GradientCheck, MseLinear) {
  const Matrix target = RandomMatrix(5, 3, 23);
  ExpectGradientMatches(Spec({3, 7, 4, 3}, Activation::kRelu, Activation::kLinear, 6),
                        RandomMatrix(5, 3, 24),
                        [&](const Matrix& out, Matrix* g) { return MeanSquaredError(out, target, g); });
}

TEST(GradientCheck, SigmoidHead) {
  // Binary log-loss written directly against the sigmoid output.
  const std::vector<double> y = {1, 0, 1, 1, 0};
  ExpectGradientMatches(
      Spec({3, 6, 4, 1}, Activation::kGelu, Activation::kSigmoid, 7), RandomMatrix(5, 3, 25),
      [&](const Matrix& out, Matrix* g) {
        Vector l(out.rows());
        if (g != nullptr) g->resize(out.rows(), 1);
        for (Index i = 0; i < out.rows(); ++i) {
          const double p = out(i, 0);
          l[i] = -(y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p));
          if (g != nullptr) (*g)(i, 0) = -(y[i] / p) + (1 - y[i]) / (1 - p);
        }
        return l;
      });
}

TEST(GradientCheck, InputGradients) {
  const MlpSpec spec = Spec({4, 6, 2}, Activation::kGelu, Activation::kSoftmax, 8);
  const ParameterSet p = InitParams(spec);
  const Matrix x = RandomMatrix(1, 4, 26);
  const std::vector<int> y = {1};
  const ForwardResult fwd = Forward(p, spec, x);
  Matrix g;
  CrossEntropy(fwd.outputs, y, &g);
  BackwardOptions opts;
  opts.parameter_grads = false;
  opts.input_grads = true;
  const Vector analytic = Backward(p, spec, fwd.cache, g, opts).inputs.row(0).transpose();
  auto f = [&](const Vector& v) {
    return CrossEntropy(Predict(p, spec, v.transpose()), y)[0];
  };
  EXPECT_LE(RelativeError(analytic, NumericGradient(f, x.row(0).transpose())), 1e-5);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  const MlpSpec spec = Spec({3, 4, 2}, Activation::kRelu, Activation::kSoftmax);
  ParameterSet p = InitParams(spec);
  const Vector before = Flatten(p);
  AdamState s = InitAdamState(p);
  for (int i = 0; i < 10; ++i) AdamStep(&p, &s, ParameterSet::ZerosLike(p), {});
  EXPECT_EQ(Flatten(p), before);
}

TEST(Adam, QuadraticMatchesScalarRecurrence) {
  MlpSpec spec = Spec({1, 1, 1}, Activation::kRelu, Activation::kLinear);
  ParameterSet p = ParameterSet::Zeros(spec);
  AdamState s = InitAdamState(p);
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  for (int i = 0; i < 500; ++i) {
    ParameterSet g = ParameterSet::ZerosLike(p);
    g.layers[0].bias[0] = 2.0 * (p.layers[0].bias[0] - 3.0);
    AdamStep(&p, &s, g, cfg);
  }
  const double oracle =
      testing::ScalarAdam([](double w) { return 2.0 * (w - 3.0); }, 0.0, 0.1, 500);
  EXPECT_NEAR(p.layers[0].bias[0], 3.0, 1e-3);
  EXPECT_NEAR(p.layers[0].bias[0], oracle, 1e-12);
}

TEST(Adam, NonFiniteGradientIsNumericError) {
  const MlpSpec spec = Spec({2, 2, 2}, Activation::kRelu, Activation::kSoftmax);
  ParameterSet p = InitParams(spec);
  const Vector before = Flatten(p);
  AdamState s = InitAdamState(p);
  ParameterSet g = ParameterSet::ZerosLike(p);
  g.layers[1].bias[0] = std::nan("");
  try {
    AdamStep(&p, &s, g, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  EXPECT_EQ(Flatten(p), before);
  EXPECT_EQ(s.step, 0);
}

Dataset ToySet() {
  Dataset ds;
  ds.features = RandomMatrix(20, 2, 31);
  for (Index i = 0; i < 20; ++i) {
    ds.features(i, 0) += i % 2 == 0 ? 3.0 : -3.0;
    ds.labels.push_back(i % 2 == 0 ? 1 : 0);
  }
  return ds;
}

TEST(TrainClassifier, MemorizesSeparableToySet) {
  const Dataset ds = ToySet();
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.early_stop_patience = 0;
  cfg.validation_fraction = 0.0;
  const TrainedModel m =
      TrainClassifier(Spec({2, 8, 2}, Activation::kRelu, Activation::kSoftmax), ds, cfg);
  const auto pred = m.PredictClasses(ds.features);
  for (size_t i = 0; i < pred.size(); ++i) EXPECT_EQ(pred[i], ds.labels[i]);
}

TEST(TrainClassifier, ZeroEpochsReturnsInit) {
  TrainConfig cfg;
  cfg.epochs = 0;
  const MlpSpec spec = Spec({2, 4, 2}, Activation::kRelu, Activation::kSoftmax);
  const TrainedModel m = TrainClassifier(spec, ToySet(), cfg);
  EXPECT_EQ(Flatten(m.params), Flatten(InitParams(spec)));
}

TEST(TrainClassifier, DeterministicUnderSeed) {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 4;
  const MlpSpec spec = Spec({2, 4, 2}, Activation::kGelu, Activation::kSoftmax);
  const TrainedModel a = TrainClassifier(spec, ToySet(), cfg);
  const TrainedModel b = TrainClassifier(spec, ToySet(), cfg);
  EXPECT_EQ(Flatten(a.params), Flatten(b.params));
}

TEST(TrainClassifier, SingleClassIsDataError) {
  Dataset ds = ToySet();
  std::fill(ds.labels.begin(), ds.labels.end(), 0);
  try {
    TrainClassifier(Spec({2, 4, 2}, Activation::kRelu, Activation::kSoftmax), ds, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kData);
  }
}

TEST(FitNetwork, NonFiniteLossReportsEpoch) {
  const MlpSpec spec = Spec({2, 3, 1}, Activation::kRelu, Activation::kLinear);
  ParameterSet p = InitParams(spec);
  TrainConfig cfg;
  cfg.epochs = 5;
  int calls = 0;
  BatchObjective obj = [&](const Matrix& out, std::span<const Index>, Matrix* g) {
    g->setZero(out.rows(), out.cols());
    return ++calls > 3 ? std::nan("") : 0.0;
  };
  try {
    FitNetwork(spec, &p, RandomMatrix(64, 2, 1), obj, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraining);
    EXPECT_NE(std::string(e.what()).find("epoch 3"), std::string::npos);
  }
}

TEST(MlpSpec, ValidateRejectsBadShapes) {
  auto code = [](const MlpSpec& s) {
    try {
      s.Validate();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInput;
  };
  EXPECT_EQ(code(Spec({3, 2}, Activation::kRelu, Activation::kSoftmax)), ErrorCode::kConfiguration);
  EXPECT_EQ(code(Spec({3, 4, 1}, Activation::kRelu, Activation::kSoftmax)), ErrorCode::kConfiguration);
  EXPECT_EQ(code(Spec({3, 4, 1}, Activation::kSoftmax, Activation::kLinear)), ErrorCode::kConfiguration);
}

}  // namespace
}  // namespace cfmea
