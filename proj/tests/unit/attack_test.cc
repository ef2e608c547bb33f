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

#include "cfmea/attack.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cfmea/error.h"
#include "cfmea/metrics.h"
#include "cfmea/models.h"
#include "testing/oracles.h"

namespace cfmea {
namespace {

// Frozen from the scalar-loop oracle in testing/oracles.cc.
constexpr double kJsOneHotVsUniform = 0.21576155433883565;
constexpr double kKdAlpha03Example = 0.083853145141082858;

RowVector Row(double a, double b) {
  RowVector r(2);
  r << a, b;
  return r;
}

std::span<const double> S(const RowVector& r) { return {r.data(), static_cast<size_t>(r.size())}; }

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInput;
}

TEST(JsDivergence, Examples) {
  const RowVector p = Row(1, 0), q = Row(0.5, 0.5), r = Row(0, 1);
  EXPECT_NEAR(JsDivergence(S(p), S(q)), testing::ScalarJs({1, 0}, {0.5, 0.5}), 1e-15);
  EXPECT_NEAR(JsDivergence(S(p), S(q)), kJsOneHotVsUniform, 1e-15);
  EXPECT_NEAR(JsDivergence(S(p), S(r)), std::log(2.0), 1e-12);
  EXPECT_EQ(JsDivergence(S(q), S(q)), 0.0);
}

TEST(JsDivergence, PropertiesOnRandomPairs) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng);
    const RowVector p = Row(a, 1 - a), q = Row(b, 1 - b);
    const double pq = JsDivergence(S(p), S(q));
    EXPECT_LE(std::fabs(pq - JsDivergence(S(q), S(p))), 1e-12);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, std::log(2.0) + 1e-12);
    EXPECT_LE(JsDivergence(S(p), S(p)), 1e-12);
  }
}

TEST(JsDivergence, MatchesOracleOnThreeClasses) {
  RowVector p(3), q(3);
  p << 0.2, 0.5, 0.3;
  q << 0.6, 0.0, 0.4;
  EXPECT_NEAR(JsDivergence(S(p), S(q)), testing::ScalarJs({0.2, 0.5, 0.3}, {0.6, 0.0, 0.4}),
              1e-15);
  EXPECT_NEAR(KlDivergence(S(p), S(p)), 0.0, 1e-15);
  EXPECT_NEAR(KlDivergence(S(q), S(p)), testing::ScalarKl({0.6, 0.0, 0.4}, {0.2, 0.5, 0.3}),
              1e-15);
}

TEST(JsDivergence, LengthMismatchIsShapeError) {
  RowVector p(3);
  p << 0.2, 0.5, 0.3;
  EXPECT_EQ(CodeOf([&] { JsDivergence(S(p), S(Row(0.5, 0.5))); }), ErrorCode::kShape);
}

TEST(KdLoss, Examples) {
  const RowVector student = Row(0.8, 0.2), teacher = Row(0.6, 0.4);
  const double oracle = 0.3 * -std::log(0.8) + 0.7 * testing::ScalarJs({0.6, 0.4}, {0.8, 0.2});
  EXPECT_NEAR(KdLoss(student, teacher, 0, 0.3, 1.0), oracle, 1e-15);
  EXPECT_NEAR(KdLoss(student, teacher, 0, 0.3, 1.0), kKdAlpha03Example, 1e-15);
  EXPECT_DOUBLE_EQ(KdLoss(student, teacher, 1, 1.0, 1.0), -std::log(0.2));
  EXPECT_EQ(KdLoss(teacher, teacher, 0, 0.0, 1.0), 0.0);
}

TEST(KdLoss, LogitGradientMatchesFiniteDifference) {
  Rng rng(11);
  std::normal_distribution<double> n(0.0, 1.5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  auto softmax = [](const Vector& z) {
    RowVector e = (z.array() - z.maxCoeff()).exp().matrix().transpose();
    return RowVector(e / e.sum());
  };
  for (double alpha : {0.0, 0.3, 1.0}) {
    for (double temp : {1.0, 2.5}) {
      for (Divergence div : {Divergence::kJensenShannon, Divergence::kKullbackLeibler}) {
        Vector z(2);
        z << n(rng), n(rng);
        const double t0 = u(rng);
        const RowVector teacher = Row(t0, 1 - t0);
        RowVector g;
        KdLoss(softmax(z), teacher, 1, alpha, temp, div, &g);
        auto f = [&](const Vector& v) { return KdLoss(softmax(v), teacher, 1, alpha, temp, div); };
        EXPECT_LE(testing::RelativeError(g.transpose(), testing::NumericGradient(f, z)), 1e-5)
            << "alpha " << alpha << " T " << temp;
      }
    }
  }
}

TEST(Soften, IdentityAtUnitTemperatureAndFlattensAbove) {
  const RowVector p = Row(0.9, 0.1);
  EXPECT_EQ(Soften(p, 1.0), p);
  const RowVector s = Soften(p, 3.0);
  EXPECT_NEAR(s.sum(), 1.0, 1e-15);
  EXPECT_LT(s[0], 0.9);
  EXPECT_GT(s[0], 0.5);
  EXPECT_EQ(CodeOf([&] { Soften(p, 0.0); }), ErrorCode::kConfiguration);
}

TEST(KdConfig, Validate) {
  KdConfig k;
  k.alpha = 1.5;
  EXPECT_EQ(CodeOf([&] { k.Validate(); }), ErrorCode::kConfiguration);
  k = {};
  k.alpha_sweep.clear();
  EXPECT_EQ(CodeOf([&] { k.Validate(); }), ErrorCode::kConfiguration);
  k = {};
  k.temperature = -1.0;
  EXPECT_EQ(CodeOf([&] { k.Validate(); }), ErrorCode::kConfiguration);
}

QueryResponse Response(RowVector pred, std::optional<Vector> cf = std::nullopt,
                       std::optional<RowVector> cf_pred = std::nullopt) {
  return {std::move(pred), std::move(cf), std::move(cf_pred)};
}

TEST(AttackDataset, BuilderRowsAndProvenance) {
  AttackDataset::Builder b(2);
  Vector x(2), c(2);
  x << 1, 2;
  c << 3, 4;
  b.Add(x, Response(Row(0.7, 0.3)));
  b.Add(x, Response(Row(0.7, 0.3), c, Row(0.2, 0.8)));
  b.Add(x, Response(Row(0.4, 0.6), c));
  const AttackDataset d = std::move(b).Build();
  ASSERT_EQ(d.rows(), 5);
  EXPECT_EQ(d.CountProvenance(Provenance::kQuery), 3);
  EXPECT_EQ(d.CountProvenance(Provenance::kCounterfactual), 2);
  EXPECT_EQ(d.hard_labels(), (std::vector<int>{0, 0, 1, 1, 0}));
  // Without f(c) the counterfactual row is one-hot on the flipped class.
  EXPECT_EQ(d.soft_labels().row(4), Row(1.0, 0.0));
  EXPECT_EQ(d.inputs().row(2), c.transpose());
  EXPECT_EQ(d.inputs().row(3), x.transpose());
}

TEST(AttackDataset, RejectsInvalidDistribution) {
  AttackDataset::Builder b(1);
  Vector x(1);
  x << 0;
  EXPECT_THROW(b.Add(x, Response(Row(0.7, 0.7))), Error);
}

TEST(AttackDataset, CsvRoundTrip) {
  AttackDataset::Builder b(2);
  Vector x(2), c(2);
  x << 0.1, -1.0 / 3.0;
  c << 1e-9, 2.5;
  b.Add(x, Response(Row(0.25, 0.75), c, Row(0.9, 0.1)));
  const AttackDataset d = std::move(b).Build();
  const auto path = std::filesystem::temp_directory_path() / "cfmea_attack_ds.csv";
  d.Save(path);
  const AttackDataset r = AttackDataset::Load(path);
  EXPECT_EQ(r.inputs(), d.inputs());
  EXPECT_EQ(r.soft_labels(), d.soft_labels());
  EXPECT_EQ(r.provenance(), d.provenance());
  std::filesystem::remove(path);
}

class AttackFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new Dataset(MakeSynthetic(600, 4, 3.0, 21));
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 32;
    cfg.learning_rate = 3e-3;
    target_ = new TrainedModel(TrainClassifier(BuildThreatSpec(4, 1), *data_, cfg));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete target_;
  }

  static TrainConfig FastConfig() {
    TrainConfig c = DefaultAttackTrainConfig();
    c.epochs = 40;
    c.batch_size = 16;
    c.seed = 5;
    return c;
  }

  static AttackDataset Corpus(Index budget) {
    Service s = Service::Deploy(*target_, std::nullopt, {});
    return Collect(s, data_->features, budget);
  }

  static Dataset* data_;
  static TrainedModel* target_;
};

Dataset* AttackFixture::data_ = nullptr;
TrainedModel* AttackFixture::target_ = nullptr;

TEST_F(AttackFixture, CollectIssuesExactlyBudgetQueries) {
  Service s = Service::Deploy(*target_, std::nullopt, {});
  const AttackDataset d = Collect(s, data_->features, 50);
  EXPECT_EQ(d.rows(), 50);
  EXPECT_EQ(s.total_queries(), 50);
  EXPECT_EQ(d.CountProvenance(Provenance::kQuery), 50);
  EXPECT_TRUE(Collect(s, data_->features, 0).empty());
  EXPECT_EQ(CodeOf([&] { Collect(s, data_->features.topRows(3), 4); }), ErrorCode::kContract);
}

TEST_F(AttackFixture, CollectInCfModeDoublesRows) {
  GeneratorPair pair;
  for (int t = 0; t < 2; ++t) {
    GeneratorModel g;
    g.model.spec.layer_sizes = {4, 4, 4};
    g.model.spec.output_activation = Activation::kLinear;
    g.model.params = InitParams(g.model.spec);
    g.target_class = t;
    (t == 0 ? pair.to_class0 : pair.to_class1) = g;
  }
  Service s = Service::Deploy(*target_, pair, {ExplanationMode::kCf});
  const AttackDataset d = Collect(s, data_->features, 50);
  EXPECT_EQ(d.rows(), 100);
  EXPECT_EQ(d.CountProvenance(Provenance::kCounterfactual), 50);
  EXPECT_EQ(s.total_queries(), 50);
}

TEST_F(AttackFixture, DirectEqualsKdAtAlphaOne) {
  const AttackDataset d = Corpus(120);
  KdConfig kd;
  kd.alpha = 1.0;
  const TrainedModel a = DirectTrain(d, BuildThreatSpec(4, 7), FastConfig());
  const TrainedModel b = KdTrain(d, BuildThreatSpec(4, 7), kd, FastConfig());
  EXPECT_EQ(Flatten(a.params), Flatten(b.params));
  EXPECT_EQ(Flatten(a.params), Flatten(DirectTrain(d, BuildThreatSpec(4, 7), FastConfig()).params));
}

TEST_F(AttackFixture, PerfectKnowledgeAttackerAgrees) {
  AttackDataset::Builder b(4);
  const Matrix probs = target_->Predict(data_->features);
  for (Index i = 0; i < data_->rows(); ++i) {
    RowVector onehot = RowVector::Zero(2);
    onehot[data_->labels[static_cast<size_t>(i)]] = 1.0;
    b.Add(data_->features.row(i).transpose(), Response(onehot));
  }
  const TrainedModel m = DirectTrain(std::move(b).Build(), BuildThreatSpec(4, 3), FastConfig());
  EXPECT_GT(Agreement(m, *target_, data_->features), 0.95);
}

TEST_F(AttackFixture, EmptyCorpusIsContractError) {
  EXPECT_EQ(CodeOf([&] { DirectTrain(AttackDataset(), BuildThreatSpec(4), FastConfig()); }),
            ErrorCode::kContract);
}

TEST_F(AttackFixture, JsToOneHotLossDecreasesOnSeparableSet) {
  AttackDataset::Builder b(4);
  for (Index i = 0; i < 64; ++i) {
    RowVector onehot = RowVector::Zero(2);
    onehot[data_->labels[static_cast<size_t>(i)]] = 1.0;
    b.Add(data_->features.row(i).transpose(), Response(onehot));
  }
  TrainConfig cfg = FastConfig();
  cfg.early_stop_patience = 0;
  cfg.batch_size = 64;
  cfg.epochs = 50;
  KdConfig kd;
  kd.alpha = 0.0;
  FitReport report;
  KdTrain(std::move(b).Build(), BuildThreatSpec(4, 2), kd, cfg, &report);
  ASSERT_EQ(report.epoch_loss.size(), 50u);
  for (size_t e = 1; e < report.epoch_loss.size(); ++e) {
    EXPECT_LE(report.epoch_loss[e], report.epoch_loss[e - 1] + 1e-12) << "epoch " << e;
  }
}

TEST_F(AttackFixture, SweepReturnsArgmaxWithSmallestTie) {
  const AttackDataset d = Corpus(80);
  KdConfig kd;
  kd.alpha_sweep = {0.3, 0.0, 0.1};
  const SweepResult r =
      SweepAlpha(d, BuildThreatSpec(4, 1), kd, FastConfig(), data_->features, *target_);
  ASSERT_EQ(r.agreements.size(), 3u);
  const double best = *std::max_element(r.agreements.begin(), r.agreements.end());
  double smallest = 1.0;
  for (size_t i = 0; i < 3; ++i) {
    if (r.agreements[i] == best) smallest = std::min(smallest, kd.alpha_sweep[i]);
  }
  EXPECT_EQ(r.best_alpha, smallest);
  EXPECT_EQ(Agreement(r.best_model, *target_, data_->features), best);

  kd.alpha_sweep = {0.2};
  EXPECT_EQ(SweepAlpha(d, BuildThreatSpec(4, 1), kd, FastConfig(), data_->features, *target_)
                .best_alpha,
            0.2);
}

}  // namespace
}  // namespace cfmea
