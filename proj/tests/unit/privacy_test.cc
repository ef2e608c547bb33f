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

#include "cfmea/privacy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfmea/error.h"

namespace cfmea {
namespace {

MlpSpec SmallSpec() {
  MlpSpec s;
  s.layer_sizes = {3, 4, 2};
  s.hidden_activation = Activation::kRelu;
  s.output_activation = Activation::kSoftmax;
  s.seed = 4;
  return s;
}

ParameterSet RandomGrad(uint64_t seed, double scale) {
  ParameterSet g = ParameterSet::Zeros(SmallSpec());
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Vector flat(static_cast<Index>(g.size()));
  for (Index i = 0; i < flat.size(); ++i) flat[i] = n(rng);
  Unflatten(flat, &g);
  return g;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInput;
}

TEST(ClipPerExample, BoundsEveryNorm) {
  std::vector<ParameterSet> grads;
  for (uint64_t s = 0; s < 20; ++s) grads.push_back(RandomGrad(s, 0.05 * static_cast<double>(s + 1)));
  const auto clipped = ClipPerExample(grads, 1.0);
  for (size_t i = 0; i < grads.size(); ++i) {
    const double before = GlobalNorm(grads[i]);
    const double after = GlobalNorm(clipped[i]);
    EXPECT_LE(after, 1.0 + 1e-12);
    if (before <= 1.0) {
      EXPECT_EQ(Flatten(clipped[i]), Flatten(grads[i]));
    } else {
      EXPECT_NEAR(after, 1.0, 1e-12);
      // Direction is preserved.
      EXPECT_NEAR(Flatten(clipped[i]).dot(Flatten(grads[i])), before, 1e-9);
    }
  }
}

TEST(ClipPerExample, NormFourScaledByQuarter) {
  ParameterSet g = RandomGrad(9, 1.0);
  g.Scale(4.0 / GlobalNorm(g));
  std::vector<ParameterSet> one = {g};
  const ParameterSet c = ClipPerExample(one, 1.0)[0];
  EXPECT_NEAR(GlobalNorm(c), 1.0, 1e-12);
  EXPECT_LE((Flatten(c) - 0.25 * Flatten(g)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ClippedSum, SensitivityBoundedByTwiceClip) {
  DpConfig dp;
  for (uint64_t trial = 0; trial < 50; ++trial) {
    std::vector<ParameterSet> a;
    for (uint64_t s = 0; s < 6; ++s) a.push_back(RandomGrad(trial * 100 + s, 3.0));
    std::vector<ParameterSet> b = a;
    b[trial % 6] = RandomGrad(trial * 100 + 50, 10.0);
    const double diff = (Flatten(ClippedSum(a, dp)) - Flatten(ClippedSum(b, dp))).norm();
    EXPECT_LE(diff, 2.0 * dp.l2_norm_clip + 1e-12);
  }
}

TEST(ClipPerExample, RejectsNonPositiveClip) {
  std::vector<ParameterSet> grads = {RandomGrad(1, 1.0)};
  EXPECT_EQ(CodeOf([&] { ClipPerExample(grads, 0.0); }), ErrorCode::kConfiguration);
}

TEST(DpConfig, Validate) {
  DpConfig dp;
  dp.l2_norm_clip = -1.0;
  EXPECT_EQ(CodeOf([&] { dp.Validate(); }), ErrorCode::kConfiguration);
  dp = {};
  dp.noise_multiplier = -0.5;
  EXPECT_EQ(CodeOf([&] { dp.Validate(); }), ErrorCode::kConfiguration);
  dp = {};
  dp.microbatch_size = 0;
  EXPECT_EQ(CodeOf([&] { dp.Validate(); }), ErrorCode::kConfiguration);
  dp = {};
  dp.l2_norm_clip = DpConfig::kNoClip;
  dp.noise_multiplier = 0.0;
  dp.Validate();
}

TEST(PrivatizeGradients, NoiseFreeMatchesClippedMean) {
  std::vector<ParameterSet> grads;
  for (uint64_t s = 0; s < 8; ++s) grads.push_back(RandomGrad(s, 1.0));
  DpConfig dp;
  dp.noise_multiplier = 0.0;
  dp.l2_norm_clip = 0.5;
  Rng rng(0);
  const ParameterSet out = PrivatizeGradients(grads, dp, &rng);
  Vector expected = Vector::Zero(static_cast<Index>(grads[0].size()));
  for (const auto& g : ClipPerExample(grads, 0.5)) expected += Flatten(g);
  expected /= 8.0;
  EXPECT_LE((Flatten(out) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PrivatizeGradients, DegenerateIsPlainMean) {
  std::vector<ParameterSet> grads;
  for (uint64_t s = 0; s < 5; ++s) grads.push_back(RandomGrad(s, 100.0));
  DpConfig dp;
  dp.noise_multiplier = 0.0;
  dp.l2_norm_clip = DpConfig::kNoClip;
  Rng rng(0);
  Vector mean = Vector::Zero(static_cast<Index>(grads[0].size()));
  for (const auto& g : grads) mean += Flatten(g) / 5.0;
  EXPECT_LE((Flatten(PrivatizeGradients(grads, dp, &rng)) - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PrivatizeGradients, NoiseStdMatchesSigmaClipOverBatch) {
  // Zero gradients so the output is pure noise divided by the batch size.
  const ParameterSet zero = ParameterSet::Zeros(SmallSpec());
  std::vector<ParameterSet> grads(64, zero);
  DpConfig dp;  // sigma 3, clip 1
  Rng rng(77);
  double sum = 0.0, sq = 0.0;
  long count = 0;
  for (int rep = 0; rep < 400; ++rep) {
    const Vector v = Flatten(PrivatizeGradients(grads, dp, &rng));
    sum += v.sum();
    sq += v.squaredNorm();
    count += v.size();
  }
  const double mean = sum / static_cast<double>(count);
  const double std = std::sqrt(sq / static_cast<double>(count) - mean * mean);
  EXPECT_NEAR(std, 3.0 / 64.0, 0.03 * 3.0 / 64.0);
  EXPECT_NEAR(mean, 0.0, 0.003);
}

TEST(PrivatizeGradients, NoiseWithInfiniteClipIsConfigurationError) {
  std::vector<ParameterSet> grads = {RandomGrad(1, 1.0)};
  DpConfig dp;
  dp.l2_norm_clip = DpConfig::kNoClip;
  Rng rng(0);
  EXPECT_EQ(CodeOf([&] { PrivatizeGradients(grads, dp, &rng); }), ErrorCode::kConfiguration);
}

TEST(ClippedSum, EmptyIsContractError) {
  std::vector<ParameterSet> none;
  EXPECT_EQ(CodeOf([&] { ClippedSum(none, DpConfig{}); }), ErrorCode::kContract);
}

TEST(ClippedSum, MicrobatchesAverageThenClip) {
  std::vector<ParameterSet> grads;
  for (uint64_t s = 0; s < 5; ++s) grads.push_back(RandomGrad(s, 2.0));
  DpConfig dp;
  dp.microbatch_size = 2;
  int count = 0;
  const ParameterSet sum = ClippedSum(grads, dp, &count);
  EXPECT_EQ(count, 3);
  Vector expected = Vector::Zero(static_cast<Index>(grads[0].size()));
  for (size_t start = 0; start < 5; start += 2) {
    Vector m = Vector::Zero(expected.size());
    const size_t end = std::min<size_t>(5, start + 2);
    for (size_t i = start; i < end; ++i) m += Flatten(grads[i]);
    m /= static_cast<double>(end - start);
    if (m.norm() > 1.0) m /= m.norm();
    expected += m;
  }
  EXPECT_LE((Flatten(sum) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DpAdamStep, DegenerateEqualsPlainAdam) {
  ParameterSet a = InitParams(SmallSpec());
  ParameterSet b = a;
  DpConfig dp;
  dp.noise_multiplier = 0.0;
  dp.l2_norm_clip = DpConfig::kNoClip;
  DpAdamState dstate = InitDpAdamState(a, dp);
  AdamState astate = InitAdamState(b);
  for (int step = 0; step < 50; ++step) {
    std::vector<ParameterSet> grads;
    ParameterSet mean = ParameterSet::ZerosLike(b);
    for (uint64_t s = 0; s < 4; ++s) {
      grads.push_back(RandomGrad(step * 10 + s, 1.0));
      mean.AddScaled(grads.back(), 0.25);
    }
    DpAdamStep(&a, &dstate, grads, dp, {});
    AdamStep(&b, &astate, mean, {});
  }
  EXPECT_LE((Flatten(a) - Flatten(b)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DpAdamStep, SeededNoiseIsReproducible) {
  const ParameterSet init = InitParams(SmallSpec());
  DpConfig dp;
  dp.seed = 12;
  auto run = [&] {
    ParameterSet p = init;
    DpAdamState s = InitDpAdamState(p, dp);
    std::vector<ParameterSet> grads = {RandomGrad(1, 1.0), RandomGrad(2, 1.0)};
    for (int i = 0; i < 5; ++i) DpAdamStep(&p, &s, grads, dp, {});
    return Flatten(p);
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace cfmea
