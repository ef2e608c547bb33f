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

#ifndef CFMEA_EXPLAINER_H_
#define CFMEA_EXPLAINER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfmea/dataset.h"
#include "cfmea/nn.h"
#include "cfmea/privacy.h"

namespace cfmea {

// Residual GAN counterfactual explainer with the classifier in the loop.
//
// The discriminator ascends
//   sum_i C_t(x_i) log D(x_i) / sum_i C_t(x_i) + 1/N sum_i log(1 - D(x_i + G(x_i)))
// where C_t is the classifier's probability of the target class t. The
// generator descends
//   -log D(x + G(x)) + lambda_cls * CE(f(x + G(x)), t) + lambda_reg * |G(x)|_1
// averaged over the batch.
struct CounterGanConfig {
  std::vector<int> generator_hidden = {64, 48, 32};
  std::vector<int> discriminator_hidden = {32, 16};
  double dropout = 0.2;  // discriminator hidden layers
  int target_class = 1;
  double lambda_cls = 1.0;
  double lambda_reg = 0.1;
  int steps = 2000;
  int batch_size = 64;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  uint64_t seed = 0;
  // When set, every generator update goes through DP-Adam.
  std::optional<DpConfig> dp;

  void Validate() const;
};

struct GeneratorModel {
  TrainedModel model;  // linear head of width d: the residual G(x)
  int target_class = 1;
  bool dp = false;

  Matrix Residuals(const Matrix& inputs) const { return model.Predict(inputs); }
};

struct DiscriminatorModel {
  TrainedModel model;  // sigmoid head of width 1
};

// One generator per target class; dispatched on the classifier's argmax.
struct GeneratorPair {
  GeneratorModel to_class0;
  GeneratorModel to_class1;

  const GeneratorModel& ForTarget(int target_class) const {
    return target_class == 0 ? to_class0 : to_class1;
  }
  bool dp() const { return to_class0.dp && to_class1.dp; }
};

struct CfPair {
  Vector x;
  Vector c;
  RowVector fx;
  RowVector fc;
};

struct CfBatch {
  Matrix x;
  Matrix c;
  Matrix fx;
  Matrix fc;
  std::vector<int> target_class;
};

struct ValueTerms {
  // Absent when sum_i C_t(x_i) == 0 (degenerate batch; caller resamples).
  std::optional<double> d_real_term;
  double d_fake_term = 0.0;
};

// Discriminator terms of the value function on `batch`, inference mode.
ValueTerms CounterGanValue(const DiscriminatorModel& discriminator,
                           const GeneratorModel& generator,
                           const TrainedModel& classifier, const Matrix& batch,
                           int target_class);

struct DiscriminatorLoss {
  double loss = 0.0;
  bool real_term_used = false;
  ParameterSet grads;
};

// Negated value function for the discriminator. `real_weights` are the
// C_t(x_i). Dropout is active when options.training is set.
DiscriminatorLoss ComputeDiscriminatorLoss(const MlpSpec& spec,
                                           const ParameterSet& params,
                                           const Matrix& real,
                                           std::span<const double> real_weights,
                                           const Matrix& fake,
                                           const ForwardOptions& options = {});

struct GeneratorLoss {
  double loss = 0.0;  // batch mean
  Gradients grads;    // batch or per-example, per `mode`
};

// Composite generator objective. The discriminator and classifier run in
// inference mode and are not updated.
GeneratorLoss ComputeGeneratorLoss(const MlpSpec& spec,
                                   const ParameterSet& params,
                                   const TrainedModel& discriminator,
                                   const TrainedModel& classifier,
                                   const Matrix& inputs, int target_class,
                                   double lambda_cls, double lambda_reg,
                                   GradientMode mode);

struct CounterGanReport {
  DiscriminatorModel discriminator;
  std::vector<double> generator_loss;      // per step
  std::vector<double> discriminator_loss;  // per step
  std::vector<std::string> warnings;
  int skipped_real_terms = 0;
};

GeneratorModel TrainCounterGan(const TrainedModel& classifier,
                               const Dataset& train,
                               const CounterGanConfig& config,
                               CounterGanReport* report = nullptr);

// Trains the class-0 and class-1 generators with seeds derived from
// config.seed; config.target_class is ignored.
GeneratorPair TrainGeneratorPair(const TrainedModel& classifier,
                                 const Dataset& train,
                                 const CounterGanConfig& config);

// c = x + G_t(x) with t = 1 - argmax f(x). No clipping of c.
CfPair GenerateCf(const GeneratorPair& generators,
                  const TrainedModel& classifier, const Vector& x);
CfBatch GenerateCfs(const GeneratorPair& generators,
                    const TrainedModel& classifier, const Matrix& inputs);

// Checkpoint with target_class and dp recorded in the metadata.
void SaveGenerator(const GeneratorModel& generator,
                   const std::filesystem::path& path);
GeneratorModel LoadGenerator(const std::filesystem::path& path);

}  // namespace cfmea

#endif  // CFMEA_EXPLAINER_H_
