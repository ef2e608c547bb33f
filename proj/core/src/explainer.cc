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

#include "cfmea/explainer.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "cfmea/checkpoint.h"
#include "cfmea/error.h"

namespace cfmea {
namespace {

constexpr int kMaxResamples = 10;
constexpr int kCollapseSteps = 50;
constexpr double kCollapseStd = 1e-6;

double SafeLog(double p) { return std::log(std::max(p, kProbFloor)); }

void CheckClassifier(const TrainedModel& classifier, int d) {
  if (classifier.spec.input_dim() != d || classifier.spec.output_dim() != 2) {
    Fail(ErrorCode::kShape, "classifier must map the data dimension to 2 classes");
  }
}

MlpSpec GeneratorSpec(int d, const CounterGanConfig& config, uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(d);
  spec.layer_sizes.insert(spec.layer_sizes.end(), config.generator_hidden.begin(),
                          config.generator_hidden.end());
  spec.layer_sizes.push_back(d);
  spec.hidden_activation = Activation::kRelu;
  spec.output_activation = Activation::kLinear;
  spec.seed = seed;
  return spec;
}

MlpSpec DiscriminatorSpec(int d, const CounterGanConfig& config, uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(d);
  spec.layer_sizes.insert(spec.layer_sizes.end(),
                          config.discriminator_hidden.begin(),
                          config.discriminator_hidden.end());
  spec.layer_sizes.push_back(1);
  spec.hidden_activation = Activation::kRelu;
  spec.output_activation = Activation::kSigmoid;
  spec.dropout_after_hidden = config.dropout;
  spec.seed = seed;
  return spec;
}

// Largest per-coordinate standard deviation of the residuals over the rows.
double ResidualSpread(const Matrix& residuals) {
  if (residuals.rows() < 2) return 0.0;
  const RowVector mean = residuals.colwise().mean();
  const RowVector var =
      (residuals.rowwise() - mean).array().square().colwise().sum() /
      static_cast<double>(residuals.rows() - 1);
  return std::sqrt(var.maxCoeff());
}

}  // namespace

void CounterGanConfig::Validate() const {
  auto positive = [](const std::vector<int>& v) {
    return std::all_of(v.begin(), v.end(), [](int w) { return w > 0; });
  };
  if (generator_hidden.empty() || !positive(generator_hidden) ||
      discriminator_hidden.empty() || !positive(discriminator_hidden)) {
    Fail(ErrorCode::kConfiguration, "explainer hidden widths must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    Fail(ErrorCode::kConfiguration, "dropout must be in [0, 1)");
  }
  if (target_class != 0 && target_class != 1) {
    Fail(ErrorCode::kConfiguration, "target_class must be 0 or 1");
  }
  if (!(lambda_cls > 0.0)) Fail(ErrorCode::kConfiguration, "lambda_cls must be positive");
  if (!(lambda_reg >= 0.0)) Fail(ErrorCode::kConfiguration, "lambda_reg must be >= 0");
  if (steps < 0) Fail(ErrorCode::kConfiguration, "steps must be >= 0");
  if (batch_size < 1) Fail(ErrorCode::kConfiguration, "batch_size must be >= 1");
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) {
    Fail(ErrorCode::kConfiguration, "learning rates must be positive");
  }
  if (dp) dp->Validate();
}

ValueTerms CounterGanValue(const DiscriminatorModel& discriminator,
                           const GeneratorModel& generator,
                           const TrainedModel& classifier, const Matrix& batch,
                           int target_class) {
  if (batch.rows() == 0) Fail(ErrorCode::kContract, "empty batch");
  const Matrix probs = classifier.Predict(batch);
  const Matrix d_real = discriminator.model.Predict(batch);
  const Matrix fake = batch + generator.Residuals(batch);
  const Matrix d_fake = discriminator.model.Predict(fake);
  ValueTerms out;
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (Index i = 0; i < batch.rows(); ++i) {
    const double w = probs(i, target_class);
    weight_sum += w;
    weighted += w * SafeLog(d_real(i, 0));
  }
  if (weight_sum > 0.0) out.d_real_term = weighted / weight_sum;
  double fake_sum = 0.0;
  for (Index i = 0; i < fake.rows(); ++i) fake_sum += SafeLog(1.0 - d_fake(i, 0));
  out.d_fake_term = fake_sum / static_cast<double>(fake.rows());
  return out;
}

DiscriminatorLoss ComputeDiscriminatorLoss(const MlpSpec& spec,
                                           const ParameterSet& params,
                                           const Matrix& real,
                                           std::span<const double> real_weights,
                                           const Matrix& fake,
                                           const ForwardOptions& options) {
  if (static_cast<Index>(real_weights.size()) != real.rows()) {
    Fail(ErrorCode::kShape, "one weight per real row is required");
  }
  if (fake.rows() == 0) Fail(ErrorCode::kContract, "empty fake batch");
  double weight_sum = 0.0;
  for (double w : real_weights) weight_sum += w;
  const bool use_real = real.rows() > 0 && weight_sum > 0.0;
  const Index n_real = use_real ? real.rows() : 0;
  const Index n_fake = fake.rows();
  const Index total = n_real + n_fake;

  Matrix stacked(total, fake.cols());
  if (use_real) stacked.topRows(n_real) = real;
  stacked.bottomRows(n_fake) = fake;
  ForwardOptions fwd = options;
  fwd.keep_cache = true;
  ForwardResult res = Forward(params, spec, stacked, fwd);

  // Backward averages over rows, so every row gradient carries a factor of
  // the stacked row count.
  DiscriminatorLoss out;
  out.real_term_used = use_real;
  Matrix grad(total, 1);
  double loss = 0.0;
  const double scale = static_cast<double>(total);
  for (Index i = 0; i < n_real; ++i) {
    const double d = res.outputs(i, 0);
    const double w = real_weights[static_cast<size_t>(i)] / weight_sum;
    loss -= w * SafeLog(d);
    grad(i, 0) = -scale * w * (1.0 - d);
  }
  for (Index j = 0; j < n_fake; ++j) {
    const double d = res.outputs(n_real + j, 0);
    loss -= SafeLog(1.0 - d) / static_cast<double>(n_fake);
    grad(n_real + j, 0) = scale * d / static_cast<double>(n_fake);
  }
  BackwardOptions bwd;
  bwd.grads_wrt_logits = true;
  out.grads = Backward(params, spec, res.cache, grad, bwd).batch;
  out.loss = loss;
  return out;
}

GeneratorLoss ComputeGeneratorLoss(const MlpSpec& spec,
                                   const ParameterSet& params,
                                   const TrainedModel& discriminator,
                                   const TrainedModel& classifier,
                                   const Matrix& inputs, int target_class,
                                   double lambda_cls, double lambda_reg,
                                   GradientMode mode) {
  const Index n = inputs.rows();
  if (n == 0) Fail(ErrorCode::kContract, "empty generator batch");
  ForwardResult g = Forward(params, spec, inputs);
  const Matrix& residual = g.outputs;
  const Matrix c = inputs + residual;

  ForwardResult d = Forward(discriminator.params, discriminator.spec, c);
  ForwardResult f = Forward(classifier.params, classifier.spec, c);

  Matrix d_grad(n, 1);
  Matrix f_grad = Matrix::Zero(n, classifier.spec.output_dim());
  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double dv = d.outputs(i, 0);
    const double pt = f.outputs(i, target_class);
    loss += -SafeLog(dv) - lambda_cls * SafeLog(pt) +
            lambda_reg * residual.row(i).cwiseAbs().sum();
    d_grad(i, 0) = -1.0 / std::max(dv, kProbFloor);
    f_grad(i, target_class) = -lambda_cls / std::max(pt, kProbFloor);
  }
  BackwardOptions input_only;
  input_only.parameter_grads = false;
  input_only.input_grads = true;
  const Matrix dc =
      Backward(discriminator.params, discriminator.spec, d.cache, d_grad, input_only)
          .inputs +
      Backward(classifier.params, classifier.spec, f.cache, f_grad, input_only).inputs;
  const Matrix dr = dc + lambda_reg * residual.unaryExpr([](double v) {
    return static_cast<double>((v > 0.0) - (v < 0.0));
  });

  BackwardOptions bwd;
  bwd.mode = mode;
  GeneratorLoss out;
  out.grads = Backward(params, spec, g.cache, dr, bwd);
  out.loss = loss / static_cast<double>(n);
  return out;
}

GeneratorModel TrainCounterGan(const TrainedModel& classifier,
                               const Dataset& train,
                               const CounterGanConfig& config,
                               CounterGanReport* report) {
  config.Validate();
  train.Validate();
  const int d = train.dim();
  CheckClassifier(classifier, d);
  const Index n = train.rows();
  const int t = config.target_class;

  const MlpSpec g_spec = GeneratorSpec(d, config, DeriveSeed(config.seed, "generator"));
  const MlpSpec d_spec =
      DiscriminatorSpec(d, config, DeriveSeed(config.seed, "discriminator"));
  ParameterSet g_params = InitParams(g_spec);
  ParameterSet d_params = InitParams(d_spec);
  AdamState d_state = InitAdamState(d_params);
  AdamState g_state = InitAdamState(g_params);
  std::optional<DpAdamState> dp_state;
  if (config.dp) dp_state = InitDpAdamState(g_params, *config.dp);
  const AdamConfig adam_d{config.lr_d, 0.9, 0.999, 1e-8};
  const AdamConfig adam_g{config.lr_g, 0.9, 0.999, 1e-8};

  Rng batch_rng = MakeRng(config.seed, "gan-batches");
  Rng dropout_rng = MakeRng(config.seed, "gan-dropout");
  std::uniform_int_distribution<Index> pick(0, n - 1);
  const Matrix class_probs = classifier.Predict(train.features);

  CounterGanReport local;
  CounterGanReport& rep = report != nullptr ? *report : local;
  rep = CounterGanReport();
  int collapsed_steps = 0;
  bool collapse_warned = false;

  std::vector<Index> rows(static_cast<size_t>(config.batch_size));
  std::vector<double> weights(rows.size());
  auto draw = [&] {
    double sum = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      rows[i] = pick(batch_rng);
      weights[i] = class_probs(rows[i], t);
      sum += weights[i];
    }
    return sum;
  };

  for (int step = 0; step < config.steps; ++step) {
    double weight_sum = draw();
    for (int r = 0; r < kMaxResamples && !(weight_sum > 0.0); ++r) weight_sum = draw();
    const bool real_ok = weight_sum > 0.0;
    if (!real_ok) ++rep.skipped_real_terms;
    const Matrix batch = GatherRows(train.features, rows);

    // Discriminator step, plain Adam with dropout active.
    const Matrix residual = Predict(g_params, g_spec, batch);
    const Matrix fake = batch + residual;
    ForwardOptions d_fwd;
    d_fwd.training = true;
    d_fwd.dropout_rng = &dropout_rng;
    DiscriminatorLoss dl = ComputeDiscriminatorLoss(
        d_spec, d_params, real_ok ? batch : Matrix(0, d),
        real_ok ? std::span<const double>(weights) : std::span<const double>(),
        fake, d_fwd);
    if (!std::isfinite(dl.loss)) {
      Fail(ErrorCode::kTraining,
           "discriminator loss became non-finite at step " + std::to_string(step));
    }
    try {
      AdamStep(&d_params, &d_state, dl.grads, adam_d);
    } catch (const Error& e) {
      Fail(ErrorCode::kTraining,
           std::string(e.what()) + " at step " + std::to_string(step));
    }

    // Generator step against the discriminator in inference mode.
    TrainedModel disc{d_spec, d_params, std::nullopt, {}};
    GeneratorLoss gl = ComputeGeneratorLoss(
        g_spec, g_params, disc, classifier, batch, t, config.lambda_cls,
        config.lambda_reg,
        config.dp ? GradientMode::kPerExample : GradientMode::kBatch);
    if (!std::isfinite(gl.loss)) {
      Fail(ErrorCode::kTraining,
           "generator loss became non-finite at step " + std::to_string(step));
    }
    try {
      if (config.dp) {
        DpAdamStep(&g_params, &*dp_state, gl.grads.per_example, *config.dp, adam_g);
      } else {
        AdamStep(&g_params, &g_state, gl.grads.batch, adam_g);
      }
    } catch (const Error& e) {
      Fail(ErrorCode::kTraining,
           std::string(e.what()) + " at step " + std::to_string(step));
    }
    rep.discriminator_loss.push_back(dl.loss);
    rep.generator_loss.push_back(gl.loss);

    if (ResidualSpread(residual) < kCollapseStd) {
      if (++collapsed_steps >= kCollapseSteps && !collapse_warned) {
        rep.warnings.push_back("generator residuals collapsed at step " +
                               std::to_string(step));
        collapse_warned = true;
      }
    } else {
      collapsed_steps = 0;
    }
  }

  rep.discriminator.model = TrainedModel{d_spec, d_params, std::nullopt,
                                         {{"role", "discriminator"}}};
  GeneratorModel out;
  out.model.spec = g_spec;
  out.model.params = std::move(g_params);
  out.model.metadata = {{"role", "generator"},
                        {"target_class", std::to_string(t)},
                        {"dp", config.dp ? "true" : "false"}};
  out.target_class = t;
  out.dp = config.dp.has_value();
  return out;
}

GeneratorPair TrainGeneratorPair(const TrainedModel& classifier,
                                 const Dataset& train,
                                 const CounterGanConfig& config) {
  CounterGanConfig c0 = config;
  c0.target_class = 0;
  c0.seed = DeriveSeed(config.seed, "generator-class-0");
  CounterGanConfig c1 = config;
  c1.target_class = 1;
  c1.seed = DeriveSeed(config.seed, "generator-class-1");
  if (config.dp) {
    c0.dp->seed = DeriveSeed(config.dp->seed, "class-0");
    c1.dp->seed = DeriveSeed(config.dp->seed, "class-1");
  }
  return {TrainCounterGan(classifier, train, c0), TrainCounterGan(classifier, train, c1)};
}

CfBatch GenerateCfs(const GeneratorPair& generators,
                    const TrainedModel& classifier, const Matrix& inputs) {
  CheckClassifier(classifier, static_cast<int>(inputs.cols()));
  CfBatch out;
  out.x = inputs;
  out.fx = classifier.Predict(inputs);
  out.c = inputs;
  out.target_class.resize(static_cast<size_t>(inputs.rows()));
  std::vector<Index> rows[2];
  for (Index i = 0; i < inputs.rows(); ++i) {
    const int t = 1 - Argmax(out.fx.row(i));
    out.target_class[static_cast<size_t>(i)] = t;
    rows[t].push_back(i);
  }
  for (int t = 0; t < 2; ++t) {
    if (rows[t].empty()) continue;
    const GeneratorModel& g = generators.ForTarget(t);
    if (g.model.spec.input_dim() != inputs.cols() ||
        g.model.spec.output_dim() != inputs.cols()) {
      Fail(ErrorCode::kShape, "generator dimension does not match the inputs");
    }
    const Matrix sub = GatherRows(inputs, rows[t]);
    const Matrix res = g.Residuals(sub);
    for (size_t k = 0; k < rows[t].size(); ++k) {
      out.c.row(rows[t][k]) = sub.row(static_cast<Index>(k)) + res.row(static_cast<Index>(k));
    }
  }
  out.fc = classifier.Predict(out.c);
  return out;
}

CfPair GenerateCf(const GeneratorPair& generators,
                  const TrainedModel& classifier, const Vector& x) {
  Matrix m = x.transpose();
  CfBatch b = GenerateCfs(generators, classifier, m);
  return {x, b.c.row(0).transpose(), b.fx.row(0), b.fc.row(0)};
}

void SaveGenerator(const GeneratorModel& generator,
                   const std::filesystem::path& path) {
  TrainedModel m = generator.model;
  m.metadata["role"] = "generator";
  m.metadata["target_class"] = std::to_string(generator.target_class);
  m.metadata["dp"] = generator.dp ? "true" : "false";
  SaveCheckpoint(m, path);
}

GeneratorModel LoadGenerator(const std::filesystem::path& path) {
  GeneratorModel g;
  g.model = LoadCheckpoint(path);
  auto it = g.model.metadata.find("target_class");
  auto dp = g.model.metadata.find("dp");
  if (it == g.model.metadata.end() || dp == g.model.metadata.end() ||
      (it->second != "0" && it->second != "1")) {
    Fail(ErrorCode::kInput, "checkpoint is not a generator: " + path.string());
  }
  if (g.model.spec.input_dim() != g.model.spec.output_dim()) {
    Fail(ErrorCode::kInput, "generator output width must equal its input width");
  }
  g.target_class = it->second == "1" ? 1 : 0;
  g.dp = dp->second == "true";
  return g;
}

}  // namespace cfmea
