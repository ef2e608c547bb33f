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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cfmea/error.h"

namespace cfmea {

std::string_view ActivationName(Activation a) {
  switch (a) {
    case Activation::kGelu: return "gelu";
    case Activation::kRelu: return "relu";
    case Activation::kSoftmax: return "softmax";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
  }
  return "unknown";
}

Activation ParseActivation(std::string_view name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "relu") return Activation::kRelu;
  if (name == "softmax") return Activation::kSoftmax;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "linear") return Activation::kLinear;
  Fail(ErrorCode::kConfiguration, "unknown activation '" + std::string(name) + "'");
}

std::size_t MlpSpec::ParameterCount() const {
  std::size_t total = 0;
  for (int l = 0; l < num_dense_layers(); ++l) {
    total += static_cast<std::size_t>(layer_sizes[l] + 1) *
             static_cast<std::size_t>(layer_sizes[l + 1]);
  }
  return total;
}

void MlpSpec::Validate() const {
  if (layer_sizes.size() < 3) {
    Fail(ErrorCode::kConfiguration, "an MLP needs at least one hidden layer");
  }
  for (int s : layer_sizes) {
    if (s < 1) Fail(ErrorCode::kConfiguration, "layer sizes must be positive");
  }
  if (hidden_activation != Activation::kGelu &&
      hidden_activation != Activation::kRelu) {
    Fail(ErrorCode::kConfiguration, "hidden activation must be gelu or relu");
  }
  if (output_activation == Activation::kGelu ||
      output_activation == Activation::kRelu) {
    Fail(ErrorCode::kConfiguration,
         "output activation must be softmax, sigmoid or linear");
  }
  if (output_activation == Activation::kSoftmax && output_dim() < 2) {
    Fail(ErrorCode::kConfiguration, "softmax output needs at least 2 units");
  }
  if (!(dropout_after_hidden >= 0.0 && dropout_after_hidden < 1.0)) {
    Fail(ErrorCode::kConfiguration, "dropout must lie in [0,1)");
  }
}

ParameterSet ParameterSet::Zeros(const MlpSpec& spec) {
  ParameterSet p;
  for (int l = 0; l < spec.num_dense_layers(); ++l) {
    p.layers.push_back({Matrix::Zero(spec.layer_sizes[l], spec.layer_sizes[l + 1]),
                        Vector::Zero(spec.layer_sizes[l + 1])});
  }
  return p;
}

ParameterSet ParameterSet::ZerosLike(const ParameterSet& other) {
  ParameterSet p;
  p.layers.reserve(other.layers.size());
  for (const auto& layer : other.layers) {
    p.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vector::Zero(layer.bias.size())});
  }
  return p;
}

std::size_t ParameterSet::size() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

double ParameterSet::SquaredNorm() const {
  double s = 0.0;
  for (const auto& layer : layers) {
    s += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  }
  return s;
}

bool ParameterSet::AllFinite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void ParameterSet::Scale(double factor) {
  for (auto& layer : layers) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
}

void ParameterSet::AddScaled(const ParameterSet& other, double factor) {
  if (other.layers.size() != layers.size()) {
    Fail(ErrorCode::kShape, "parameter sets have different depths");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += factor * other.layers[l].weight;
    layers[l].bias += factor * other.layers[l].bias;
  }
}

namespace {

uint64_t MixWords(const double* data, Index n, uint64_t h) {
  for (Index i = 0; i < n; ++i) {
    uint64_t bits;
    std::memcpy(&bits, data + i, sizeof(bits));
    h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

uint64_t ParameterSet::Fingerprint() const {
  uint64_t h = 0x84222325cbf29ce4ULL;
  for (const auto& layer : layers) {
    h = MixWords(layer.weight.data(), layer.weight.size(), h);
    h = MixWords(layer.bias.data(), layer.bias.size(), h);
  }
  return h;
}

Vector Flatten(const ParameterSet& params) {
  Vector flat(static_cast<Index>(params.size()));
  Index pos = 0;
  for (const auto& layer : params.layers) {
    std::copy(layer.weight.data(), layer.weight.data() + layer.weight.size(),
              flat.data() + pos);
    pos += layer.weight.size();
    flat.segment(pos, layer.bias.size()) = layer.bias;
    pos += layer.bias.size();
  }
  return flat;
}

void Unflatten(const Vector& flat, ParameterSet* params) {
  if (flat.size() != static_cast<Index>(params->size())) {
    Fail(ErrorCode::kShape, "flat vector does not match parameter count");
  }
  Index pos = 0;
  for (auto& layer : params->layers) {
    std::copy(flat.data() + pos, flat.data() + pos + layer.weight.size(),
              layer.weight.data());
    pos += layer.weight.size();
    layer.bias = flat.segment(pos, layer.bias.size());
    pos += layer.bias.size();
  }
}

ParameterSet InitParams(const MlpSpec& spec) {
  spec.Validate();
  ParameterSet p = ParameterSet::Zeros(spec);
  Rng rng = MakeRng(spec.seed, "init");
  for (auto& layer : p.layers) {
    std::normal_distribution<double> dist(
        0.0, std::sqrt(1.0 / static_cast<double>(layer.weight.rows())));
    for (Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = dist(rng);
    }
  }
  return p;
}

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double GeluDerivative(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

namespace {

Matrix ApplyActivation(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::kGelu:
      return z.unaryExpr([](double v) { return Gelu(v); });
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) {
        // Split by sign so exp never overflows.
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
    case Activation::kLinear:
      return z;
    case Activation::kSoftmax: {
      Matrix out(z.rows(), z.cols());
      for (Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        out.row(i) = (z.row(i).array() - m).exp();
        out.row(i) /= out.row(i).sum();
      }
      return out;
    }
  }
  return z;
}

// d loss / d z given d loss / d a for an elementwise or softmax activation.
Matrix ActivationBackward(Activation act, const Matrix& z, const Matrix& a,
                          const Matrix& grad) {
  switch (act) {
    case Activation::kGelu:
      return grad.cwiseProduct(z.unaryExpr([](double v) { return GeluDerivative(v); }));
    case Activation::kRelu:
      return grad.cwiseProduct(
          z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::kSigmoid:
      return grad.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
    case Activation::kLinear:
      return grad;
    case Activation::kSoftmax: {
      const Vector dots = grad.cwiseProduct(a).rowwise().sum();
      Matrix out = grad;
      out.colwise() -= dots;
      return out.cwiseProduct(a);
    }
  }
  return grad;
}

}  // namespace

ForwardResult Forward(const ParameterSet& params, const MlpSpec& spec,
                      const Matrix& inputs, const ForwardOptions& options) {
  if (static_cast<int>(params.layers.size()) != spec.num_dense_layers()) {
    Fail(ErrorCode::kShape, "parameters do not match the network spec");
  }
  if (inputs.cols() != spec.input_dim()) {
    Fail(ErrorCode::kShape, "input has " + std::to_string(inputs.cols()) +
                                " columns, network expects " +
                                std::to_string(spec.input_dim()));
  }
  const bool dropout = options.training && spec.dropout_after_hidden > 0.0;
  if (dropout && options.dropout_rng == nullptr) {
    Fail(ErrorCode::kContract, "training-mode dropout needs a generator");
  }
  const int num_layers = spec.num_dense_layers();
  ForwardResult result;
  ForwardCache& cache = result.cache;
  if (options.keep_cache) {
    cache.activations.reserve(num_layers + 1);
    cache.pre_activations.reserve(num_layers);
    cache.activations.push_back(inputs);
    cache.params_fingerprint = params.Fingerprint();
  }

  Matrix a = inputs;
  for (int l = 0; l < num_layers; ++l) {
    const DenseLayer& layer = params.layers[l];
    Matrix z = a * layer.weight;
    z.rowwise() += layer.bias.transpose();
    const bool hidden = l + 1 < num_layers;
    a = ApplyActivation(hidden ? spec.hidden_activation : spec.output_activation, z);
    if (hidden && dropout) {
      const double keep = 1.0 - spec.dropout_after_hidden;
      std::bernoulli_distribution coin(keep);
      Matrix mask(a.rows(), a.cols());
      for (Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = coin(*options.dropout_rng) ? 1.0 / keep : 0.0;
      }
      a = a.cwiseProduct(mask);
      if (options.keep_cache) cache.dropout_masks.push_back(std::move(mask));
    }
    if (options.keep_cache) {
      cache.pre_activations.push_back(std::move(z));
      cache.activations.push_back(a);
    }
  }
  if (!a.allFinite()) Fail(ErrorCode::kNumeric, "non-finite network output");
  result.outputs = std::move(a);
  return result;
}

Matrix Predict(const ParameterSet& params, const MlpSpec& spec,
               const Matrix& inputs) {
  ForwardOptions options;
  options.keep_cache = false;
  return Forward(params, spec, inputs, options).outputs;
}

Gradients Backward(const ParameterSet& params, const MlpSpec& spec,
                   const ForwardCache& cache, const Matrix& output_grads,
                   const BackwardOptions& options) {
  const int num_layers = spec.num_dense_layers();
  if (static_cast<int>(cache.pre_activations.size()) != num_layers ||
      cache.params_fingerprint != params.Fingerprint()) {
    Fail(ErrorCode::kContract,
         "forward cache does not belong to these parameters");
  }
  const Index n = cache.activations.front().rows();
  if (output_grads.rows() != n || output_grads.cols() != spec.output_dim()) {
    Fail(ErrorCode::kShape, "output gradient shape mismatch");
  }
  const bool has_masks = !cache.dropout_masks.empty();

  Gradients out;
  const bool per_example = options.mode == GradientMode::kPerExample;
  if (options.parameter_grads) {
    if (per_example) {
      out.per_example.assign(static_cast<size_t>(n), ParameterSet::ZerosLike(params));
    } else {
      out.batch = ParameterSet::ZerosLike(params);
    }
  }

  Matrix delta = options.grads_wrt_logits
                     ? output_grads
                     : ActivationBackward(spec.output_activation,
                                          cache.pre_activations.back(),
                                          cache.activations.back(), output_grads);
  for (int l = num_layers - 1; l >= 0; --l) {
    const Matrix& a_prev = cache.activations[l];
    if (options.parameter_grads) {
      if (per_example) {
        for (Index i = 0; i < n; ++i) {
          DenseLayer& g = out.per_example[static_cast<size_t>(i)].layers[l];
          g.weight.noalias() = a_prev.row(i).transpose() * delta.row(i);
          g.bias = delta.row(i).transpose();
        }
      } else {
        DenseLayer& g = out.batch.layers[l];
        g.weight.noalias() = a_prev.transpose() * delta;
        g.weight /= static_cast<double>(n);
        g.bias = delta.colwise().sum().transpose() / static_cast<double>(n);
      }
    }
    if (l == 0 && !options.input_grads) break;
    Matrix da = delta * params.layers[l].weight.transpose();
    if (l == 0) {
      out.inputs = std::move(da);
      break;
    }
    if (has_masks) da = da.cwiseProduct(cache.dropout_masks[l - 1]);
    delta = ActivationBackward(spec.hidden_activation, cache.pre_activations[l - 1],
                               cache.activations[l], da);
  }
  return out;
}

AdamState InitAdamState(const ParameterSet& params) {
  return {ParameterSet::ZerosLike(params), ParameterSet::ZerosLike(params), 0};
}

void AdamStep(ParameterSet* params, AdamState* state, const ParameterSet& grads,
              const AdamConfig& config) {
  if (!grads.AllFinite()) Fail(ErrorCode::kNumeric, "non-finite gradient");
  if (grads.layers.size() != params->layers.size()) {
    Fail(ErrorCode::kShape, "gradient does not match parameters");
  }
  state->step += 1;
  const double t = static_cast<double>(state->step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.array() -= config.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + config.epsilon);
  };
  for (std::size_t l = 0; l < params->layers.size(); ++l) {
    update(params->layers[l].weight, state->first_moment.layers[l].weight,
           state->second_moment.layers[l].weight, grads.layers[l].weight);
    update(params->layers[l].bias, state->first_moment.layers[l].bias,
           state->second_moment.layers[l].bias, grads.layers[l].bias);
  }
}

void TrainConfig::Validate() const {
  if (epochs < 0) Fail(ErrorCode::kConfiguration, "epochs must be >= 0");
  if (batch_size < 1) Fail(ErrorCode::kConfiguration, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) {
    Fail(ErrorCode::kConfiguration, "learning_rate must be positive");
  }
  if (early_stop_patience < 0) {
    Fail(ErrorCode::kConfiguration, "early_stop_patience must be >= 0");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    Fail(ErrorCode::kConfiguration, "validation_fraction must lie in [0,1)");
  }
}

RowVector TrainedModel::PredictOne(const Vector& x) const {
  Matrix row = x.transpose();
  return Predict(row).row(0);
}

std::vector<int> TrainedModel::PredictClasses(const Matrix& inputs) const {
  const Matrix out = Predict(inputs);
  std::vector<int> classes(static_cast<size_t>(out.rows()));
  for (Index i = 0; i < out.rows(); ++i) classes[static_cast<size_t>(i)] = Argmax(out.row(i));
  return classes;
}

FitReport FitNetwork(const MlpSpec& spec, ParameterSet* params,
                     const Matrix& inputs, const BatchObjective& objective,
                     const TrainConfig& config, const FitOptions& options) {
  const EarlyStopping* early_stopping = options.early_stopping;
  const InputTransform& transform = options.transform;
  spec.Validate();
  config.Validate();
  FitReport report;
  const Index n = inputs.rows();
  if (config.epochs == 0 || n == 0) return report;

  Rng shuffle_rng = MakeRng(config.seed, "shuffle");
  Rng dropout_rng = MakeRng(config.seed, "dropout");
  Rng transform_rng = MakeRng(config.seed, "transform");
  const AdamConfig adam = config.adam();
  AdamState state = InitAdamState(*params);

  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  ParameterSet best;
  double best_score = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  const bool use_es = early_stopping != nullptr && early_stopping->score &&
                      early_stopping->patience > 0;

  ForwardOptions fwd_options;
  fwd_options.training = true;
  fwd_options.dropout_rng = &dropout_rng;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (Index start = 0; start < n; start += config.batch_size) {
      const Index len = std::min<Index>(config.batch_size, n - start);
      std::span<const Index> rows(order.data() + start, static_cast<size_t>(len));
      Matrix batch = GatherRows(inputs, rows);
      if (transform) batch = transform(batch, transform_rng);
      ForwardResult fwd = Forward(*params, spec, batch, fwd_options);
      Matrix grad(len, spec.output_dim());
      const double loss = objective(fwd.outputs, rows, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        Fail(ErrorCode::kTraining,
             "loss became non-finite at epoch " + std::to_string(epoch));
      }
      total += loss;
      BackwardOptions bwd_options;
      bwd_options.grads_wrt_logits = options.grads_wrt_logits;
      Gradients g = Backward(*params, spec, fwd.cache, grad, bwd_options);
      try {
        AdamStep(params, &state, g.batch, adam);
      } catch (const Error& e) {
        Fail(ErrorCode::kTraining, std::string(e.what()) + " at epoch " +
                                       std::to_string(epoch));
      }
    }
    report.epoch_loss.push_back(total / static_cast<double>(n));
    report.epochs_run = epoch + 1;
    if (use_es) {
      const double score = early_stopping->score(*params);
      report.validation_scores.push_back(score);
      if (score > best_score + early_stopping->min_delta || report.best_epoch < 0) {
        best_score = score;
        best = *params;
        report.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= early_stopping->patience) {
        break;
      }
    }
  }
  if (use_es && early_stopping->restore_best && report.best_epoch >= 0) {
    *params = std::move(best);
  }
  return report;
}

Vector CrossEntropy(const Matrix& probs, std::span<const int> labels,
                    Matrix* grad) {
  if (static_cast<Index>(labels.size()) != probs.rows()) {
    Fail(ErrorCode::kShape, "label count does not match rows");
  }
  Vector loss(probs.rows());
  if (grad != nullptr) grad->setZero(probs.rows(), probs.cols());
  for (Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= probs.cols()) Fail(ErrorCode::kShape, "label out of range");
    const double p = std::max(probs(i, y), kProbFloor);
    loss[i] = -std::log(p);
    if (grad != nullptr) (*grad)(i, y) = -1.0 / p;
  }
  return loss;
}

Vector MeanSquaredError(const Matrix& outputs, const Matrix& targets,
                        Matrix* grad) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    Fail(ErrorCode::kShape, "MSE operands differ in shape");
  }
  const Matrix diff = outputs - targets;
  const double d = static_cast<double>(outputs.cols());
  if (grad != nullptr) *grad = diff * (2.0 / d);
  return diff.rowwise().squaredNorm() / d;
}

TrainedModel TrainClassifier(const MlpSpec& spec, const Dataset& train,
                             const TrainConfig& config, FitReport* report) {
  spec.Validate();
  config.Validate();
  if (spec.input_dim() != train.dim()) {
    Fail(ErrorCode::kShape, "classifier input width differs from data");
  }
  bool seen[2] = {false, false};
  for (int y : train.labels) {
    if (y < 0 || y >= spec.output_dim()) {
      Fail(ErrorCode::kData, "label outside the classifier's classes");
    }
    if (y < 2) seen[y] = true;
  }
  if (!seen[0] || !seen[1]) {
    Fail(ErrorCode::kData, "training data needs an example of every class");
  }

  const Index n = train.rows();
  std::vector<Index> fit_rows(static_cast<size_t>(n));
  std::iota(fit_rows.begin(), fit_rows.end(), Index{0});
  std::vector<Index> val_rows;
  const bool early = config.early_stop_patience > 0 &&
                     config.validation_fraction > 0.0 && n >= 10;
  if (early) {
    Rng rng = MakeRng(config.seed, "validation");
    std::shuffle(fit_rows.begin(), fit_rows.end(), rng);
    const auto n_val = std::max<Index>(
        1, static_cast<Index>(std::llround(config.validation_fraction *
                                           static_cast<double>(n))));
    val_rows.assign(fit_rows.begin(), fit_rows.begin() + n_val);
    fit_rows.erase(fit_rows.begin(), fit_rows.begin() + n_val);
    std::sort(fit_rows.begin(), fit_rows.end());
  }

  const Matrix x_fit = GatherRows(train.features, fit_rows);
  std::vector<int> y_fit;
  for (Index r : fit_rows) y_fit.push_back(train.labels[static_cast<size_t>(r)]);

  BatchObjective objective = [&](const Matrix& out, std::span<const Index> rows,
                                 Matrix* grad) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (Index r : rows) y.push_back(y_fit[static_cast<size_t>(r)]);
    return CrossEntropy(out, y, grad).sum();
  };

  TrainedModel model;
  model.spec = spec;
  model.params = InitParams(spec);
  model.standardizer = train.standardizer;

  EarlyStopping es;
  Matrix x_val;
  std::vector<int> y_val;
  if (early) {
    x_val = GatherRows(train.features, val_rows);
    for (Index r : val_rows) y_val.push_back(train.labels[static_cast<size_t>(r)]);
    es.patience = config.early_stop_patience;
    es.score = [&](const ParameterSet& p) {
      return -CrossEntropy(Predict(p, spec, x_val), y_val).mean();
    };
  }
  FitOptions options;
  options.early_stopping = early ? &es : nullptr;
  FitReport r = FitNetwork(spec, &model.params, x_fit, objective, config, options);
  if (report != nullptr) *report = std::move(r);
  return model;
}

}  // namespace cfmea
