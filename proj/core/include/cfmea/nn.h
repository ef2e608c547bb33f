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

#ifndef CFMEA_NN_H_
#define CFMEA_NN_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfmea/dataset.h"
#include "cfmea/linalg.h"
#include "cfmea/random.h"

namespace cfmea {

enum class Activation { kGelu, kRelu, kSoftmax, kSigmoid, kLinear };

std::string_view ActivationName(Activation a);
Activation ParseActivation(std::string_view name);

// Shape of a dense network: layer_sizes = {input, hidden..., output}.
struct MlpSpec {
  std::vector<int> layer_sizes;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kSoftmax;
  // Inverted dropout after every hidden layer, training passes only.
  double dropout_after_hidden = 0.0;
  uint64_t seed = 0;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_dense_layers() const {
    return static_cast<int>(layer_sizes.size()) - 1;
  }
  std::size_t ParameterCount() const;

  // Throws kConfiguration.
  void Validate() const;
};

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;    // fan_out
};

struct ParameterSet {
  std::vector<DenseLayer> layers;

  static ParameterSet Zeros(const MlpSpec& spec);
  static ParameterSet ZerosLike(const ParameterSet& other);

  std::size_t size() const;
  double SquaredNorm() const;
  bool AllFinite() const;
  void Scale(double factor);
  void AddScaled(const ParameterSet& other, double factor);
  // Content hash; a forward cache remembers it to detect stale use.
  uint64_t Fingerprint() const;
};

// Layer-major flattening: W_0 (row-major), b_0, W_1, b_1, ...
Vector Flatten(const ParameterSet& params);
void Unflatten(const Vector& flat, ParameterSet* params);

// LeCun normal: N(0, 1/fan_in) weights, zero biases, seeded by spec.seed.
ParameterSet InitParams(const MlpSpec& spec);

double Gelu(double x);
double GeluDerivative(double x);

struct ForwardCache {
  std::vector<Matrix> pre_activations;   // z_l for l = 1..L
  std::vector<Matrix> activations;       // a_0 = X, a_l for l = 1..L
  std::vector<Matrix> dropout_masks;     // scaled keep masks, hidden layers
  uint64_t params_fingerprint = 0;
};

struct ForwardOptions {
  bool training = false;          // enables dropout
  Rng* dropout_rng = nullptr;     // required when training with dropout
  bool keep_cache = true;
};

struct ForwardResult {
  Matrix outputs;
  ForwardCache cache;
};

ForwardResult Forward(const ParameterSet& params, const MlpSpec& spec,
                      const Matrix& inputs, const ForwardOptions& options = {});

// Inference-mode outputs only.
Matrix Predict(const ParameterSet& params, const MlpSpec& spec,
               const Matrix& inputs);

enum class GradientMode { kBatch, kPerExample };

struct BackwardOptions {
  GradientMode mode = GradientMode::kBatch;
  bool parameter_grads = true;
  bool input_grads = false;
  // output_grads are d loss / d z of the output layer (pre-activation).
  bool grads_wrt_logits = false;
};

struct Gradients {
  ParameterSet batch;                     // mean over rows (kBatch)
  std::vector<ParameterSet> per_example;  // one per row (kPerExample)
  Matrix inputs;                          // row i: d loss_i / d x_i
};

// `output_grads` row i holds d loss_i / d output_i, where output is the
// post-activation network output. kBatch returns the gradient of the mean
// loss; kPerExample returns the gradient of each loss_i.
Gradients Backward(const ParameterSet& params, const MlpSpec& spec,
                   const ForwardCache& cache, const Matrix& output_grads,
                   const BackwardOptions& options = {});

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ParameterSet first_moment;
  ParameterSet second_moment;
  int64_t step = 0;
};

AdamState InitAdamState(const ParameterSet& params);

// Bias-corrected Adam. Throws kNumeric on non-finite gradients, leaving
// params and state untouched.
void AdamStep(ParameterSet* params, AdamState* state, const ParameterSet& grads,
              const AdamConfig& config);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  uint64_t seed = 0;
  int early_stop_patience = 20;     // 0 disables early stopping
  double validation_fraction = 0.1; // 0 disables the held-out slice

  AdamConfig adam() const {
    return {learning_rate, adam_beta1, adam_beta2, adam_epsilon};
  }
  void Validate() const;
};

struct TrainedModel {
  MlpSpec spec;
  ParameterSet params;
  std::optional<Standardizer> standardizer;
  std::map<std::string, std::string> metadata;

  Matrix Predict(const Matrix& inputs) const {
    return cfmea::Predict(params, spec, inputs);
  }
  RowVector PredictOne(const Vector& x) const;
  std::vector<int> PredictClasses(const Matrix& inputs) const;
};

// --- generic minibatch training -------------------------------------------

// Fills `output_grads` (one row per entry of `rows`) with d loss_i / d out_i
// and returns the summed loss over the batch. `rows` index the training
// matrix passed to FitNetwork.
using BatchObjective = std::function<double(
    const Matrix& outputs, std::span<const Index> rows, Matrix* output_grads)>;

// Optional per-batch input corruption (denoising training).
using InputTransform = std::function<Matrix(const Matrix& inputs, Rng& rng)>;

struct EarlyStopping {
  // Higher is better. Evaluated after every epoch.
  std::function<double(const ParameterSet&)> score;
  int patience = 20;
  double min_delta = 0.0;
  bool restore_best = true;
};

struct FitReport {
  int epochs_run = 0;
  int best_epoch = -1;
  std::vector<double> epoch_loss;         // mean training loss per epoch
  std::vector<double> validation_scores;  // empty without early stopping
};

struct FitOptions {
  const EarlyStopping* early_stopping = nullptr;
  InputTransform transform;
  // The objective reports gradients w.r.t. output logits.
  bool grads_wrt_logits = false;
};

// Shuffled minibatch Adam. Deterministic in config.seed. Throws kTraining
// (naming the epoch) when the loss becomes non-finite.
FitReport FitNetwork(const MlpSpec& spec, ParameterSet* params,
                     const Matrix& inputs, const BatchObjective& objective,
                     const TrainConfig& config, const FitOptions& options = {});

// --- losses ------------------------------------------------------------------

// Probabilities are clamped to [kProbFloor, 1] inside every logarithm.
inline constexpr double kProbFloor = 1e-12;

// Per-row -log p[label]; fills d/dp.
Vector CrossEntropy(const Matrix& probs, std::span<const int> labels,
                    Matrix* grad = nullptr);

// Per-row mean over columns of (out - target)^2; fills d/dout.
Vector MeanSquaredError(const Matrix& outputs, const Matrix& targets,
                        Matrix* grad = nullptr);

// Mean cross-entropy training against one-hot labels, early stopping on
// the validation cross-entropy of a held-out slice.
TrainedModel TrainClassifier(const MlpSpec& spec, const Dataset& train,
                             const TrainConfig& config,
                             FitReport* report = nullptr);

}  // namespace cfmea

#endif  // CFMEA_NN_H_
