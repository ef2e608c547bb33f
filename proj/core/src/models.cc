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

#include "cfmea/models.h"

#include <random>

#include "cfmea/error.h"

namespace cfmea {

MlpSpec BuildTargetSpec(int input_dim, uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), kTargetHidden.begin(),
                          kTargetHidden.end());
  spec.layer_sizes.push_back(2);
  spec.hidden_activation = Activation::kGelu;
  spec.output_activation = Activation::kSoftmax;
  spec.seed = seed;
  spec.Validate();
  return spec;
}

MlpSpec BuildThreatSpec(int input_dim, uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), kThreatHidden.begin(),
                          kThreatHidden.end());
  spec.layer_sizes.push_back(2);
  spec.hidden_activation = Activation::kRelu;
  spec.output_activation = Activation::kSoftmax;
  spec.seed = seed;
  spec.Validate();
  return spec;
}

std::vector<int> DefaultAutoencoderHidden(int input_dim) {
  return {input_dim, (input_dim + 1) / 2, input_dim};
}

MlpSpec BuildAutoencoderSpec(int input_dim, const std::vector<int>& hidden,
                             uint64_t seed) {
  MlpSpec spec;
  spec.layer_sizes.push_back(input_dim);
  const std::vector<int> widths =
      hidden.empty() ? DefaultAutoencoderHidden(input_dim) : hidden;
  spec.layer_sizes.insert(spec.layer_sizes.end(), widths.begin(), widths.end());
  spec.layer_sizes.push_back(input_dim);
  spec.hidden_activation = Activation::kRelu;
  spec.output_activation = Activation::kLinear;
  spec.seed = seed;
  spec.Validate();
  return spec;
}

TrainedModel TrainDenoisingAutoencoder(const Dataset& train, double noise_std,
                                       const TrainConfig& config,
                                       const std::vector<int>& hidden) {
  if (!(noise_std >= 0.0)) {
    Fail(ErrorCode::kConfiguration, "noise_std must be >= 0");
  }
  const int d = static_cast<int>(train.dim());
  TrainedModel model;
  model.spec = BuildAutoencoderSpec(d, hidden, config.seed);
  model.params = InitParams(model.spec);
  model.standardizer = train.standardizer;
  model.metadata["role"] = "autoencoder";

  const Matrix& clean = train.features;
  BatchObjective objective = [&](const Matrix& out, std::span<const Index> rows,
                                 Matrix* grad) {
    return MeanSquaredError(out, GatherRows(clean, rows), grad).sum();
  };
  FitOptions options;
  if (noise_std > 0.0) {
    options.transform = [noise_std](const Matrix& x, Rng& rng) {
      std::normal_distribution<double> noise(0.0, noise_std);
      Matrix noisy = x;
      for (Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += noise(rng);
      return noisy;
    };
  }
  FitNetwork(model.spec, &model.params, clean, objective, config, options);
  return model;
}

}  // namespace cfmea
