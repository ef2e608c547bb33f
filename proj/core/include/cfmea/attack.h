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

#ifndef CFMEA_ATTACK_H_
#define CFMEA_ATTACK_H_

#include <filesystem>
#include <span>
#include <vector>

#include "cfmea/dataset.h"
#include "cfmea/nn.h"
#include "cfmea/service.h"

namespace cfmea {

enum class Provenance { kQuery, kCounterfactual };

// Everything the attacker has learned through the service. Rows can only be
// appended from QueryResponses (or re-imported from a previous export), so
// ground-truth labels never reach the attacker.
class AttackDataset {
 public:
  class Builder {
   public:
    explicit Builder(Index dim) : dim_(dim) {}

    // Adds the query row and, when the response carries a counterfactual,
    // a counterfactual row labelled with f(c) or, without f(c), with the
    // one-hot of the class opposite to argmax f(x).
    void Add(const Vector& x, const QueryResponse& response);
    AttackDataset Build() &&;

   private:
    friend class AttackDataset;

    Index dim_;
    std::vector<double> inputs_;
    std::vector<double> soft_;
    std::vector<Provenance> provenance_;
    Index num_classes_ = 0;
  };

  AttackDataset() = default;

  Index rows() const { return inputs_.rows(); }
  Index dim() const { return inputs_.cols(); }
  bool empty() const { return rows() == 0; }

  const Matrix& inputs() const { return inputs_; }
  const Matrix& soft_labels() const { return soft_labels_; }
  const std::vector<int>& hard_labels() const { return hard_labels_; }
  const std::vector<Provenance>& provenance() const { return provenance_; }

  Index CountProvenance(Provenance p) const;
  AttackDataset Subset(std::span<const Index> rows) const;

  // CSV with feature columns, soft label columns and a provenance column.
  void Save(const std::filesystem::path& path) const;
  static AttackDataset Load(const std::filesystem::path& path);

 private:
  Matrix inputs_;
  Matrix soft_labels_;
  std::vector<int> hard_labels_;
  std::vector<Provenance> provenance_;
};

// Sends the first `budget` rows of `query_pool` to the service.
AttackDataset Collect(Service& service, const Matrix& query_pool, Index budget);

// --- divergences and the distillation objective --------------------------

// Natural-log divergences; 0 log 0 = 0. Throws kShape on length mismatch.
double KlDivergence(std::span<const double> p, std::span<const double> q);
double JsDivergence(std::span<const double> p, std::span<const double> q);

enum class Divergence { kJensenShannon, kKullbackLeibler };

// softmax(log(p) / temperature).
RowVector Soften(const RowVector& probs, double temperature);

struct KdConfig {
  double alpha = 0.0;
  double temperature = 1.0;
  std::vector<double> alpha_sweep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  Divergence divergence = Divergence::kJensenShannon;

  void Validate() const;
};

// alpha * CE(student, hard_label)
//   + (1 - alpha) * D(soften(teacher, T) || soften(student, T)).
// When `grad_logits` is given it receives the gradient with respect to the
// student's pre-softmax logits.
double KdLoss(const RowVector& student, const RowVector& teacher,
              int hard_label, double alpha, double temperature,
              Divergence divergence = Divergence::kJensenShannon,
              RowVector* grad_logits = nullptr);

// --- substitute training ---------------------------------------------------

// Defaults for attacker-side training: 20% of the corpus held out, stop once
// held-out agreement with the teacher's hard labels has not improved by more
// than kAgreementMinDelta for 20 epochs, cap 300 epochs.
TrainConfig DefaultAttackTrainConfig();
inline constexpr double kAgreementMinDelta = 1e-3;

// Cross-entropy on the service's hard labels.
TrainedModel DirectTrain(const AttackDataset& data, const MlpSpec& spec,
                         const TrainConfig& config,
                         FitReport* report = nullptr);

// Mean KdLoss over the corpus with kd.alpha.
TrainedModel KdTrain(const AttackDataset& data, const MlpSpec& spec,
                     const KdConfig& kd, const TrainConfig& config,
                     FitReport* report = nullptr);

struct SweepResult {
  TrainedModel best_model;
  double best_alpha = 0.0;
  std::vector<double> agreements;  // aligned with kd.alpha_sweep
};

// One KdTrain per alpha in kd.alpha_sweep; returns the model with the
// highest agreement with `target` on `eval_inputs` (ties: smallest alpha).
SweepResult SweepAlpha(const AttackDataset& data, const MlpSpec& spec,
                       const KdConfig& kd, const TrainConfig& config,
                       const Matrix& eval_inputs, const TrainedModel& target);

}  // namespace cfmea

#endif  // CFMEA_ATTACK_H_
