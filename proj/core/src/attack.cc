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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>

#include "cfmea/error.h"
#include "cfmea/metrics.h"
#include "csv.h"

namespace cfmea {
namespace {

using internal::FormatDoubleExact;

constexpr double kSumTolerance = 1e-6;

double SafeLog(double p) { return std::log(std::max(p, kProbFloor)); }

void CheckLengths(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) {
    Fail(ErrorCode::kShape, "distributions differ in length");
  }
}

// Sum of p_i log(p_i / q_i) over p_i > 0.
double KlTerms(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * (std::log(p[i]) - SafeLog(q[i]));
  }
  return s;
}

std::span<const double> AsSpan(const RowVector& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

}  // namespace

// --- AttackDataset ---------------------------------------------------------

void AttackDataset::Builder::Add(const Vector& x, const QueryResponse& response) {
  if (x.size() != dim_) Fail(ErrorCode::kShape, "query row has the wrong width");
  const Index k = response.prediction.size();
  if (k < 2) Fail(ErrorCode::kShape, "prediction needs at least two classes");
  if (num_classes_ == 0) num_classes_ = k;
  if (k != num_classes_) Fail(ErrorCode::kShape, "prediction width changed");
  auto push = [&](const Vector& row, const RowVector& label, Provenance p) {
    if (std::abs(label.sum() - 1.0) > kSumTolerance || label.minCoeff() < 0.0) {
      Fail(ErrorCode::kShape, "service returned an invalid distribution");
    }
    inputs_.insert(inputs_.end(), row.data(), row.data() + row.size());
    soft_.insert(soft_.end(), label.data(), label.data() + label.size());
    provenance_.push_back(p);
  };
  push(x, response.prediction, Provenance::kQuery);
  if (!response.cf) return;
  if (response.cf->size() != dim_) {
    Fail(ErrorCode::kShape, "counterfactual has the wrong width");
  }
  if (response.cf_prediction) {
    push(*response.cf, *response.cf_prediction, Provenance::kCounterfactual);
  } else {
    RowVector onehot = RowVector::Zero(k);
    onehot[1 - Argmax(response.prediction)] = 1.0;
    push(*response.cf, onehot, Provenance::kCounterfactual);
  }
}

AttackDataset AttackDataset::Builder::Build() && {
  AttackDataset out;
  const Index n = static_cast<Index>(provenance_.size());
  const Index k = num_classes_ == 0 ? 2 : num_classes_;
  out.inputs_ = Eigen::Map<const Matrix>(inputs_.data(), n, dim_);
  out.soft_labels_ = Eigen::Map<const Matrix>(soft_.data(), n, k);
  out.provenance_ = std::move(provenance_);
  out.hard_labels_.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) out.hard_labels_.push_back(Argmax(out.soft_labels_.row(i)));
  return out;
}

Index AttackDataset::CountProvenance(Provenance p) const {
  return static_cast<Index>(std::count(provenance_.begin(), provenance_.end(), p));
}

AttackDataset AttackDataset::Subset(std::span<const Index> rows) const {
  AttackDataset out;
  out.inputs_ = GatherRows(inputs_, rows);
  out.soft_labels_ = GatherRows(soft_labels_, rows);
  for (Index r : rows) {
    if (r < 0 || r >= this->rows()) Fail(ErrorCode::kShape, "row index out of range");
    out.hard_labels_.push_back(hard_labels_[static_cast<size_t>(r)]);
    out.provenance_.push_back(provenance_[static_cast<size_t>(r)]);
  }
  return out;
}

void AttackDataset::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write " + path.string());
  for (Index j = 0; j < dim(); ++j) out << "x" << j << ',';
  for (Index j = 0; j < soft_labels_.cols(); ++j) out << "p" << j << ',';
  out << "provenance\n";
  for (Index i = 0; i < rows(); ++i) {
    for (Index j = 0; j < dim(); ++j) out << FormatDoubleExact(inputs_(i, j)) << ',';
    for (Index j = 0; j < soft_labels_.cols(); ++j) {
      out << FormatDoubleExact(soft_labels_(i, j)) << ',';
    }
    out << (provenance_[static_cast<size_t>(i)] == Provenance::kQuery ? "query"
                                                                      : "counterfactual")
        << '\n';
  }
}

AttackDataset AttackDataset::Load(const std::filesystem::path& path) {
  const internal::CsvTable t = internal::ReadCsv(path);
  Index d = 0;
  Index k = 0;
  for (const auto& h : t.header) {
    if (!h.empty() && h[0] == 'x') ++d;
    if (!h.empty() && h[0] == 'p' && h != "provenance") ++k;
  }
  const int prov = t.ColumnIndex("provenance");
  if (prov < 0 || d == 0 || k < 2 ||
      static_cast<Index>(t.header.size()) != d + k + 1) {
    Fail(ErrorCode::kInput, "not an attack dataset: " + path.string());
  }
  Builder b(d);
  b.num_classes_ = k;
  for (const auto& row : t.rows) {
    for (Index j = 0; j < d + k; ++j) {
      double v = 0.0;
      if (!internal::ParseDouble(row[static_cast<size_t>(j)], &v)) {
        Fail(ErrorCode::kInput, "non-numeric value in " + path.string());
      }
      (j < d ? b.inputs_ : b.soft_).push_back(v);
    }
    const std::string& p = row[static_cast<size_t>(prov)];
    if (p == "query") {
      b.provenance_.push_back(Provenance::kQuery);
    } else if (p == "counterfactual") {
      b.provenance_.push_back(Provenance::kCounterfactual);
    } else {
      Fail(ErrorCode::kInput, "unknown provenance '" + p + "'");
    }
  }
  return std::move(b).Build();
}

AttackDataset Collect(Service& service, const Matrix& query_pool, Index budget) {
  if (budget < 0 || budget > query_pool.rows()) {
    Fail(ErrorCode::kContract, "budget exceeds the query pool");
  }
  AttackDataset::Builder b(query_pool.cols());
  for (Index i = 0; i < budget; ++i) {
    const Vector x = query_pool.row(i).transpose();
    b.Add(x, service.Query(x));
  }
  return std::move(b).Build();
}

// --- divergences -----------------------------------------------------------

double KlDivergence(std::span<const double> p, std::span<const double> q) {
  CheckLengths(p, q);
  return std::max(0.0, KlTerms(p, q));
}

double JsDivergence(std::span<const double> p, std::span<const double> q) {
  CheckLengths(p, q);
  std::vector<double> m(p.size());
  for (size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double js = 0.5 * KlTerms(p, m) + 0.5 * KlTerms(q, m);
  return std::clamp(js, 0.0, std::log(2.0));
}

RowVector Soften(const RowVector& probs, double temperature) {
  if (!(temperature > 0.0)) Fail(ErrorCode::kConfiguration, "temperature must be > 0");
  if (temperature == 1.0) return probs;
  RowVector z = probs.unaryExpr([](double p) { return SafeLog(p); }) / temperature;
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  return z / z.sum();
}

void KdConfig::Validate() const {
  auto in_unit = [](double a) { return a >= 0.0 && a <= 1.0; };
  if (!in_unit(alpha)) Fail(ErrorCode::kConfiguration, "alpha must be in [0, 1]");
  if (!(temperature > 0.0)) Fail(ErrorCode::kConfiguration, "temperature must be > 0");
  if (alpha_sweep.empty()) Fail(ErrorCode::kConfiguration, "alpha_sweep is empty");
  for (double a : alpha_sweep) {
    if (!in_unit(a)) Fail(ErrorCode::kConfiguration, "alpha_sweep values must be in [0, 1]");
  }
}

double KdLoss(const RowVector& student, const RowVector& teacher, int hard_label,
              double alpha, double temperature, Divergence divergence,
              RowVector* grad_logits) {
  if (student.size() != teacher.size()) {
    Fail(ErrorCode::kShape, "student and teacher differ in width");
  }
  if (hard_label < 0 || hard_label >= student.size()) {
    Fail(ErrorCode::kShape, "hard label out of range");
  }
  const Index k = student.size();
  double loss = 0.0;
  if (grad_logits != nullptr) grad_logits->setZero(k);
  if (alpha > 0.0) {
    loss += alpha * -SafeLog(student[hard_label]);
    if (grad_logits != nullptr) {
      RowVector g = student;
      g[hard_label] -= 1.0;
      *grad_logits += alpha * g;
    }
  }
  if (alpha < 1.0) {
    const RowVector p = Soften(teacher, temperature);
    const RowVector q = Soften(student, temperature);
    RowVector dq(k);  // d divergence / d q
    double div = 0.0;
    if (divergence == Divergence::kJensenShannon) {
      div = JsDivergence(AsSpan(p), AsSpan(q));
      for (Index i = 0; i < k; ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        dq[i] = 0.5 * (SafeLog(q[i]) - SafeLog(m));
      }
    } else {
      div = KlDivergence(AsSpan(p), AsSpan(q));
      for (Index i = 0; i < k; ++i) dq[i] = -p[i] / std::max(q[i], kProbFloor);
    }
    loss += (1.0 - alpha) * div;
    if (grad_logits != nullptr) {
      const double mean = q.dot(dq);
      *grad_logits += (1.0 - alpha) / temperature *
                      (q.array() * (dq.array() - mean)).matrix();
    }
  }
  return loss;
}

// --- substitute training ---------------------------------------------------

TrainConfig DefaultAttackTrainConfig() {
  TrainConfig c;
  c.epochs = 300;
  c.batch_size = 64;
  c.learning_rate = 1e-3;
  c.early_stop_patience = 20;
  c.validation_fraction = 0.2;
  return c;
}

TrainedModel KdTrain(const AttackDataset& data, const MlpSpec& spec,
                     const KdConfig& kd, const TrainConfig& config,
                     FitReport* report) {
  kd.Validate();
  spec.Validate();
  config.Validate();
  if (data.empty()) Fail(ErrorCode::kContract, "attack corpus is empty");
  if (spec.input_dim() != data.dim() ||
      spec.output_dim() != data.soft_labels().cols()) {
    Fail(ErrorCode::kShape, "threat model does not fit the attack corpus");
  }
  if (spec.output_activation != Activation::kSoftmax) {
    Fail(ErrorCode::kConfiguration, "threat model needs a softmax head");
  }

  const Index n = data.rows();
  std::vector<Index> fit_rows(static_cast<size_t>(n));
  std::iota(fit_rows.begin(), fit_rows.end(), Index{0});
  std::vector<Index> val_rows;
  const bool early = config.early_stop_patience > 0 &&
                     config.validation_fraction > 0.0 && n >= 5;
  if (early) {
    Rng rng = MakeRng(config.seed, "validation");
    std::shuffle(fit_rows.begin(), fit_rows.end(), rng);
    const auto n_val = std::clamp<Index>(
        static_cast<Index>(std::llround(config.validation_fraction *
                                        static_cast<double>(n))),
        1, n - 1);
    val_rows.assign(fit_rows.begin(), fit_rows.begin() + n_val);
    fit_rows.erase(fit_rows.begin(), fit_rows.begin() + n_val);
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
  }
  const AttackDataset fit = data.Subset(fit_rows);

  BatchObjective objective = [&](const Matrix& out, std::span<const Index> rows,
                                 Matrix* grad) {
    double total = 0.0;
    RowVector g;
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<size_t>(rows[i]);
      const Index ri = static_cast<Index>(i);
      total += KdLoss(out.row(ri), fit.soft_labels().row(rows[i]),
                      fit.hard_labels()[r], kd.alpha, kd.temperature,
                      kd.divergence, &g);
      grad->row(ri) = g;
    }
    return total;
  };

  TrainedModel model;
  model.spec = spec;
  model.params = InitParams(spec);
  model.metadata = {{"role", "threat"}};

  EarlyStopping es;
  Matrix x_val;
  std::vector<int> y_val;
  FitOptions options;
  options.grads_wrt_logits = true;
  if (early) {
    x_val = GatherRows(data.inputs(), val_rows);
    for (Index r : val_rows) y_val.push_back(data.hard_labels()[static_cast<size_t>(r)]);
    es.patience = config.early_stop_patience;
    es.min_delta = kAgreementMinDelta;
    es.score = [&](const ParameterSet& p) {
      const Matrix out = Predict(p, spec, x_val);
      Index same = 0;
      for (Index i = 0; i < out.rows(); ++i) {
        if (Argmax(out.row(i)) == y_val[static_cast<size_t>(i)]) ++same;
      }
      return static_cast<double>(same) / static_cast<double>(out.rows());
    };
    options.early_stopping = &es;
  }
  FitReport r = FitNetwork(spec, &model.params, fit.inputs(), objective, config, options);
  if (report != nullptr) *report = std::move(r);
  return model;
}

TrainedModel DirectTrain(const AttackDataset& data, const MlpSpec& spec,
                         const TrainConfig& config, FitReport* report) {
  KdConfig kd;
  kd.alpha = 1.0;
  return KdTrain(data, spec, kd, config, report);
}

SweepResult SweepAlpha(const AttackDataset& data, const MlpSpec& spec,
                       const KdConfig& kd, const TrainConfig& config,
                       const Matrix& eval_inputs, const TrainedModel& target) {
  kd.Validate();
  const Matrix target_out = target.Predict(eval_inputs);
  SweepResult out;
  double best = -1.0;
  for (double alpha : kd.alpha_sweep) {
    KdConfig one = kd;
    one.alpha = alpha;
    TrainedModel m = KdTrain(data, spec, one, config);
    const double a = AgreementFromOutputs(m.Predict(eval_inputs), target_out);
    out.agreements.push_back(a);
    if (a > best || (a == best && alpha < out.best_alpha)) {
      best = a;
      out.best_alpha = alpha;
      out.best_model = std::move(m);
    }
  }
  return out;
}

}  // namespace cfmea
