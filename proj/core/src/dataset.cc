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

#include "cfmea/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "cfmea/error.h"
#include "cfmea/random.h"
#include "csv.h"
#include "json.hpp"

namespace cfmea {

using internal::CsvTable;

Standardizer Standardizer::Fit(const Matrix& features) {
  Standardizer s;
  const Index n = features.rows();
  s.mean = features.colwise().mean().transpose();
  s.stddev = Vector::Ones(features.cols());
  if (n > 1) {
    for (Index j = 0; j < features.cols(); ++j) {
      const double var =
          (features.col(j).array() - s.mean[j]).square().sum() /
          static_cast<double>(n - 1);
      const double sd = std::sqrt(var);
      s.stddev[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  return s;
}

Matrix Standardizer::Apply(const Matrix& raw) const {
  if (raw.cols() != mean.size()) {
    Fail(ErrorCode::kShape, "standardizer expects " +
                                std::to_string(mean.size()) + " columns");
  }
  Matrix out = raw;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= stddev.transpose().array();
  return out;
}

Matrix Standardizer::Invert(const Matrix& standardized) const {
  if (standardized.cols() != mean.size()) {
    Fail(ErrorCode::kShape, "standardizer expects " +
                                std::to_string(mean.size()) + " columns");
  }
  Matrix out = standardized;
  out.array().rowwise() *= stddev.transpose().array();
  out.rowwise() += mean.transpose();
  return out;
}

void Dataset::Validate() const {
  if (static_cast<Index>(labels.size()) != features.rows()) {
    Fail(ErrorCode::kData, name + ": " + std::to_string(labels.size()) +
                               " labels for " +
                               std::to_string(features.rows()) + " rows");
  }
  if (!feature_names.empty() &&
      static_cast<Index>(feature_names.size()) != features.cols()) {
    Fail(ErrorCode::kData, name + ": feature name count mismatch");
  }
  if (!features.allFinite()) {
    Fail(ErrorCode::kData, name + ": non-finite feature values");
  }
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) {
      Fail(ErrorCode::kData, name + ": label " + std::to_string(y) +
                                 " outside {0,1}");
    }
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) {
    Fail(ErrorCode::kData, name + ": only one class present");
  }
}

Dataset Dataset::Subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.features = GatherRows(features, rows);
  out.labels.reserve(rows.size());
  for (Index r : rows) out.labels.push_back(labels[static_cast<size_t>(r)]);
  out.feature_names = feature_names;
  out.name = name;
  out.label_column = label_column;
  out.standardizer = standardizer;
  return out;
}

namespace {

bool HasBothClasses(const std::vector<int>& labels,
                    const std::vector<Index>& rows) {
  bool seen[2] = {false, false};
  for (Index r : rows) seen[labels[static_cast<size_t>(r)] != 0] = true;
  return seen[0] && seen[1];
}

void CheckFraction(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    Fail(ErrorCode::kConfiguration,
         "train_fraction must lie in (0,1), got " + std::to_string(f));
  }
}

Index TrainCount(Index n, double fraction) {
  Index k = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<Index>(k, n > 1 ? 1 : 0, n > 1 ? n - 1 : n);
}

}  // namespace

SplitIndices ComputeSplit(const std::vector<int>& labels,
                          const SplitSpec& spec) {
  CheckFraction(spec.train_fraction);
  const Index n = static_cast<Index>(labels.size());
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = MakeRng(spec.seed, "split");
  std::shuffle(order.begin(), order.end(), rng);

  const Index k = TrainCount(n, spec.train_fraction);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + k);
  out.test.assign(order.begin() + k, order.end());
  if (HasBothClasses(labels, out.train) && HasBothClasses(labels, out.test)) {
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
  }

  // Stratified re-draw: the same fraction of every class on each side.
  out.train.clear();
  out.test.clear();
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<Index> members;
    for (Index r : order) {
      if (labels[static_cast<size_t>(r)] == cls) members.push_back(r);
    }
    const Index kc = TrainCount(static_cast<Index>(members.size()),
                                spec.train_fraction);
    out.train.insert(out.train.end(), members.begin(), members.begin() + kc);
    out.test.insert(out.test.end(), members.begin() + kc, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> Split(const Dataset& ds, const SplitSpec& spec) {
  const SplitIndices idx = ComputeSplit(ds.labels, spec);
  return {ds.Subset(idx.train), ds.Subset(idx.test)};
}

DatasetKind ParseDatasetKind(std::string_view name) {
  if (name == "gmsc") return DatasetKind::kGmsc;
  if (name == "credit_fraud") return DatasetKind::kCreditFraud;
  if (name == "california_housing") return DatasetKind::kCaliforniaHousing;
  if (name == "synthetic-file") return DatasetKind::kSyntheticFile;
  Fail(ErrorCode::kConfiguration, "unknown dataset '" + std::string(name) + "'");
}

std::string_view DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kGmsc: return "gmsc";
    case DatasetKind::kCreditFraud: return "credit_fraud";
    case DatasetKind::kCaliforniaHousing: return "california_housing";
    case DatasetKind::kSyntheticFile: return "synthetic-file";
  }
  return "unknown";
}

namespace {

bool IsMissing(std::string_view field) {
  return field.empty() || field == "NA" || field == "N/A" || field == "nan" ||
         field == "NaN" || field == "null";
}

int FindLabelColumn(const CsvTable& table, DatasetKind kind) {
  std::vector<std::string_view> candidates;
  switch (kind) {
    case DatasetKind::kGmsc:
      candidates = {"SeriousDlqin2yrs"};
      break;
    case DatasetKind::kCreditFraud:
      candidates = {"Class"};
      break;
    case DatasetKind::kCaliforniaHousing:
      candidates = {"median_house_value", "MedHouseVal", "target"};
      break;
    case DatasetKind::kSyntheticFile:
      candidates = {"label"};
      break;
  }
  for (auto c : candidates) {
    const int idx = table.ColumnIndex(c);
    if (idx >= 0) return idx;
  }
  if (kind == DatasetKind::kSyntheticFile && !table.header.empty()) {
    return static_cast<int>(table.header.size()) - 1;
  }
  Fail(ErrorCode::kInput, "label column '" + std::string(candidates.front()) +
                              "' not found");
}

bool IsIndexColumn(const std::string& name) {
  return name.empty() || name.rfind("Unnamed", 0) == 0 || name == "id";
}

double Quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double Median(std::vector<double> values) { return Quantile(std::move(values), 0.5); }

}  // namespace

Dataset LoadDataset(std::string_view name, const std::filesystem::path& path,
                    const LoadOptions& options) {
  const DatasetKind kind = ParseDatasetKind(name);
  CheckFraction(options.split.train_fraction);
  if (!std::filesystem::exists(path)) {
    Fail(ErrorCode::kInput, "no such file: " + path.string());
  }
  const CsvTable table = internal::ReadCsv(path);
  const int label_col = FindLabelColumn(table, kind);

  // Candidate feature columns: everything numeric except the label and
  // index-like columns.
  std::vector<int> feature_cols;
  for (int j = 0; j < static_cast<int>(table.header.size()); ++j) {
    if (j == label_col) continue;
    if (kind == DatasetKind::kGmsc && IsIndexColumn(table.header[j])) continue;
    bool numeric = true;
    for (const auto& row : table.rows) {
      double v;
      if (!IsMissing(row[j]) && !internal::ParseDouble(row[j], &v)) {
        numeric = false;
        break;
      }
    }
    if (numeric) feature_cols.push_back(j);
  }
  if (feature_cols.empty()) {
    Fail(ErrorCode::kData, "no numeric feature columns in " + path.string());
  }

  std::vector<double> values;
  std::vector<double> targets;
  for (const auto& row : table.rows) {
    double y;
    if (IsMissing(row[label_col]) ||
        !internal::ParseDouble(row[label_col], &y) || !std::isfinite(y)) {
      continue;
    }
    bool ok = true;
    const size_t start = values.size();
    for (int j : feature_cols) {
      double v;
      if (IsMissing(row[j]) || !internal::ParseDouble(row[j], &v) ||
          !std::isfinite(v)) {
        ok = false;
        break;
      }
      values.push_back(v);
    }
    if (!ok) {
      values.resize(start);
      continue;
    }
    targets.push_back(y);
  }

  Dataset ds;
  ds.name = std::string(name);
  ds.label_column = table.header[label_col];
  for (int j : feature_cols) ds.feature_names.push_back(table.header[j]);
  const Index n = static_cast<Index>(targets.size());
  const Index d = static_cast<Index>(feature_cols.size());
  ds.features = Eigen::Map<Matrix>(values.data(), n, d);
  if (n == 0) Fail(ErrorCode::kData, "no complete rows in " + path.string());

  if (kind == DatasetKind::kCaliforniaHousing) {
    const double median = Median(targets);
    for (double t : targets) ds.labels.push_back(t > median ? 1 : 0);
  } else {
    for (double t : targets) {
      if (t != 0.0 && t != 1.0) {
        Fail(ErrorCode::kData, "label value " + std::to_string(t) +
                                   " outside {0,1} in " + path.string());
      }
      ds.labels.push_back(static_cast<int>(t));
    }
  }

  if (kind == DatasetKind::kGmsc) {
    for (Index j = 0; j < d; ++j) {
      std::vector<double> col(ds.features.col(j).begin(),
                              ds.features.col(j).end());
      const double lo = Quantile(col, options.clip_low_quantile);
      const double hi = Quantile(col, options.clip_high_quantile);
      ds.features.col(j) = ds.features.col(j).cwiseMax(lo).cwiseMin(hi);
    }
  }

  ds.Validate();
  const SplitIndices idx = ComputeSplit(ds.labels, options.split);
  Standardizer s = Standardizer::Fit(GatherRows(ds.features, idx.train));
  ds.features = s.Apply(ds.features);
  ds.standardizer = std::move(s);
  return ds;
}

Matrix GenerateRandomQueries(Index n, Index d, double low, double high,
                             uint64_t seed) {
  if (!(low < high)) {
    Fail(ErrorCode::kConfiguration, "query range requires low < high");
  }
  if (n < 0 || d < 0) Fail(ErrorCode::kConfiguration, "negative query shape");
  Rng rng = MakeRng(seed, "queries");
  std::uniform_real_distribution<double> dist(low, high);
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) out(i, j) = dist(rng);
  }
  return out;
}

Dataset MakeSynthetic(Index n, Index d, double class_separation, uint64_t seed,
                      const SplitSpec& standardize_on) {
  if (n < 4 || d < 2) {
    Fail(ErrorCode::kConfiguration, "synthetic data needs n >= 4 and d >= 2");
  }
  Rng rng = MakeRng(seed, "synthetic");
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  ds.name = "synthetic";
  ds.features.resize(n, d);
  ds.labels.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double centre = (y == 1 ? 0.5 : -0.5) * class_separation;
    ds.labels[static_cast<size_t>(i)] = y;
    for (Index j = 0; j < d; ++j) ds.features(i, j) = centre + noise(rng);
  }
  for (Index j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  const SplitIndices idx = ComputeSplit(ds.labels, standardize_on);
  Standardizer s = Standardizer::Fit(GatherRows(ds.features, idx.train));
  ds.features = s.Apply(ds.features);
  ds.standardizer = std::move(s);
  ds.Validate();
  return ds;
}

Dataset UndersampleMajority(const Dataset& ds, double max_ratio,
                            uint64_t seed) {
  if (!(max_ratio > 0.0)) {
    Fail(ErrorCode::kConfiguration, "undersampling ratio must be positive");
  }
  std::vector<Index> by_class[2];
  for (Index i = 0; i < ds.rows(); ++i) {
    by_class[ds.labels[static_cast<size_t>(i)] != 0].push_back(i);
  }
  const int minority = by_class[0].size() <= by_class[1].size() ? 0 : 1;
  const int majority = 1 - minority;
  const auto cap = static_cast<size_t>(
      std::floor(max_ratio * static_cast<double>(by_class[minority].size())));
  std::vector<Index> keep = by_class[minority];
  std::vector<Index> major = by_class[majority];
  if (major.size() > cap) {
    Rng rng = MakeRng(seed, "undersample");
    std::shuffle(major.begin(), major.end(), rng);
    major.resize(cap);
  }
  keep.insert(keep.end(), major.begin(), major.end());
  std::sort(keep.begin(), keep.end());
  return ds.Subset(keep);
}

void SaveDataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json schema;
  schema["format"] = "cfmea-dataset";
  schema["version"] = 1;
  schema["name"] = ds.name;
  schema["rows"] = ds.rows();
  schema["feature_names"] = ds.feature_names;
  schema["label_column"] = ds.label_column;
  schema["matrix_file"] = "data.csv";
  if (ds.standardizer) {
    schema["standardizer"]["mean"] = std::vector<double>(
        ds.standardizer->mean.begin(), ds.standardizer->mean.end());
    schema["standardizer"]["stddev"] = std::vector<double>(
        ds.standardizer->stddev.begin(), ds.standardizer->stddev.end());
  } else {
    schema["standardizer"] = nullptr;
  }
  {
    std::ofstream out(dir / "schema.json");
    if (!out) Fail(ErrorCode::kInput, "cannot write " + (dir / "schema.json").string());
    out << schema.dump(2) << "\n";
  }
  std::ofstream out(dir / "data.csv");
  if (!out) Fail(ErrorCode::kInput, "cannot write " + (dir / "data.csv").string());
  for (Index j = 0; j < ds.dim(); ++j) {
    const std::string name = j < static_cast<Index>(ds.feature_names.size())
                                 ? ds.feature_names[static_cast<size_t>(j)]
                                 : "x" + std::to_string(j);
    out << internal::CsvEscape(name) << ",";
  }
  out << "label\n";
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      out << internal::FormatDoubleExact(ds.features(i, j)) << ",";
    }
    out << ds.labels[static_cast<size_t>(i)] << "\n";
  }
}

Dataset LoadSavedDataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "schema.json");
  if (!in) Fail(ErrorCode::kInput, "cannot open " + (dir / "schema.json").string());
  nlohmann::json schema;
  try {
    in >> schema;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInput, std::string("malformed schema.json: ") + e.what());
  }
  Dataset ds;
  try {
    ds.name = schema.at("name").get<std::string>();
    ds.feature_names = schema.at("feature_names").get<std::vector<std::string>>();
    ds.label_column = schema.at("label_column").get<std::string>();
    if (!schema.at("standardizer").is_null()) {
      const auto mean = schema["standardizer"].at("mean").get<std::vector<double>>();
      const auto sd = schema["standardizer"].at("stddev").get<std::vector<double>>();
      Standardizer s;
      s.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Index>(mean.size()));
      s.stddev = Eigen::Map<const Vector>(sd.data(), static_cast<Index>(sd.size()));
      ds.standardizer = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInput, std::string("malformed schema.json: ") + e.what());
  }
  const CsvTable table = internal::ReadCsv(
      dir / schema.value("matrix_file", std::string("data.csv")));
  const Index d = static_cast<Index>(table.header.size()) - 1;
  ds.features.resize(static_cast<Index>(table.rows.size()), d);
  for (size_t i = 0; i < table.rows.size(); ++i) {
    for (Index j = 0; j <= d; ++j) {
      double v;
      if (!internal::ParseDouble(table.rows[i][static_cast<size_t>(j)], &v)) {
        Fail(ErrorCode::kInput, "non-numeric entry in data.csv");
      }
      if (j < d) {
        ds.features(static_cast<Index>(i), j) = v;
      } else {
        ds.labels.push_back(static_cast<int>(v));
      }
    }
  }
  ds.Validate();
  return ds;
}

}  // namespace cfmea
