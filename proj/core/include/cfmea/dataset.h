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

#ifndef CFMEA_DATASET_H_
#define CFMEA_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfmea/linalg.h"

namespace cfmea {

// Per-column affine map into standardized units.
struct Standardizer {
  Vector mean;
  Vector stddev;

  // Columns with zero spread get stddev 1 so they map to a constant 0.
  static Standardizer Fit(const Matrix& features);

  Matrix Apply(const Matrix& raw) const;
  Matrix Invert(const Matrix& standardized) const;
};

// Tabular binary-classification data. Features are kept in standardized
// units once `standardizer` is set.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::string name;
  std::string label_column = "label";
  std::optional<Standardizer> standardizer;

  Index rows() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  // Throws kData when rows/labels disagree, entries are non-finite, labels
  // fall outside {0,1} or only one class is present.
  void Validate() const;

  Dataset Subset(const std::vector<Index>& rows) const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  uint64_t seed = 0;
};

// Row partition used by Split(). Exposed so loaders can fit standardization
// statistics on exactly the rows that Split() will later call "train".
struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};
SplitIndices ComputeSplit(const std::vector<int>& labels,
                          const SplitSpec& spec);

// Deterministic partition into (train, test). Falls back to a stratified
// draw when the plain shuffle leaves one side with a single class.
std::pair<Dataset, Dataset> Split(const Dataset& ds, const SplitSpec& spec);

enum class DatasetKind { kGmsc, kCreditFraud, kCaliforniaHousing, kSyntheticFile };

DatasetKind ParseDatasetKind(std::string_view name);
std::string_view DatasetKindName(DatasetKind kind);

struct LoadOptions {
  // Standardization statistics are fit on the train side of this split.
  SplitSpec split;
  // GMSC only: per-column winsorisation at these quantiles.
  double clip_low_quantile = 0.001;
  double clip_high_quantile = 0.999;
};

// Reads a comma-separated table with a header row. Rows with missing values
// are dropped; non-numeric columns are discarded.
Dataset LoadDataset(std::string_view name, const std::filesystem::path& path,
                    const LoadOptions& options = {});

// Uniform draws in [low, high], one independent value per entry.
Matrix GenerateRandomQueries(Index n, Index d, double low, double high,
                             uint64_t seed);

// Two unit-covariance Gaussian clusters centred at -s/2 and +s/2 on every
// axis, balanced labels, standardized on the train side of `standardize_on`.
Dataset MakeSynthetic(Index n, Index d, double class_separation, uint64_t seed,
                      const SplitSpec& standardize_on = {});

// Keeps every minority row and at most `max_ratio` majority rows per
// minority row. Row order of the result is the original order.
Dataset UndersampleMajority(const Dataset& ds, double max_ratio,
                            uint64_t seed);

// Directory layout: schema.json + data.csv (see docs/formats.md).
void SaveDataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset LoadSavedDataset(const std::filesystem::path& dir);

}  // namespace cfmea

#endif  // CFMEA_DATASET_H_
