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

#ifndef CFMEA_EXPERIMENT_H_
#define CFMEA_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfmea/attack.h"
#include "cfmea/dataset.h"
#include "cfmea/explainer.h"
#include "cfmea/metrics.h"
#include "cfmea/nn.h"
#include "cfmea/privacy.h"

namespace cfmea {

enum class Scenario {
  kKdCf,
  kDirectCf,
  kKdNoCf,
  kDirectNoCf,
  kKdPrivateCf,
  kDirectPrivateCf,
};

inline constexpr Scenario kAllScenarios[] = {
    Scenario::kKdCf,   Scenario::kDirectCf,    Scenario::kKdNoCf,
    Scenario::kDirectNoCf, Scenario::kKdPrivateCf, Scenario::kDirectPrivateCf};

std::string_view ScenarioName(Scenario s);
Scenario ParseScenario(std::string_view name);
bool UsesKd(Scenario s);
ExplanationMode ScenarioExplanation(Scenario s);

struct DatasetSource {
  // gmsc | credit_fraud | california_housing | synthetic-file | synthetic
  std::string name = "synthetic";
  std::string path;
  Index synthetic_rows = 2000;
  Index synthetic_dim = 10;
  double synthetic_separation = 3.0;
  SplitSpec split{0.8, 0};
  // Majority:minority cap applied to the target's training rows for
  // credit_fraud. Values <= 0 disable it.
  double undersample_ratio = 5.0;
};

struct AutoencoderSettings {
  double noise_std = 0.1;
  std::vector<int> hidden;  // empty: {d, ceil(d/2), d}
  TrainConfig train;
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<Scenario> scenarios{std::begin(kAllScenarios),
                                  std::end(kAllScenarios)};
  std::vector<Index> budgets = {50, 100, 200, 300, 500, 1000};
  int runs = 10;
  uint64_t seed = 0;

  TrainConfig target_train;
  TrainConfig threat_train = DefaultAttackTrainConfig();
  CounterGanConfig explainer;
  DpConfig dp;
  KdConfig kd;
  AutoencoderSettings autoencoder;

  Index query_pool_size = 1000;
  double query_low = -3.0;
  double query_high = 3.0;
  // Draw a fresh pool per run instead of subsets of one fixed pool.
  bool redraw_pool_per_run = false;
  bool cf_prediction_in_response = true;

  std::filesystem::path output_dir = "out";

  // Throws kConfiguration.
  void Validate() const;
};

ExperimentConfig DefaultExperimentConfig();

// JSON config files; every field is written explicitly.
std::string ConfigToJson(const ExperimentConfig& config);
ExperimentConfig ConfigFromJson(std::string_view text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
void SaveConfig(const ExperimentConfig& config,
                const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the canonical config JSON, output_dir excluded.
std::string ConfigHash(const ExperimentConfig& config);

// Run k of an experiment uses seed base + k.
inline uint64_t DeriveRunSeed(uint64_t base_seed, int run_index) {
  return base_seed + static_cast<uint64_t>(run_index);
}

// Short dataset label used in paths and CSV rows.
std::string DatasetLabel(const ExperimentConfig& config);

// Defender-side artifacts shared by every attack cell.
struct DefenderAssets {
  Dataset train;
  Dataset test;  // the evaluation set
  TrainedModel target;
  std::optional<GeneratorPair> cf_generators;
  std::optional<GeneratorPair> private_cf_generators;
  std::optional<TrainedModel> autoencoder;
  Matrix query_pool;
};

struct AssetNeeds {
  bool cf_generators = false;
  bool private_cf_generators = false;
  bool autoencoder = false;

  static AssetNeeds ForScenarios(const std::vector<Scenario>& scenarios);
  static AssetNeeds All() { return {true, true, true}; }
};

// Loads the dataset and the defender checkpoints under
// <output_dir>/<dataset>/, training and saving whatever is missing.
// With `reuse_checkpoints` false everything is retrained and overwritten.
DefenderAssets PrepareDefender(const ExperimentConfig& config,
                               const AssetNeeds& needs,
                               bool reuse_checkpoints = true);

// Dataset loading and split only.
std::pair<Dataset, Dataset> LoadExperimentData(const ExperimentConfig& config);

std::filesystem::path DatasetDir(const ExperimentConfig& config);

struct ResultRow {
  std::string dataset;
  Scenario scenario = Scenario::kDirectNoCf;
  Index budget = 0;
  int run_index = 0;
  double agreement = 0.0;
  std::optional<double> best_alpha;
  uint64_t derived_seed = 0;
  std::string config_hash;
  std::string status = "ok";  // "failed: <message>" on error
  double wall_time_seconds = 0.0;
};

struct AggregateRow {
  std::string dataset;
  Scenario scenario = Scenario::kDirectNoCf;
  Index budget = 0;
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::string config_hash;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  const AggregateRow* Find(Scenario s, Index budget) const;
};

// The query rows seen by run `run_index`: a seeded permutation of the pool
// (or a fresh pool), so smaller budgets are prefixes of larger ones.
Matrix RunQueryOrder(const ExperimentConfig& config,
                     const DefenderAssets& assets, int run_index);

// One (scenario, budget, run) cell. Deterministic given the config.
ResultRow RunCell(const ExperimentConfig& config, const DefenderAssets& assets,
                  Scenario scenario, Index budget, int run_index);

// Means and sample standard deviations over successful run rows.
std::vector<AggregateRow> Aggregate(const std::vector<ResultRow>& rows);

// Runs every missing cell, appending to <dataset dir>/results.csv as it
// goes, then rewrites the file in canonical order with aggregate rows.
// Wall-clock times go to timings.csv next to it.
using RowCallback = std::function<void(const ResultRow&)>;
ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const DefenderAssets& assets,
                               const RowCallback& on_row = {});
ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const RowCallback& on_row = {});

void WriteResultsCsv(const ExperimentResult& result,
                     const std::filesystem::path& path);
ExperimentResult ReadResultsCsv(const std::filesystem::path& path);

struct QualityTables {
  RowStats gain_cf;
  RowStats gain_private_cf;
  RowStats actionability_cf;
  RowStats actionability_private_cf;
  RowStats realism_random;
  RowStats realism_cf;
  RowStats realism_private_cf;
};

// Counterfactual quality over the whole query pool. Throws kConfiguration
// naming the first missing asset.
QualityTables ReproduceQualityTables(const DefenderAssets& assets);
void WriteQualityTables(const QualityTables& tables, std::string_view dataset,
                        const std::filesystem::path& path);

// Writes curves/<scenario>.csv (budget,mean,std) per scenario and, when
// `render_svg` is set, agreement.svg with a log-scaled budget axis.
// Throws kContract on a result without aggregate rows.
void PlotCurves(const ExperimentResult& result,
                const std::filesystem::path& out_dir, bool render_svg = true);

}  // namespace cfmea

#endif  // CFMEA_EXPERIMENT_H_
