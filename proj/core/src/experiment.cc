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

#include "cfmea/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "cfmea/checkpoint.h"
#include "cfmea/error.h"
#include "cfmea/models.h"
#include "cfmea/service.h"
#include "json.hpp"

namespace cfmea {

using nlohmann::json;

// --- scenarios ---------------------------------------------------------------

std::string_view ScenarioName(Scenario s) {
  switch (s) {
    case Scenario::kKdCf:
      return "kd_cf";
    case Scenario::kDirectCf:
      return "direct_cf";
    case Scenario::kKdNoCf:
      return "kd_nocf";
    case Scenario::kDirectNoCf:
      return "direct_nocf";
    case Scenario::kKdPrivateCf:
      return "kd_private_cf";
    case Scenario::kDirectPrivateCf:
      return "direct_private_cf";
  }
  return "unknown";
}

Scenario ParseScenario(std::string_view name) {
  for (Scenario s : kAllScenarios) {
    if (ScenarioName(s) == name) return s;
  }
  Fail(ErrorCode::kConfiguration, "unknown scenario '" + std::string(name) + "'");
}

bool UsesKd(Scenario s) {
  return s == Scenario::kKdCf || s == Scenario::kKdNoCf || s == Scenario::kKdPrivateCf;
}

ExplanationMode ScenarioExplanation(Scenario s) {
  switch (s) {
    case Scenario::kKdCf:
    case Scenario::kDirectCf:
      return ExplanationMode::kCf;
    case Scenario::kKdPrivateCf:
    case Scenario::kDirectPrivateCf:
      return ExplanationMode::kPrivateCf;
    default:
      return ExplanationMode::kNone;
  }
}

// --- config --------------------------------------------------------------

void ExperimentConfig::Validate() const {
  if (scenarios.empty()) Fail(ErrorCode::kConfiguration, "no scenarios selected");
  if (std::set<Scenario>(scenarios.begin(), scenarios.end()).size() != scenarios.size()) {
    Fail(ErrorCode::kConfiguration, "scenarios are listed twice");
  }
  if (budgets.empty()) Fail(ErrorCode::kConfiguration, "no budgets given");
  for (size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) Fail(ErrorCode::kConfiguration, "budgets must be >= 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) {
      Fail(ErrorCode::kConfiguration, "budgets must be strictly ascending");
    }
  }
  if (runs < 1) Fail(ErrorCode::kConfiguration, "runs must be >= 1");
  if (query_pool_size < budgets.back()) {
    Fail(ErrorCode::kConfiguration, "query pool is smaller than the largest budget");
  }
  if (!(query_low < query_high)) {
    Fail(ErrorCode::kConfiguration, "query_low must be below query_high");
  }
  if (dataset.name == "synthetic") {
    if (dataset.synthetic_rows < 4 || dataset.synthetic_dim < 2) {
      Fail(ErrorCode::kConfiguration, "synthetic dataset is too small");
    }
  } else {
    ParseDatasetKind(dataset.name);
    if (dataset.path.empty()) {
      Fail(ErrorCode::kConfiguration, "dataset '" + dataset.name + "' needs a path");
    }
  }
  if (!(dataset.split.train_fraction > 0.0 && dataset.split.train_fraction < 1.0)) {
    Fail(ErrorCode::kConfiguration, "train_fraction must be in (0, 1)");
  }
  target_train.Validate();
  threat_train.Validate();
  autoencoder.train.Validate();
  explainer.Validate();
  dp.Validate();
  kd.Validate();
}

ExperimentConfig DefaultExperimentConfig() { return ExperimentConfig(); }

namespace {

json ClipToJson(double clip) {
  if (std::isinf(clip)) return "inf";
  return clip;
}

double ClipFromJson(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return DpConfig::kNoClip;
    Fail(ErrorCode::kConfiguration, "l2_norm_clip must be a number or \"inf\"");
  }
  return j.get<double>();
}

json TrainToJson(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"seed", c.seed},
          {"early_stop_patience", c.early_stop_patience},
          {"validation_fraction", c.validation_fraction}};
}

// Reads key into *out when present.
template <typename T>
void Get(const json& j, const char* key, T* out) {
  auto it = j.find(key);
  if (it != j.end()) *out = it->template get<T>();
}

void CheckKeys(const json& j, std::initializer_list<const char*> keys,
               const std::string& where) {
  if (!j.is_object()) Fail(ErrorCode::kConfiguration, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) {
          return it.key() == k;
        }) == keys.end()) {
      Fail(ErrorCode::kConfiguration, "unknown key '" + it.key() + "' in " + where);
    }
  }
}

TrainConfig TrainFromJson(const json& j, TrainConfig c, const std::string& where) {
  CheckKeys(j,
            {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
             "adam_epsilon", "seed", "early_stop_patience", "validation_fraction"},
            where);
  Get(j, "epochs", &c.epochs);
  Get(j, "batch_size", &c.batch_size);
  Get(j, "learning_rate", &c.learning_rate);
  Get(j, "adam_beta1", &c.adam_beta1);
  Get(j, "adam_beta2", &c.adam_beta2);
  Get(j, "adam_epsilon", &c.adam_epsilon);
  Get(j, "seed", &c.seed);
  Get(j, "early_stop_patience", &c.early_stop_patience);
  Get(j, "validation_fraction", &c.validation_fraction);
  return c;
}

json DpToJson(const DpConfig& dp) {
  return {{"l2_norm_clip", ClipToJson(dp.l2_norm_clip)},
          {"noise_multiplier", dp.noise_multiplier},
          {"microbatch_size", dp.microbatch_size},
          {"seed", dp.seed}};
}

json ConfigJson(const ExperimentConfig& c, bool with_output_dir) {
  json j;
  j["dataset"] = {{"name", c.dataset.name},
                  {"path", c.dataset.path},
                  {"synthetic_rows", c.dataset.synthetic_rows},
                  {"synthetic_dim", c.dataset.synthetic_dim},
                  {"synthetic_separation", c.dataset.synthetic_separation},
                  {"train_fraction", c.dataset.split.train_fraction},
                  {"split_seed", c.dataset.split.seed},
                  {"undersample_ratio", c.dataset.undersample_ratio}};
  std::vector<std::string> scenarios;
  for (Scenario s : c.scenarios) scenarios.emplace_back(ScenarioName(s));
  j["scenarios"] = scenarios;
  j["budgets"] = c.budgets;
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["target_train"] = TrainToJson(c.target_train);
  j["threat_train"] = TrainToJson(c.threat_train);
  j["explainer"] = {{"generator_hidden", c.explainer.generator_hidden},
                    {"discriminator_hidden", c.explainer.discriminator_hidden},
                    {"dropout", c.explainer.dropout},
                    {"lambda_cls", c.explainer.lambda_cls},
                    {"lambda_reg", c.explainer.lambda_reg},
                    {"steps", c.explainer.steps},
                    {"batch_size", c.explainer.batch_size},
                    {"lr_g", c.explainer.lr_g},
                    {"lr_d", c.explainer.lr_d},
                    {"seed", c.explainer.seed}};
  j["dp"] = DpToJson(c.dp);
  j["kd"] = {{"temperature", c.kd.temperature},
             {"alpha_sweep", c.kd.alpha_sweep},
             {"divergence", c.kd.divergence == Divergence::kJensenShannon ? "js" : "kl"}};
  j["autoencoder"] = {{"noise_std", c.autoencoder.noise_std},
                      {"hidden", c.autoencoder.hidden},
                      {"train", TrainToJson(c.autoencoder.train)}};
  j["query_pool_size"] = c.query_pool_size;
  j["query_low"] = c.query_low;
  j["query_high"] = c.query_high;
  j["redraw_pool_per_run"] = c.redraw_pool_per_run;
  j["cf_prediction_in_response"] = c.cf_prediction_in_response;
  if (with_output_dir) j["output_dir"] = c.output_dir.string();
  return j;
}

// The part of the config that determines the defender's trained assets.
std::string DefenderHash(const ExperimentConfig& c) {
  json full = ConfigJson(c, false);
  json j = {{"dataset", full["dataset"]},       {"seed", c.seed},
            {"target_train", full["target_train"]}, {"explainer", full["explainer"]},
            {"dp", full["dp"]},                 {"autoencoder", full["autoencoder"]}};
  const std::string text = j.dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(text.data(), text.size())));
  return buf;
}

}  // namespace

std::string ConfigToJson(const ExperimentConfig& config) {
  return ConfigJson(config, true).dump(2) + "\n";
}

ExperimentConfig ConfigFromJson(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    CheckKeys(j,
              {"dataset", "scenarios", "budgets", "runs", "seed", "target_train",
               "threat_train", "explainer", "dp", "kd", "autoencoder",
               "query_pool_size", "query_low", "query_high", "redraw_pool_per_run",
               "cf_prediction_in_response", "output_dir"},
              "config");
    if (j.contains("dataset")) {
      const json& d = j["dataset"];
      CheckKeys(d,
                {"name", "path", "synthetic_rows", "synthetic_dim",
                 "synthetic_separation", "train_fraction", "split_seed",
                 "undersample_ratio"},
                "dataset");
      Get(d, "name", &c.dataset.name);
      Get(d, "path", &c.dataset.path);
      Get(d, "synthetic_rows", &c.dataset.synthetic_rows);
      Get(d, "synthetic_dim", &c.dataset.synthetic_dim);
      Get(d, "synthetic_separation", &c.dataset.synthetic_separation);
      Get(d, "train_fraction", &c.dataset.split.train_fraction);
      Get(d, "split_seed", &c.dataset.split.seed);
      Get(d, "undersample_ratio", &c.dataset.undersample_ratio);
    }
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& s : j["scenarios"]) c.scenarios.push_back(ParseScenario(s.get<std::string>()));
    }
    Get(j, "budgets", &c.budgets);
    Get(j, "runs", &c.runs);
    Get(j, "seed", &c.seed);
    if (j.contains("target_train")) {
      c.target_train = TrainFromJson(j["target_train"], c.target_train, "target_train");
    }
    if (j.contains("threat_train")) {
      c.threat_train = TrainFromJson(j["threat_train"], c.threat_train, "threat_train");
    }
    if (j.contains("explainer")) {
      const json& e = j["explainer"];
      CheckKeys(e,
                {"generator_hidden", "discriminator_hidden", "dropout", "lambda_cls",
                 "lambda_reg", "steps", "batch_size", "lr_g", "lr_d", "seed"},
                "explainer");
      Get(e, "generator_hidden", &c.explainer.generator_hidden);
      Get(e, "discriminator_hidden", &c.explainer.discriminator_hidden);
      Get(e, "dropout", &c.explainer.dropout);
      Get(e, "lambda_cls", &c.explainer.lambda_cls);
      Get(e, "lambda_reg", &c.explainer.lambda_reg);
      Get(e, "steps", &c.explainer.steps);
      Get(e, "batch_size", &c.explainer.batch_size);
      Get(e, "lr_g", &c.explainer.lr_g);
      Get(e, "lr_d", &c.explainer.lr_d);
      Get(e, "seed", &c.explainer.seed);
    }
    if (j.contains("dp")) {
      const json& d = j["dp"];
      CheckKeys(d, {"l2_norm_clip", "noise_multiplier", "microbatch_size", "seed"}, "dp");
      if (d.contains("l2_norm_clip")) c.dp.l2_norm_clip = ClipFromJson(d["l2_norm_clip"]);
      Get(d, "noise_multiplier", &c.dp.noise_multiplier);
      Get(d, "microbatch_size", &c.dp.microbatch_size);
      Get(d, "seed", &c.dp.seed);
    }
    if (j.contains("kd")) {
      const json& k = j["kd"];
      CheckKeys(k, {"temperature", "alpha_sweep", "divergence"}, "kd");
      Get(k, "temperature", &c.kd.temperature);
      Get(k, "alpha_sweep", &c.kd.alpha_sweep);
      if (k.contains("divergence")) {
        const std::string div = k["divergence"].get<std::string>();
        if (div == "js") {
          c.kd.divergence = Divergence::kJensenShannon;
        } else if (div == "kl") {
          c.kd.divergence = Divergence::kKullbackLeibler;
        } else {
          Fail(ErrorCode::kConfiguration, "divergence must be js or kl");
        }
      }
    }
    if (j.contains("autoencoder")) {
      const json& a = j["autoencoder"];
      CheckKeys(a, {"noise_std", "hidden", "train"}, "autoencoder");
      Get(a, "noise_std", &c.autoencoder.noise_std);
      Get(a, "hidden", &c.autoencoder.hidden);
      if (a.contains("train")) {
        c.autoencoder.train =
            TrainFromJson(a["train"], c.autoencoder.train, "autoencoder.train");
      }
    }
    Get(j, "query_pool_size", &c.query_pool_size);
    Get(j, "query_low", &c.query_low);
    Get(j, "query_high", &c.query_high);
    Get(j, "redraw_pool_per_run", &c.redraw_pool_per_run);
    Get(j, "cf_prediction_in_response", &c.cf_prediction_in_response);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("bad config value: ") + e.what());
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kInput, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromJson(ss.str());
}

void SaveConfig(const ExperimentConfig& config, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write config " + path.string());
  out << ConfigToJson(config);
}

std::string ConfigHash(const ExperimentConfig& config) {
  const std::string text = ConfigJson(config, false).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a64(text.data(), text.size())));
  return buf;
}

std::string DatasetLabel(const ExperimentConfig& config) { return config.dataset.name; }

std::filesystem::path DatasetDir(const ExperimentConfig& config) {
  return config.output_dir / DatasetLabel(config);
}

// --- defender ----------------------------------------------------------------

AssetNeeds AssetNeeds::ForScenarios(const std::vector<Scenario>& scenarios) {
  AssetNeeds n;
  for (Scenario s : scenarios) {
    if (ScenarioExplanation(s) == ExplanationMode::kCf) n.cf_generators = true;
    if (ScenarioExplanation(s) == ExplanationMode::kPrivateCf) n.private_cf_generators = true;
  }
  return n;
}

std::pair<Dataset, Dataset> LoadExperimentData(const ExperimentConfig& config) {
  const DatasetSource& src = config.dataset;
  std::pair<Dataset, Dataset> out;
  if (src.name == "synthetic") {
    Dataset ds = MakeSynthetic(src.synthetic_rows, src.synthetic_dim,
                               src.synthetic_separation,
                               DeriveSeed(config.seed, "synthetic-data"), src.split);
    out = Split(ds, src.split);
  } else {
    LoadOptions opts;
    opts.split = src.split;
    out = Split(LoadDataset(src.name, src.path, opts), src.split);
    if (ParseDatasetKind(src.name) == DatasetKind::kCreditFraud &&
        src.undersample_ratio > 0.0) {
      out.first = UndersampleMajority(out.first, src.undersample_ratio,
                                      DeriveSeed(config.seed, "undersample"));
    }
  }
  return out;
}

namespace {

uint64_t ComponentSeed(const ExperimentConfig& c, uint64_t component_seed,
                       std::string_view stream) {
  return DeriveSeed(c.seed + component_seed, stream);
}

CounterGanConfig ExplainerConfig(const ExperimentConfig& c, bool private_mode) {
  CounterGanConfig e = c.explainer;
  // Both variants share initialisation so they differ only by the DP step.
  e.seed = ComponentSeed(c, c.explainer.seed, "explainer");
  e.dp.reset();
  if (private_mode) {
    e.dp = c.dp;
    e.dp->seed = ComponentSeed(c, c.dp.seed, "dp");
  }
  return e;
}

// Reuses a checkpoint only when it was produced by the same defender config.
TrainedModel LoadOrTrain(const std::filesystem::path& path, bool reuse,
                         const std::string& hash,
                         const std::function<TrainedModel()>& train) {
  if (reuse && std::filesystem::exists(path)) {
    try {
      TrainedModel m = LoadCheckpoint(path);
      if (m.metadata["defender_hash"] == hash) return m;
    } catch (const Error&) {
      // Unreadable: retrain below.
    }
  }
  TrainedModel m = train();
  m.metadata["defender_hash"] = hash;
  SaveCheckpoint(m, path);
  return m;
}

std::optional<GeneratorPair> PrepareGenerators(const ExperimentConfig& config,
                                               const DefenderAssets& a,
                                               bool private_mode, bool reuse,
                                               const std::string& hash) {
  const std::filesystem::path dir = DatasetDir(config);
  const std::string prefix = private_mode ? "gen_dp_" : "gen_cf_";
  const std::filesystem::path p0 = dir / (prefix + "0.ckpt");
  const std::filesystem::path p1 = dir / (prefix + "1.ckpt");
  if (reuse && std::filesystem::exists(p0) && std::filesystem::exists(p1)) {
    try {
      GeneratorPair pair{LoadGenerator(p0), LoadGenerator(p1)};
      if (pair.to_class0.model.metadata["defender_hash"] == hash &&
          pair.to_class1.model.metadata["defender_hash"] == hash &&
          pair.to_class0.target_class == 0 && pair.to_class1.target_class == 1 &&
          pair.dp() == private_mode) {
        return pair;
      }
    } catch (const Error&) {
    }
  }
  GeneratorPair pair = TrainGeneratorPair(a.target, a.train, ExplainerConfig(config, private_mode));
  pair.to_class0.model.metadata["defender_hash"] = hash;
  pair.to_class1.model.metadata["defender_hash"] = hash;
  SaveGenerator(pair.to_class0, p0);
  SaveGenerator(pair.to_class1, p1);
  return pair;
}

}  // namespace

DefenderAssets PrepareDefender(const ExperimentConfig& config,
                               const AssetNeeds& needs, bool reuse_checkpoints) {
  config.Validate();
  DefenderAssets a;
  std::tie(a.train, a.test) = LoadExperimentData(config);
  const int d = static_cast<int>(a.train.dim());
  const std::filesystem::path dir = DatasetDir(config);
  std::filesystem::create_directories(dir);
  const std::string hash = DefenderHash(config);

  a.target = LoadOrTrain(dir / "target.ckpt", reuse_checkpoints, hash, [&] {
        TrainConfig tc = config.target_train;
        tc.seed = ComponentSeed(config, config.target_train.seed, "target-train");
        TrainedModel m = TrainClassifier(
            BuildTargetSpec(d, ComponentSeed(config, config.target_train.seed, "target-init")),
            a.train, tc);
        m.metadata["role"] = "target";
        return m;
      });

  if (needs.cf_generators) {
    a.cf_generators = PrepareGenerators(config, a, false, reuse_checkpoints, hash);
  }
  if (needs.private_cf_generators) {
    a.private_cf_generators = PrepareGenerators(config, a, true, reuse_checkpoints, hash);
  }
  if (needs.autoencoder) {
    a.autoencoder = LoadOrTrain(dir / "autoencoder.ckpt", reuse_checkpoints, hash, [&] {
          TrainConfig tc = config.autoencoder.train;
          tc.seed = ComponentSeed(config, tc.seed, "autoencoder");
          TrainedModel m = TrainDenoisingAutoencoder(a.train, config.autoencoder.noise_std,
                                                     tc, config.autoencoder.hidden);
          return m;
        });
  }
  a.query_pool = GenerateRandomQueries(config.query_pool_size, d, config.query_low,
                                       config.query_high,
                                       DeriveSeed(config.seed, "query-pool"));
  return a;
}

// --- attack cells --------------------------------------------------------

Matrix RunQueryOrder(const ExperimentConfig& config, const DefenderAssets& assets,
                     int run_index) {
  const uint64_t run_seed = DeriveRunSeed(config.seed, run_index);
  if (config.redraw_pool_per_run) {
    return GenerateRandomQueries(config.query_pool_size, assets.train.dim(),
                                 config.query_low, config.query_high,
                                 DeriveSeed(run_seed, "query-pool"));
  }
  std::vector<Index> order(static_cast<size_t>(assets.query_pool.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = MakeRng(run_seed, "query-order");
  std::shuffle(order.begin(), order.end(), rng);
  return GatherRows(assets.query_pool, order);
}

ResultRow RunCell(const ExperimentConfig& config, const DefenderAssets& assets,
                  Scenario scenario, Index budget, int run_index) {
  ResultRow row;
  row.dataset = DatasetLabel(config);
  row.scenario = scenario;
  row.budget = budget;
  row.run_index = run_index;
  row.derived_seed = DeriveRunSeed(config.seed, run_index);
  row.config_hash = ConfigHash(config);
  const auto start = std::chrono::steady_clock::now();
  try {
    std::optional<GeneratorPair> generators;
    const ExplanationMode mode = ScenarioExplanation(scenario);
    if (mode == ExplanationMode::kCf) {
      if (!assets.cf_generators) Fail(ErrorCode::kConfiguration, "missing CF generators");
      generators = assets.cf_generators;
    } else if (mode == ExplanationMode::kPrivateCf) {
      if (!assets.private_cf_generators) {
        Fail(ErrorCode::kConfiguration, "missing private CF generators");
      }
      generators = assets.private_cf_generators;
    }
    Service service = Service::Deploy(assets.target, std::move(generators),
                                      {mode, config.cf_prediction_in_response},
                                      {budget, false});
    const Matrix pool = RunQueryOrder(config, assets, run_index);
    const AttackDataset data = Collect(service, pool, budget);

    const int d = static_cast<int>(assets.train.dim());
    const MlpSpec spec = BuildThreatSpec(d, DeriveSeed(row.derived_seed, "threat-init"));
    TrainConfig tc = config.threat_train;
    tc.seed = DeriveSeed(row.derived_seed + config.threat_train.seed, "threat-train");
    if (UsesKd(scenario)) {
      SweepResult sweep =
          SweepAlpha(data, spec, config.kd, tc, assets.test.features, assets.target);
      row.agreement = *std::max_element(sweep.agreements.begin(), sweep.agreements.end());
      row.best_alpha = sweep.best_alpha;
    } else {
      TrainedModel m = DirectTrain(data, spec, tc);
      row.agreement = Agreement(m, assets.target, assets.test.features);
    }
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
    row.agreement = std::nan("");
  }
  row.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::vector<AggregateRow> Aggregate(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<double>> values;
  for (const ResultRow& r : rows) {
    if (r.status != "ok") continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.dataset == r.dataset && a.scenario == r.scenario && a.budget == r.budget;
    });
    if (it == out.end()) {
      out.push_back({r.dataset, r.scenario, r.budget, 0, 0.0, 0.0, r.config_hash});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<size_t>(it - out.begin())].push_back(r.agreement);
  }
  for (size_t i = 0; i < out.size(); ++i) {
    Vector v = Eigen::Map<const Vector>(values[i].data(), static_cast<Index>(values[i].size()));
    const RowStats s = RowStats::FromValues(v);
    out[i].count = static_cast<int>(values[i].size());
    out[i].mean = s.mean;
    out[i].stddev = s.stddev;
  }
  return out;
}

const AggregateRow* ExperimentResult::Find(Scenario s, Index budget) const {
  for (const AggregateRow& a : aggregates) {
    if (a.scenario == s && a.budget == budget) return &a;
  }
  return nullptr;
}

}  // namespace cfmea
