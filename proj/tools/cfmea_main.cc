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

// Command line front end: each stage of the pipeline is its own subcommand.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cfmea/error.h"
#include "cfmea/experiment.h"
#include "cfmea/metrics.h"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  bool retrain = false;
};

cfmea::ExperimentConfig ResolveConfig(const GlobalFlags& g) {
  cfmea::ExperimentConfig c =
      g.config.empty() ? cfmea::DefaultExperimentConfig() : cfmea::LoadConfig(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.output_dir = g.out;
  c.Validate();
  return c;
}

void Log(const std::string& msg) { std::cerr << "[cfmea] " << msg << '\n'; }

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model extraction experiments against counterfactual-explaining services"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the base seed");
  app.add_option("--out", g.out, "Override the output directory");
  app.add_flag("--retrain", g.retrain, "Ignore existing checkpoints");

  auto* config_cmd = app.add_subcommand("config", "Print the effective config as JSON");
  auto* target_cmd = app.add_subcommand("train-target", "Train and save the target model");
  auto* explainer_cmd =
      app.add_subcommand("train-explainer", "Train and save the CF and private CF generators");
  std::string explainer_mode = "both";
  explainer_cmd->add_option("--mode", explainer_mode, "cf, private_cf or both")
      ->check(CLI::IsMember({"cf", "private_cf", "both"}));
  auto* ae_cmd = app.add_subcommand("train-autoencoder", "Train and save the realism autoencoder");

  auto* attack_cmd = app.add_subcommand("attack", "Run a single (scenario, budget, run) cell");
  std::string scenario;
  cfmea::Index budget = 0;
  int run_index = 0;
  attack_cmd->add_option("--scenario", scenario, "Scenario name")->required();
  attack_cmd->add_option("--budget", budget, "Query budget")->required();
  attack_cmd->add_option("--run", run_index, "Run index (seed = base + run)");

  auto* exp_cmd = app.add_subcommand("experiment", "Run the full scenario x budget x run grid");
  auto* tables_cmd = app.add_subcommand("tables", "Write the counterfactual quality tables");
  auto* plot_cmd = app.add_subcommand("plot", "Write curve files and an SVG from results.csv");
  bool no_svg = false;
  plot_cmd->add_flag("--no-svg", no_svg, "Only write the curve CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    const cfmea::ExperimentConfig config = ResolveConfig(g);
    const bool reuse = !g.retrain;
    const auto dir = cfmea::DatasetDir(config);

    if (*config_cmd) {
      std::cout << cfmea::ConfigToJson(config);
    } else if (*target_cmd) {
      const cfmea::DefenderAssets a = cfmea::PrepareDefender(config, {}, reuse);
      const auto pred = a.target.PredictClasses(a.test.features);
      cfmea::Index hits = 0;
      for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == a.test.labels[i];
      Log("target test accuracy " + Fmt(static_cast<double>(hits) / pred.size()) + ", saved to " +
          (dir / "target.ckpt").string());
    } else if (*explainer_cmd) {
      cfmea::AssetNeeds needs;
      needs.cf_generators = explainer_mode != "private_cf";
      needs.private_cf_generators = explainer_mode != "cf";
      cfmea::PrepareDefender(config, needs, reuse);
      Log("generators saved under " + dir.string());
    } else if (*ae_cmd) {
      cfmea::AssetNeeds needs;
      needs.autoencoder = true;
      cfmea::PrepareDefender(config, needs, reuse);
      Log("autoencoder saved to " + (dir / "autoencoder.ckpt").string());
    } else if (*attack_cmd) {
      const cfmea::Scenario s = cfmea::ParseScenario(scenario);
      const cfmea::DefenderAssets a =
          cfmea::PrepareDefender(config, cfmea::AssetNeeds::ForScenarios({s}), reuse);
      cfmea::ExperimentResult r;
      r.rows.push_back(cfmea::RunCell(config, a, s, budget, run_index));
      cfmea::WriteResultsCsv(r, "/dev/stdout");
      if (r.rows[0].status != "ok") return 1;
    } else if (*exp_cmd) {
      const cfmea::DefenderAssets a = cfmea::PrepareDefender(
          config, cfmea::AssetNeeds::ForScenarios(config.scenarios), reuse);
      const auto result = cfmea::RunExperiment(config, a, [](const cfmea::ResultRow& r) {
        Log(std::string(cfmea::ScenarioName(r.scenario)) + " budget=" +
            std::to_string(r.budget) + " run=" + std::to_string(r.run_index) +
            " agreement=" + Fmt(r.agreement) + (r.status == "ok" ? "" : " " + r.status));
      });
      for (const auto& agg : result.aggregates) {
        std::cout << cfmea::ScenarioName(agg.scenario) << ',' << agg.budget << ','
                  << Fmt(agg.mean) << ',' << Fmt(agg.stddev) << '\n';
      }
      Log("results written to " + (dir / "results.csv").string());
    } else if (*tables_cmd) {
      const cfmea::DefenderAssets a =
          cfmea::PrepareDefender(config, cfmea::AssetNeeds::All(), reuse);
      const cfmea::QualityTables t = cfmea::ReproduceQualityTables(a);
      cfmea::WriteQualityTables(t, cfmea::DatasetLabel(config), dir / "quality_tables.csv");
      std::cout << "prediction_gain cf=" << Fmt(t.gain_cf.mean)
                << " private_cf=" << Fmt(t.gain_private_cf.mean) << '\n'
                << "actionability cf=" << Fmt(t.actionability_cf.mean)
                << " private_cf=" << Fmt(t.actionability_private_cf.mean) << '\n'
                << "realism random=" << Fmt(t.realism_random.mean)
                << " cf=" << Fmt(t.realism_cf.mean)
                << " private_cf=" << Fmt(t.realism_private_cf.mean) << '\n';
    } else if (*plot_cmd) {
      const auto result = cfmea::ReadResultsCsv(dir / "results.csv");
      cfmea::PlotCurves(result, dir, !no_svg);
      Log("curves written under " + dir.string());
    }
  } catch (const cfmea::Error& e) {
    std::cerr << "error (" << cfmea::ErrorCodeName(e.code()) << "): " << e.what() << '\n';
    return 2;
  }
  return 0;
}
