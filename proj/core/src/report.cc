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

// Result persistence, resumable experiment driver, quality tables and curves.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "cfmea/error.h"
#include "cfmea/experiment.h"
#include "csv.h"

namespace cfmea {
namespace {

using internal::CsvEscape;
using internal::FormatDouble;

constexpr const char* kResultsHeader =
    "row_type,dataset,scenario,budget,run_index,n_runs,agreement,agreement_std,"
    "best_alpha,derived_seed,config_hash,status";

std::string RunLine(const ResultRow& r) {
  std::ostringstream os;
  os << "run," << CsvEscape(r.dataset) << ',' << ScenarioName(r.scenario) << ','
     << r.budget << ',' << r.run_index << ",1," << internal::FormatDoubleExact(r.agreement) << ",,"
     << (r.best_alpha ? FormatDouble(*r.best_alpha) : "") << ',' << r.derived_seed
     << ',' << r.config_hash << ',' << CsvEscape(r.status);
  return os.str();
}

std::string AggregateLine(const AggregateRow& a) {
  std::ostringstream os;
  os << "aggregate," << CsvEscape(a.dataset) << ',' << ScenarioName(a.scenario) << ','
     << a.budget << ",," << a.count << ',' << FormatDouble(a.mean) << ','
     << FormatDouble(a.stddev) << ",,," << a.config_hash << ",ok";
  return os.str();
}

using CellKey = std::tuple<Scenario, Index, int>;

// Sorts rows into the config's scenario order, then budget, then run.
void SortCanonical(const ExperimentConfig& config, std::vector<ResultRow>* rows) {
  auto rank = [&](Scenario s) {
    return std::find(config.scenarios.begin(), config.scenarios.end(), s) -
           config.scenarios.begin();
  };
  std::stable_sort(rows->begin(), rows->end(), [&](const ResultRow& a, const ResultRow& b) {
    return std::make_tuple(rank(a.scenario), a.budget, a.run_index) <
           std::make_tuple(rank(b.scenario), b.budget, b.run_index);
  });
}

double ParseNumber(const std::string& text, const std::filesystem::path& path) {
  double v = 0.0;
  if (text == "nan") return std::nan("");
  if (!internal::ParseDouble(text, &v)) {
    Fail(ErrorCode::kInput, "bad number '" + text + "' in " + path.string());
  }
  return v;
}

void WriteSvg(const ExperimentResult& result, const std::filesystem::path& path) {
  constexpr double kW = 640, kH = 420, kLeft = 60, kRight = 170, kTop = 20, kBottom = 50;
  Index bmin = result.aggregates.front().budget, bmax = bmin;
  double ymin = 1.0, ymax = 0.0;
  for (const auto& a : result.aggregates) {
    bmin = std::min(bmin, a.budget);
    bmax = std::max(bmax, a.budget);
    ymin = std::min(ymin, a.mean);
    ymax = std::max(ymax, a.mean);
  }
  ymin = std::max(0.0, std::floor(ymin * 10.0) / 10.0);
  ymax = std::min(1.0, std::ceil(ymax * 10.0) / 10.0);
  if (ymax <= ymin) ymax = ymin + 0.1;
  const double lx0 = std::log10(static_cast<double>(bmin));
  double lx1 = std::log10(static_cast<double>(bmax));
  if (lx1 <= lx0) lx1 = lx0 + 1.0;
  auto px = [&](Index b) {
    return kLeft + (std::log10(static_cast<double>(b)) - lx0) / (lx1 - lx0) *
                       (kW - kLeft - kRight);
  };
  auto py = [&](double y) {
    return kH - kBottom - (y - ymin) / (ymax - ymin) * (kH - kTop - kBottom);
  };
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                  "#d62728", "#9467bd", "#8c564b"};
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight
      << "\" y2=\"" << kH - kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kH - kBottom << "\" stroke=\"black\"/>\n";
  std::vector<Index> budgets;
  for (const auto& a : result.aggregates) budgets.push_back(a.budget);
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  for (Index b : budgets) {
    out << "<text x=\"" << px(b) << "\" y=\"" << kH - kBottom + 15
        << "\" text-anchor=\"middle\">" << b << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double y = ymin + (ymax - ymin) * k / 5.0;
    out << "<text x=\"" << kLeft - 5 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << FormatDouble(std::round(y * 1000.0) / 1000.0) << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\">queries (log scale)</text>\n";
  out << "<text x=\"14\" y=\"" << (kTop + kH - kBottom) / 2
      << "\" transform=\"rotate(-90 14," << (kTop + kH - kBottom) / 2
      << ")\" text-anchor=\"middle\">agreement</text>\n";
  int series = 0;
  for (Scenario s : kAllScenarios) {
    std::vector<const AggregateRow*> pts;
    for (const auto& a : result.aggregates) {
      if (a.scenario == s) pts.push_back(&a);
    }
    if (pts.empty()) continue;
    std::sort(pts.begin(), pts.end(),
              [](const AggregateRow* a, const AggregateRow* b) { return a->budget < b->budget; });
    const char* color = kColors[series % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* p : pts) out << px(p->budget) << ',' << py(p->mean) << ' ';
    out << "\"/>\n";
    const double ly = kTop + 15.0 * series;
    out << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly << "\" x2=\""
        << kW - kRight + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kW - kRight + 35 << "\" y=\"" << ly + 4 << "\">"
        << ScenarioName(s) << "</text>\n";
    ++series;
  }
  out << "</svg>\n";
}

}  // namespace

void WriteResultsCsv(const ExperimentResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write " + path.string());
  out << kResultsHeader << '\n';
  for (const auto& r : result.rows) out << RunLine(r) << '\n';
  for (const auto& a : result.aggregates) out << AggregateLine(a) << '\n';
}

ExperimentResult ReadResultsCsv(const std::filesystem::path& path) {
  const internal::CsvTable t = internal::ReadCsv(path);
  std::string header;
  for (size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
  if (header != kResultsHeader) Fail(ErrorCode::kInput, "unexpected results header in " + path.string());
  ExperimentResult result;
  for (const auto& f : t.rows) {
    if (f[0] == "run") {
      ResultRow r;
      r.dataset = f[1];
      r.scenario = ParseScenario(f[2]);
      r.budget = static_cast<Index>(ParseNumber(f[3], path));
      r.run_index = static_cast<int>(ParseNumber(f[4], path));
      r.agreement = ParseNumber(f[6], path);
      if (!f[8].empty()) r.best_alpha = ParseNumber(f[8], path);
      r.derived_seed = std::stoull(f[9]);
      r.config_hash = f[10];
      r.status = f[11];
      result.rows.push_back(std::move(r));
    } else if (f[0] == "aggregate") {
      AggregateRow a;
      a.dataset = f[1];
      a.scenario = ParseScenario(f[2]);
      a.budget = static_cast<Index>(ParseNumber(f[3], path));
      a.count = static_cast<int>(ParseNumber(f[5], path));
      a.mean = ParseNumber(f[6], path);
      a.stddev = ParseNumber(f[7], path);
      a.config_hash = f[10];
      result.aggregates.push_back(std::move(a));
    } else {
      Fail(ErrorCode::kInput, "unknown row_type '" + f[0] + "' in " + path.string());
    }
  }
  return result;
}

ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const DefenderAssets& assets, const RowCallback& on_row) {
  config.Validate();
  const std::filesystem::path dir = DatasetDir(config);
  std::filesystem::create_directories(dir);
  const std::filesystem::path results_path = dir / "results.csv";
  const std::filesystem::path timings_path = dir / "timings.csv";
  const std::string hash = ConfigHash(config);

  // Finished cells from an earlier, possibly interrupted, invocation.
  std::map<CellKey, ResultRow> done;
  if (std::filesystem::exists(results_path)) {
    try {
      for (ResultRow& r : ReadResultsCsv(results_path).rows) {
        if (r.config_hash == hash && r.status == "ok") {
          done[{r.scenario, r.budget, r.run_index}] = std::move(r);
        }
      }
    } catch (const Error&) {
      done.clear();
    }
  }
  ExperimentResult seed_file;
  for (const auto& [key, row] : done) seed_file.rows.push_back(row);
  SortCanonical(config, &seed_file.rows);
  WriteResultsCsv(seed_file, results_path);
  const bool timings_exist = std::filesystem::exists(timings_path) && !done.empty();
  std::ofstream timings(timings_path, timings_exist ? std::ios::app : std::ios::trunc);
  if (!timings_exist) timings << "scenario,budget,run_index,wall_time_seconds\n";
  std::ofstream append(results_path, std::ios::app);

  std::vector<ResultRow> rows = seed_file.rows;
  for (int run = 0; run < config.runs; ++run) {
    for (Index budget : config.budgets) {
      for (Scenario s : config.scenarios) {
        if (done.count({s, budget, run}) != 0) continue;
        ResultRow r = RunCell(config, assets, s, budget, run);
        append << RunLine(r) << '\n' << std::flush;
        timings << ScenarioName(s) << ',' << budget << ',' << run << ','
                << FormatDouble(r.wall_time_seconds) << '\n'
                << std::flush;
        if (on_row) on_row(r);
        rows.push_back(std::move(r));
      }
    }
  }
  append.close();

  ExperimentResult result;
  result.rows = std::move(rows);
  SortCanonical(config, &result.rows);
  result.aggregates = Aggregate(result.rows);
  WriteResultsCsv(result, results_path);
  return result;
}

ExperimentResult RunExperiment(const ExperimentConfig& config, const RowCallback& on_row) {
  const DefenderAssets assets =
      PrepareDefender(config, AssetNeeds::ForScenarios(config.scenarios));
  return RunExperiment(config, assets, on_row);
}

QualityTables ReproduceQualityTables(const DefenderAssets& assets) {
  if (!assets.cf_generators) Fail(ErrorCode::kConfiguration, "missing asset: gen_cf generators");
  if (!assets.private_cf_generators) {
    Fail(ErrorCode::kConfiguration, "missing asset: gen_dp generators");
  }
  if (!assets.autoencoder) Fail(ErrorCode::kConfiguration, "missing asset: autoencoder");
  if (assets.query_pool.rows() == 0) Fail(ErrorCode::kConfiguration, "missing asset: query pool");
  const CfBatch cf = GenerateCfs(*assets.cf_generators, assets.target, assets.query_pool);
  const CfBatch dp = GenerateCfs(*assets.private_cf_generators, assets.target, assets.query_pool);
  QualityTables t;
  t.gain_cf = PredictionGains(cf.fx, cf.fc);
  t.gain_private_cf = PredictionGains(dp.fx, dp.fc);
  t.actionability_cf = Actionability(cf.x, cf.c);
  t.actionability_private_cf = Actionability(dp.x, dp.c);
  t.realism_random = Realism(*assets.autoencoder, assets.query_pool);
  t.realism_cf = Realism(*assets.autoencoder, cf.c);
  t.realism_private_cf = Realism(*assets.autoencoder, dp.c);
  return t;
}

void WriteQualityTables(const QualityTables& tables, std::string_view dataset,
                        const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write " + path.string());
  out << "table,dataset,metric,source,mean,std,count\n";
  auto line = [&](const char* table, const char* metric, const char* source,
                  const RowStats& s) {
    out << table << ',' << CsvEscape(dataset) << ',' << metric << ',' << source << ','
        << FormatDouble(s.mean) << ',' << FormatDouble(s.stddev) << ',' << s.values.size()
        << '\n';
  };
  line("cf_quality", "prediction_gain", "cf", tables.gain_cf);
  line("cf_quality", "prediction_gain", "private_cf", tables.gain_private_cf);
  line("cf_quality", "actionability", "cf", tables.actionability_cf);
  line("cf_quality", "actionability", "private_cf", tables.actionability_private_cf);
  line("realism", "realism", "random", tables.realism_random);
  line("realism", "realism", "cf", tables.realism_cf);
  line("realism", "realism", "private_cf", tables.realism_private_cf);
}

void PlotCurves(const ExperimentResult& result, const std::filesystem::path& out_dir,
                bool render_svg) {
  if (result.aggregates.empty()) {
    Fail(ErrorCode::kContract, "result has no aggregate rows to plot");
  }
  const std::filesystem::path curves = out_dir / "curves";
  std::filesystem::create_directories(curves);
  for (Scenario s : kAllScenarios) {
    std::vector<const AggregateRow*> pts;
    for (const auto& a : result.aggregates) {
      if (a.scenario == s) pts.push_back(&a);
    }
    if (pts.empty()) continue;
    std::sort(pts.begin(), pts.end(),
              [](const AggregateRow* a, const AggregateRow* b) { return a->budget < b->budget; });
    std::ofstream out(curves / (std::string(ScenarioName(s)) + ".csv"));
    if (!out) Fail(ErrorCode::kInput, "cannot write curves under " + curves.string());
    out << "budget,mean,std\n";
    for (const auto* p : pts) {
      out << p->budget << ',' << FormatDouble(p->mean) << ',' << FormatDouble(p->stddev) << '\n';
    }
  }
  if (render_svg) WriteSvg(result, out_dir / "agreement.svg");
}

}  // namespace cfmea
