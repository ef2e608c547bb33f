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

#include "cfmea/checkpoint.h"

#include <fstream>
#include <sstream>
#include <string>

#include "cfmea/dataset.h"
#include "cfmea/error.h"
#include "json.hpp"

namespace cfmea {

using nlohmann::json;

namespace {

json MatrixToJson(const Matrix& m) {
  return {{"shape", {m.rows(), m.cols()}},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

json VectorToJson(const Vector& v) {
  return {{"shape", {v.size()}},
          {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

Matrix MatrixFromJson(const json& j) {
  const auto shape = j.at("shape").get<std::vector<Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 ||
      static_cast<Index>(data.size()) != shape[0] * shape[1]) {
    Fail(ErrorCode::kInput, "matrix shape does not match its data");
  }
  return Eigen::Map<const Matrix>(data.data(), shape[0], shape[1]);
}

Vector VectorFromJson(const json& j) {
  const auto shape = j.at("shape").get<std::vector<Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 1 || static_cast<Index>(data.size()) != shape[0]) {
    Fail(ErrorCode::kInput, "vector shape does not match its data");
  }
  return Eigen::Map<const Vector>(data.data(), shape[0]);
}

}  // namespace

std::string CheckpointToString(const TrainedModel& model,
                               const Matrix& probe_inputs) {
  json j;
  j["format"] = "cfmea-checkpoint";
  j["version"] = 1;
  j["spec"] = {{"layer_sizes", model.spec.layer_sizes},
               {"hidden_activation", ActivationName(model.spec.hidden_activation)},
               {"output_activation", ActivationName(model.spec.output_activation)},
               {"dropout_after_hidden", model.spec.dropout_after_hidden},
               {"init", "lecun"},
               {"seed", model.spec.seed}};
  json layers = json::array();
  for (const auto& layer : model.params.layers) {
    layers.push_back({{"weight", MatrixToJson(layer.weight)},
                      {"bias", VectorToJson(layer.bias)}});
  }
  j["layers"] = std::move(layers);
  if (model.standardizer) {
    j["standardizer"] = {{"mean", VectorToJson(model.standardizer->mean)},
                         {"stddev", VectorToJson(model.standardizer->stddev)}};
  } else {
    j["standardizer"] = nullptr;
  }
  j["metadata"] = model.metadata;

  const Matrix probe = probe_inputs.size() > 0
                           ? probe_inputs
                           : GenerateRandomQueries(4, model.spec.input_dim(),
                                                   -3.0, 3.0, model.spec.seed);
  j["probe"] = {{"inputs", MatrixToJson(probe)},
                {"outputs", MatrixToJson(model.Predict(probe))}};
  return j.dump(1);
}

TrainedModel CheckpointFromString(const std::string& text) {
  TrainedModel model;
  Matrix probe_in;
  Matrix probe_out;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "cfmea-checkpoint") {
      Fail(ErrorCode::kInput, "not a cfmea checkpoint");
    }
    const json& spec = j.at("spec");
    model.spec.layer_sizes = spec.at("layer_sizes").get<std::vector<int>>();
    model.spec.hidden_activation =
        ParseActivation(spec.at("hidden_activation").get<std::string>());
    model.spec.output_activation =
        ParseActivation(spec.at("output_activation").get<std::string>());
    model.spec.dropout_after_hidden = spec.at("dropout_after_hidden").get<double>();
    model.spec.seed = spec.at("seed").get<uint64_t>();
    model.spec.Validate();
    model.params = ParameterSet::Zeros(model.spec);
    const json& layers = j.at("layers");
    if (layers.size() != model.params.layers.size()) {
      Fail(ErrorCode::kInput, "checkpoint layer count does not match spec");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix w = MatrixFromJson(layers[l].at("weight"));
      Vector b = VectorFromJson(layers[l].at("bias"));
      auto& dst = model.params.layers[l];
      if (w.rows() != dst.weight.rows() || w.cols() != dst.weight.cols() ||
          b.size() != dst.bias.size()) {
        Fail(ErrorCode::kInput, "layer " + std::to_string(l) +
                                    " shape does not match spec");
      }
      dst.weight = std::move(w);
      dst.bias = std::move(b);
    }
    if (!j.at("standardizer").is_null()) {
      Standardizer s;
      s.mean = VectorFromJson(j["standardizer"].at("mean"));
      s.stddev = VectorFromJson(j["standardizer"].at("stddev"));
      model.standardizer = std::move(s);
    }
    model.metadata =
        j.at("metadata").get<std::map<std::string, std::string>>();
    probe_in = MatrixFromJson(j.at("probe").at("inputs"));
    probe_out = MatrixFromJson(j.at("probe").at("outputs"));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInput, std::string("malformed checkpoint: ") + e.what());
  }
  if (probe_in.rows() == 0) return model;
  const Matrix replay = model.Predict(probe_in);
  if (replay.rows() != probe_out.rows() || replay.cols() != probe_out.cols() ||
      (replay - probe_out).cwiseAbs().maxCoeff() > kProbeTolerance) {
    Fail(ErrorCode::kNumeric, "checkpoint probe does not reproduce");
  }
  return model;
}

void SaveCheckpoint(const TrainedModel& model, const std::filesystem::path& path,
                    const Matrix& probe_inputs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInput, "cannot write " + path.string());
  out << CheckpointToString(model, probe_inputs) << "\n";
}

TrainedModel LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kInput, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return CheckpointFromString(buf.str());
}

}  // namespace cfmea
