// Copyright 2026 The deroffer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/surrogate.hpp"
#include "json.hpp"

namespace deroffer {
namespace {

using json = nlohmann::json;

json mlp_to_json(const MlpParams& mlp) {
  return json{{"widths", mlp.widths}, {"weights", mlp.weights}, {"biases", mlp.biases}};
}

template <typename T>
T field(const json& node, const std::string& path, const char* key) {
  const std::string where = path.empty() ? key : path + "." + key;
  if (!node.is_object() || !node.contains(key)) throw ParseError(where, "missing field");
  try {
    return node.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where, std::string("wrong type: ") + e.what());
  }
}

MlpParams mlp_from_json(const json& node, const std::string& path) {
  MlpParams mlp;
  mlp.widths = field<std::vector<int>>(node, path, "widths");
  mlp.weights = field<std::vector<std::vector<double>>>(node, path, "weights");
  mlp.biases = field<std::vector<std::vector<double>>>(node, path, "biases");
  try {
    mlp.validate();
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
  return mlp;
}

}  // namespace

std::string serialize_model(const SurrogateModel& model) {
  model.validate();
  const Normalization& n = model.norm;
  json doc{
      {"format", "deroffer-surrogate"},
      {"version", kCheckpointVersion},
      {"schema_hash", model.schema_hash},
      {"normalization",
       {{"x_mean", n.x_mean},
        {"x_scale", n.x_scale},
        {"xi_mean", n.xi_mean},
        {"xi_scale", n.xi_scale},
        {"x_value_scale", n.x_value_scale},
        {"xi_value_scale", n.xi_value_scale},
        {"label_mean", n.label_mean},
        {"label_scale", n.label_scale}}},
      {"phi_x", mlp_to_json(model.phi_x)},
      {"phi_xi", mlp_to_json(model.phi_xi)},
      {"phi_value", mlp_to_json(model.phi_value)},
  };
  return doc.dump(1);
}

SurrogateModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  if (field<std::string>(doc, "", "format") != "deroffer-surrogate") throw ParseError("format", "not a surrogate checkpoint");
  const int version = field<int>(doc, "", "version");
  if (version != kCheckpointVersion) throw ParseError("version", "unsupported checkpoint version " + std::to_string(version));

  SurrogateModel model;
  model.schema_hash = field<std::string>(doc, "", "schema_hash");
  if (model.schema_hash != token_schema_hash()) {
    throw ParseError("schema_hash", "checkpoint was trained on a different token schema (" + model.schema_hash + ")");
  }
  const json& norm = doc.contains("normalization") ? doc.at("normalization") : json();
  Normalization& n = model.norm;
  n.x_mean = field<std::vector<double>>(norm, "normalization", "x_mean");
  n.x_scale = field<std::vector<double>>(norm, "normalization", "x_scale");
  n.xi_mean = field<std::vector<double>>(norm, "normalization", "xi_mean");
  n.xi_scale = field<std::vector<double>>(norm, "normalization", "xi_scale");
  n.x_value_scale = field<double>(norm, "normalization", "x_value_scale");
  n.xi_value_scale = field<double>(norm, "normalization", "xi_value_scale");
  n.label_mean = field<double>(norm, "normalization", "label_mean");
  n.label_scale = field<double>(norm, "normalization", "label_scale");
  for (const char* key : {"phi_x", "phi_xi", "phi_value"}) {
    if (!doc.contains(key)) throw ParseError(key, "missing field");
  }
  model.phi_x = mlp_from_json(doc.at("phi_x"), "phi_x");
  model.phi_xi = mlp_from_json(doc.at("phi_xi"), "phi_xi");
  model.phi_value = mlp_from_json(doc.at("phi_value"), "phi_value");
  try {
    model.validate();
  } catch (const Error& e) {
    throw ParseError("", e.what());
  }
  return model;
}

void save_model(const SurrogateModel& model, const std::filesystem::path& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write model file " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

SurrogateModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open model file " + path.string() + " (run `deroffer train` first)");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace deroffer
