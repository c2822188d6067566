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

#include <cmath>
#include <fstream>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/model.hpp"
#include "json.hpp"

namespace deroffer {
namespace {

using json = nlohmann::json;

// Typed access into a JSON tree that reports the full field path on error.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  bool has(const char* key) const { return node_.is_object() && node_.contains(key); }

  Reader at(const char* key) const {
    if (!node_.is_object()) throw ParseError(path_, "expected an object");
    if (!node_.contains(key)) throw ParseError(child(key), "missing field");
    return Reader(node_.at(key), child(key));
  }

  Reader at(std::size_t i) const { return Reader(node_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!node_.is_array()) throw ParseError(path_, "expected an array");
    return node_.size();
  }

  double number() const {
    if (!node_.is_number()) throw ParseError(path_, "expected a number");
    const double v = node_.get<double>();
    if (!std::isfinite(v)) throw ParseError(path_, "non-finite number");
    return v;
  }

  int integer() const {
    if (node_.is_number_integer()) return node_.get<int>();
    if (node_.is_number_float()) {
      const double v = node_.get<double>();
      if (v == std::floor(v) && std::abs(v) < 1e9) return static_cast<int>(v);
    }
    throw ParseError(path_, "expected an integer");
  }

  std::vector<double> numbers() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
    return out;
  }

  std::vector<double> numbers(std::size_t expected) const {
    std::vector<double> out = numbers();
    if (out.size() != expected) {
      throw ParseError(path_, "expected " + std::to_string(expected) + " entries, got " + std::to_string(out.size()));
    }
    return out;
  }

  const std::string& path() const { return path_; }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
};

MarkovPriceChain read_chain(const Reader& r) {
  MarkovPriceChain chain;
  chain.states = r.at("states").numbers();
  const Reader rows = r.at("transition");
  for (std::size_t i = 0; i < rows.size(); ++i) chain.transition.push_back(rows.at(i).numbers(chain.states.size()));
  chain.initial = r.at("initial").numbers(chain.states.size());
  try {
    chain.validate();
  } catch (const Error& e) {
    throw ParseError(r.path(), e.what());
  }
  return chain;
}

}  // namespace

OfferInstance parse_instance(const std::string& text, const WarningSink& warn) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed document: ") + e.what());
  }
  const Reader root(doc, "");
  const int version = root.at("schema_version").integer();
  if (version != kInstanceSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(version));
  }
  OfferInstance inst;
  inst.horizon = root.at("horizon").integer();
  if (inst.horizon <= 0) throw ParseError("horizon", "must be positive");
  const auto T = static_cast<std::size_t>(inst.horizon);

  const Reader grid = root.at("price_grid");
  if (grid.size() != T) throw ParseError("price_grid", "expected one price list per hour");
  for (std::size_t t = 0; t < T; ++t) {
    const Reader hour = grid.at(t);
    std::vector<double> prices = hour.numbers();
    if (prices.empty()) throw ParseError(hour.path(), "empty price list");
    for (std::size_t k = 1; k < prices.size(); ++k) {
      if (!(prices[k] > prices[k - 1])) throw ParseError(hour.at(k).path(), "prices must be strictly increasing");
    }
    inst.price_grid.push_back(std::move(prices));
  }
  inst.q_max = root.at("q_max").numbers(T);
  inst.pv_forecast = root.at("pv_forecast").numbers(T);
  inst.load = root.at("load").numbers(T);
  inst.penalty_price = root.at("penalty_price").number();
  if (root.has("rt_adder_fraction")) inst.rt_adder_fraction = root.at("rt_adder_fraction").number();

  const Reader units = root.at("pv_units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    inst.pv_units.push_back({units.at(i).at("bus").integer(), units.at(i).at("share").number()});
  }

  if (root.has("battery")) {
    const Reader b = root.at("battery");
    inst.battery.bus = b.at("bus").integer();
    inst.battery.power_limit = b.at("power_limit").number();
    inst.battery.energy_limit = b.at("energy_limit").number();
    inst.battery.efficiency = b.at("efficiency").number();
    inst.battery.initial_energy = b.at("initial_energy").number();
  } else if (warn) {
    warn("instance has no battery section; using a zero-capacity battery");
  }

  const Reader net = root.at("network");
  inst.network.bus_count = net.at("bus_count").integer();
  inst.network.v_min = net.at("v_min").number();
  inst.network.v_max = net.at("v_max").number();
  inst.network.base_mva = net.at("base_mva").number();
  inst.network.reactive_ratio = net.at("reactive_ratio").number();
  inst.network.load_share = net.at("load_share").numbers(static_cast<std::size_t>(std::max(inst.network.bus_count, 0)));
  const Reader lines = net.at("lines");
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const Reader line = lines.at(l);
    Line out;
    out.parent = line.at("parent").integer();
    out.child = line.at("child").integer();
    out.resistance = line.at("resistance").number();
    out.reactance = line.at("reactance").number();
    out.flow_limit = line.at("flow_limit").number();
    if (out.flow_limit <= 0.0) throw ParseError(line.at("flow_limit").path(), "must be positive");
    inst.network.lines.push_back(out);
  }

  const Reader unc = root.at("uncertainty");
  inst.pv_deviation = unc.at("pv_deviation").numbers(T);
  inst.gamma = unc.at("gamma").integer();
  if (inst.gamma < 0 || inst.gamma > inst.horizon) throw ParseError("uncertainty.gamma", "must lie in [0, horizon]");
  if (root.has("price_chain")) inst.price_chain = read_chain(root.at("price_chain"));

  inst.validate();
  return inst;
}

std::string serialize_instance(const OfferInstance& inst) {
  json doc;
  doc["schema_version"] = kInstanceSchemaVersion;
  doc["horizon"] = inst.horizon;
  doc["price_grid"] = inst.price_grid;
  doc["q_max"] = inst.q_max;
  doc["pv_forecast"] = inst.pv_forecast;
  doc["load"] = inst.load;
  doc["penalty_price"] = inst.penalty_price;
  doc["rt_adder_fraction"] = inst.rt_adder_fraction;
  json units = json::array();
  for (const PvUnit& u : inst.pv_units) units.push_back({{"bus", u.bus}, {"share", u.share}});
  doc["pv_units"] = units;
  doc["battery"] = {{"bus", inst.battery.bus},
                    {"power_limit", inst.battery.power_limit},
                    {"energy_limit", inst.battery.energy_limit},
                    {"efficiency", inst.battery.efficiency},
                    {"initial_energy", inst.battery.initial_energy}};
  json lines = json::array();
  for (const Line& l : inst.network.lines) {
    lines.push_back({{"parent", l.parent},
                     {"child", l.child},
                     {"resistance", l.resistance},
                     {"reactance", l.reactance},
                     {"flow_limit", l.flow_limit}});
  }
  doc["network"] = {{"bus_count", inst.network.bus_count},
                    {"v_min", inst.network.v_min},
                    {"v_max", inst.network.v_max},
                    {"base_mva", inst.network.base_mva},
                    {"reactive_ratio", inst.network.reactive_ratio},
                    {"load_share", inst.network.load_share},
                    {"lines", lines}};
  doc["uncertainty"] = {{"pv_deviation", inst.pv_deviation}, {"gamma", inst.gamma}};
  if (!inst.price_chain.empty()) {
    doc["price_chain"] = {{"states", inst.price_chain.states},
                          {"transition", inst.price_chain.transition},
                          {"initial", inst.price_chain.initial}};
  }
  return doc.dump(2) + "\n";
}

OfferInstance load_instance(const std::filesystem::path& path, const WarningSink& warn) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open instance file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_instance(buffer.str(), warn);
}

void save_instance(const OfferInstance& instance, const std::filesystem::path& path) {
  instance.validate();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write instance file " + path.string());
  out << serialize_instance(instance);
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace deroffer
