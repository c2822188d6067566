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

#pragma once

// Shared instance builders for the unit tests.

#include <random>
#include <vector>

#include "deroffer/generator.hpp"
#include "deroffer/model.hpp"

namespace fixtures {

/// One hour, two buses, one PV unit, no battery, a single offer block at
/// 10 $/MWh and no load.
inline deroffer::OfferInstance tiny_instance(double penalty = 100.0) {
  deroffer::OfferInstance inst;
  inst.horizon = 1;
  inst.price_grid = {{10.0}};
  inst.q_max = {2.0};
  inst.pv_forecast = {1.0};
  inst.load = {0.0};
  inst.pv_units = {{1, 1.0}};
  inst.battery = {0, 0.0, 0.0, 1.0, 0.0};
  inst.network.bus_count = 2;
  inst.network.lines = {{0, 1, 0.01, 0.01, 10.0}};
  inst.network.load_share = {0.0, 1.0};
  inst.penalty_price = penalty;
  inst.rt_adder_fraction = 0.0;
  inst.pv_deviation = {0.0};
  inst.gamma = 0;
  return inst;
}

inline deroffer::OfferInstance small_instance(std::uint64_t seed, int horizon, int gamma, int buses = 4) {
  deroffer::GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.horizon = horizon;
  cfg.gamma = gamma;
  cfg.bus_count = buses;
  cfg.pv_units = 2;
  cfg.blocks = 2;
  return deroffer::generate_instance(cfg);
}

/// Uniform point of X = {x >= 0, sum_k x_tk <= q_max_t}: sorted-uniform
/// spacings give a uniform point of each hour's scaled simplex.
inline std::vector<double> random_first_stage(const deroffer::OfferInstance& inst, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x;
  for (int t = 0; t < inst.horizon; ++t) {
    const std::size_t k = inst.price_grid[t].size();
    std::vector<double> cuts(k + 1);
    for (double& c : cuts) c = unit(rng);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i < k; ++i) x.push_back(inst.q_max[t] * (cuts[i + 1] - cuts[i]));
  }
  return x;
}

inline std::vector<double> random_xi(const deroffer::BudgetedUncertaintySet& u, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> z(u.dimension());
  double used = 0.0;
  for (double& v : z) v = unit(rng);
  for (double v : z) used += v;
  if (used > u.gamma()) {
    for (double& v : z) v *= u.gamma() / used;
  }
  return u.point(z);
}

}  // namespace fixtures
