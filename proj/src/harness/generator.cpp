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

#include "deroffer/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "deroffer/error.hpp"
#include "../model/network.hpp"

namespace deroffer {

std::vector<double> bundled_price_series() {
  // 60 days of hourly prices: morning and evening peaks, weekday lift and
  // AR(1) noise. Generated from a fixed seed so it behaves like a data file.
  std::mt19937_64 rng(20190701);
  std::normal_distribution<double> shock(0.0, 4.0);
  std::vector<double> series;
  double noise = 0.0;
  for (int day = 0; day < 60; ++day) {
    const double weekday = (day % 7) < 5 ? 6.0 : -4.0;
    for (int h = 0; h < 24; ++h) {
      const double morning = 14.0 * std::exp(-0.5 * std::pow((h - 8.0) / 2.0, 2));
      const double evening = 22.0 * std::exp(-0.5 * std::pow((h - 19.0) / 2.5, 2));
      const double solar_dip = -8.0 * std::exp(-0.5 * std::pow((h - 13.0) / 2.5, 2));
      noise = 0.8 * noise + shock(rng);
      series.push_back(std::max(5.0, 32.0 + weekday + morning + evening + solar_dip + noise));
    }
  }
  return series;
}

namespace {

double hour_of_day(int t, int horizon) { return (t + 0.5) * 24.0 / horizon; }

}  // namespace

OfferInstance generate_instance(const GeneratorConfig& cfg) {
  require(cfg.bus_count >= 2, ErrorKind::Validation, "generator: need at least 2 buses");
  require(cfg.horizon >= 1 && cfg.blocks >= 1 && cfg.pv_units >= 1, ErrorKind::Validation,
          "generator: horizon, blocks and pv_units must be positive");
  require(cfg.gamma >= 0 && cfg.gamma <= cfg.horizon, ErrorKind::Validation, "generator: gamma outside [0, horizon]");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  OfferInstance inst;
  const int T = cfg.horizon;
  const int B = cfg.bus_count;
  inst.horizon = T;

  Network& net = inst.network;
  net.bus_count = B;
  net.base_mva = 1.0;
  net.v_min = 0.95;
  net.v_max = 1.05;
  net.reactive_ratio = 0.33;
  for (int bus = 1; bus < B; ++bus) {
    const int lo = std::max(0, bus - 3);
    const int parent = lo + static_cast<int>(unit(rng) * (bus - lo));
    net.lines.push_back({parent, bus, 0.004 + 0.008 * unit(rng), 0.003 + 0.006 * unit(rng), 1.0});
  }
  net.load_share.assign(B, 0.0);
  double share_total = 0.0;
  for (int bus = 1; bus < B; ++bus) {
    net.load_share[bus] = 0.5 + unit(rng);
    share_total += net.load_share[bus];
  }
  for (double& s : net.load_share) s /= share_total;

  // Placements on distinct non-substation buses where possible.
  std::vector<int> buses(B - 1);
  for (int i = 0; i < B - 1; ++i) buses[i] = i + 1;
  std::shuffle(buses.begin(), buses.end(), rng);
  double pv_share_total = 0.0;
  for (int u = 0; u < cfg.pv_units; ++u) {
    const double s = 0.6 + 0.8 * unit(rng);
    inst.pv_units.push_back({buses[u % buses.size()], s});
    pv_share_total += s;
  }
  for (PvUnit& u : inst.pv_units) u.share /= pv_share_total;
  if (cfg.battery) {
    inst.battery = {buses[cfg.pv_units % buses.size()], 0.25 * cfg.pv_capacity, cfg.pv_capacity, 0.9,
                    0.5 * cfg.pv_capacity};
  } else {
    inst.battery = {0, 0.0, 0.0, 1.0, 0.0};
  }

  for (int t = 0; t < T; ++t) {
    const double h = hour_of_day(t, T);
    const double sun = (h > 6.0 && h < 18.0) ? std::pow(std::sin(std::numbers::pi * (h - 6.0) / 12.0), 1.5) : 0.0;
    const double pv = sun > 1e-3 ? cfg.pv_capacity * sun * (0.85 + 0.15 * unit(rng)) : 0.0;
    inst.pv_forecast.push_back(pv);
    inst.pv_deviation.push_back(cfg.deviation_fraction * pv);
    const double shape = 0.55 + 0.25 * std::exp(-0.5 * std::pow((h - 8.0) / 2.0, 2)) +
                         0.45 * std::exp(-0.5 * std::pow((h - 19.5) / 2.5, 2));
    inst.load.push_back(cfg.peak_load * std::min(1.0, shape) * (0.9 + 0.1 * unit(rng)));
    inst.q_max.push_back(cfg.pv_capacity + inst.battery.power_limit);
  }
  inst.gamma = cfg.gamma;

  const std::vector<double> series = bundled_price_series();
  inst.price_chain = fit_markov_chain(series, cfg.price_states);
  const auto& states = inst.price_chain.states;
  // Offer price points spread over the chain's range, nudged per hour.
  for (int t = 0; t < T; ++t) {
    std::vector<double> grid;
    const double lo = states.front();
    const double hi = states.back();
    for (int k = 0; k < cfg.blocks; ++k) {
      const double frac = (k + 0.5 + 0.3 * (unit(rng) - 0.5)) / cfg.blocks;
      grid.push_back(std::round(100.0 * (lo + frac * (hi - lo))) / 100.0);
    }
    std::sort(grid.begin(), grid.end());
    for (int k = 1; k < cfg.blocks; ++k) grid[k] = std::max(grid[k], grid[k - 1] + 0.01);
    inst.price_grid.push_back(std::move(grid));
  }
  inst.penalty_price = 1.5 * states.back();
  inst.rt_adder_fraction = 0.1;

  // Line ratings: comfortable for load, tight enough on some branches that
  // midday PV export can bind.
  const detail::Feeder feeder = detail::analyse_feeder(net);
  const double peak_load = *std::max_element(inst.load.begin(), inst.load.end());
  const double peak_pv = *std::max_element(inst.pv_forecast.begin(), inst.pv_forecast.end());
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    double load_below = 0.0;
    double pv_below = 0.0;
    for (int bus : feeder.below[l]) {
      load_below += net.load_share[bus] * peak_load;
      for (const PvUnit& u : inst.pv_units) {
        if (u.bus == bus) pv_below += u.share * peak_pv;
      }
      if (inst.battery.bus == bus) pv_below += inst.battery.power_limit;
    }
    const double tight = 0.6 + 0.6 * unit(rng);
    net.lines[l].flow_limit = std::max({1.2 * load_below, tight * pv_below, 0.05});
  }
  // Keep the idle-DER voltage profile inside the band by scaling impedances.
  for (int attempt = 0; attempt < 50; ++attempt) {
    double worst = 1.0;
    for (int t = 0; t < T; ++t) {
      for (int k = 1; k < B; ++k) {
        double v = 1.0;
        for (int l : feeder.path[k]) {
          double p = 0.0;
          for (int bus : feeder.below[l]) p += net.load_share[bus] * inst.load[t];
          v -= 2.0 * (net.lines[l].resistance * p + net.lines[l].reactance * net.reactive_ratio * p) / net.base_mva;
        }
        worst = std::min(worst, v);
      }
    }
    if (worst >= 0.955 * 0.955) break;
    for (Line& line : net.lines) {
      line.resistance *= 0.7;
      line.reactance *= 0.7;
    }
  }
  inst.validate();
  return inst;
}

}  // namespace deroffer
