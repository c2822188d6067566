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

// Synthetic desk-scale instances: a random radial feeder with rooftop PV and
// one battery, and a Markov price chain fitted to a bundled price series.

#include <cstdint>
#include <vector>

#include "deroffer/model.hpp"

namespace deroffer {

struct GeneratorConfig {
  int bus_count = 15;
  int horizon = 24;
  int blocks = 3;  // offer price points per hour
  int pv_units = 3;
  bool battery = true;
  int gamma = 3;
  double deviation_fraction = 0.2;  // xi_hat = fraction * xi_bar
  double pv_capacity = 2.0;         // MW, aggregate peak
  double peak_load = 0.6;           // MW
  int price_states = 6;
  std::uint64_t seed = 1;
};

/// Hourly price series used to fit the chain (fixed, independent of the seed).
std::vector<double> bundled_price_series();

OfferInstance generate_instance(const GeneratorConfig& config);

}  // namespace deroffer
