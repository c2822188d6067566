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

// Radial feeder analysis for the lossless branch-flow (LinDistFlow) model.
// With the substation at 1 p.u., line flows and squared voltages are affine
// in the bus injections:
//   P_l = sum_{b below l} (load_b - inj_b)
//   v_k = 1 - 2/S * sum_{l on path(k)} (r_l P_l + x_l Q_l)

#include <vector>

#include "deroffer/model.hpp"

namespace deroffer::detail {

struct Feeder {
  std::vector<int> line_into;          // per bus, line feeding it (-1 at the root)
  std::vector<std::vector<int>> path;  // per bus, lines from the root down to it
  std::vector<std::vector<int>> below; // per line, buses in the subtree it feeds
};

/// Throws Error(Structure) unless the lines form a tree rooted at bus 0.
Feeder analyse_feeder(const Network& network);

/// Squared-voltage sensitivity dv_k / d inj_b.
double voltage_sensitivity(const Network& network, const Feeder& feeder, int k, int b);

}  // namespace deroffer::detail
