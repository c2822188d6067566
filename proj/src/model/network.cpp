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

#include "network.hpp"

#include <algorithm>
#include <queue>

#include "deroffer/error.hpp"

namespace deroffer::detail {

Feeder analyse_feeder(const Network& network) {
  const int buses = network.bus_count;
  require(buses >= 1, ErrorKind::Structure, "network: bus_count must be at least 1");
  require(static_cast<int>(network.lines.size()) == buses - 1, ErrorKind::Structure,
          "network: a radial feeder with " + std::to_string(buses) + " buses needs " + std::to_string(buses - 1) +
              " lines");
  Feeder feeder;
  feeder.line_into.assign(buses, -1);
  std::vector<std::vector<int>> children(buses);
  for (int l = 0; l < static_cast<int>(network.lines.size()); ++l) {
    const Line& line = network.lines[l];
    require(line.parent >= 0 && line.parent < buses && line.child >= 0 && line.child < buses, ErrorKind::Structure,
            "network: line " + std::to_string(l) + " references a missing bus");
    require(line.child != 0, ErrorKind::Structure, "network: line " + std::to_string(l) + " feeds the substation");
    require(feeder.line_into[line.child] == -1, ErrorKind::Structure,
            "network: bus " + std::to_string(line.child) + " has two parents");
    feeder.line_into[line.child] = l;
    children[line.parent].push_back(l);
  }
  feeder.path.assign(buses, {});
  std::vector<bool> seen(buses, false);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = true;
  int reached = 0;
  while (!queue.empty()) {
    const int bus = queue.front();
    queue.pop();
    ++reached;
    for (int l : children[bus]) {
      const int child = network.lines[l].child;
      if (seen[child]) fail(ErrorKind::Structure, "network: cycle through bus " + std::to_string(child));
      seen[child] = true;
      feeder.path[child] = feeder.path[bus];
      feeder.path[child].push_back(l);
      queue.push(child);
    }
  }
  require(reached == buses, ErrorKind::Structure, "network: feeder is not connected to the substation");
  feeder.below.assign(network.lines.size(), {});
  for (int bus = 0; bus < buses; ++bus) {
    for (int l : feeder.path[bus]) feeder.below[l].push_back(bus);
  }
  return feeder;
}

double voltage_sensitivity(const Network& network, const Feeder& feeder, int k, int b) {
  double acc = 0.0;
  const auto& pk = feeder.path[k];
  const auto& pb = feeder.path[b];
  for (std::size_t i = 0; i < std::min(pk.size(), pb.size()) && pk[i] == pb[i]; ++i) {
    acc += network.lines[pk[i]].resistance;
  }
  return 2.0 * acc / network.base_mva;
}

}  // namespace deroffer::detail
