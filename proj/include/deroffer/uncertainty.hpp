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

// Budgeted PV availability set and the Markov price-trajectory sampler.

#include <cstdint>
#include <span>
#include <vector>

namespace deroffer {

/// xi = xi_bar - xi_hat (.) z with z in [0,1]^p and sum(z) <= gamma.
class BudgetedUncertaintySet {
 public:
  BudgetedUncertaintySet() = default;
  BudgetedUncertaintySet(std::vector<double> xi_bar, std::vector<double> xi_hat, int gamma);

  int dimension() const { return static_cast<int>(xi_bar_.size()); }
  const std::vector<double>& xi_bar() const { return xi_bar_; }
  const std::vector<double>& xi_hat() const { return xi_hat_; }
  int gamma() const { return gamma_; }
  /// Hours with a strictly positive deviation.
  std::vector<int> active_hours() const;

  /// xi_bar - xi_hat (.) z; z must have length p.
  std::vector<double> point(std::span<const double> z) const;

 private:
  std::vector<double> xi_bar_;
  std::vector<double> xi_hat_;
  int gamma_ = 0;
};

inline constexpr long kDefaultVertexCap = 1000000;

/// Number of distinct vertices, sum_{j<=gamma} C(p*, j). Saturates at
/// `limit + 1` so huge sets do not overflow.
long count_extreme_points(const BudgetedUncertaintySet& u, long limit = kDefaultVertexCap);

/// Vertices ordered by cardinality of z, then lexicographically over the
/// active hours. Index 0 is always xi_bar. Throws Error(Capacity) above `cap`.
std::vector<std::vector<double>> enumerate_extreme_points(const BudgetedUncertaintySet& u,
                                                          long cap = kDefaultVertexCap);

bool membership(const BudgetedUncertaintySet& u, std::span<const double> xi, double tol = 1e-9);

/// Budget usage z recovered in closed form (0 where xi_hat is 0).
std::vector<double> budget_usage(const BudgetedUncertaintySet& u, std::span<const double> xi);

struct MarkovPriceChain {
  std::vector<double> states;                   // ascending $/MWh
  std::vector<std::vector<double>> transition;  // row-stochastic
  std::vector<double> initial;

  bool operator==(const MarkovPriceChain&) const = default;
  bool empty() const { return states.empty(); }
  /// Throws Error(Validation) when an invariant is broken.
  void validate() const;
};

struct PriceScenarioSet {
  std::vector<std::vector<double>> trajectories;
  std::vector<double> weights;

  bool operator==(const PriceScenarioSet&) const = default;
  int size() const { return static_cast<int>(trajectories.size()); }
  void validate(int horizon) const;
};

PriceScenarioSet sample_trajectories(const MarkovPriceChain& chain, int horizon, int count, std::uint64_t seed);

/// Quantile-binned chain with add-one smoothed transition counts.
MarkovPriceChain fit_markov_chain(std::span<const double> series, int state_count);

}  // namespace deroffer
