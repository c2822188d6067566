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

#include "deroffer/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "deroffer/error.hpp"

namespace deroffer {

BudgetedUncertaintySet::BudgetedUncertaintySet(std::vector<double> xi_bar, std::vector<double> xi_hat, int gamma)
    : xi_bar_(std::move(xi_bar)), xi_hat_(std::move(xi_hat)), gamma_(gamma) {
  require(xi_bar_.size() == xi_hat_.size(), ErrorKind::Dimension, "uncertainty: xi_bar and xi_hat lengths differ");
  require(gamma_ >= 0 && gamma_ <= dimension(), ErrorKind::Validation, "uncertainty: gamma outside [0, p]");
  for (int t = 0; t < dimension(); ++t) {
    require(std::isfinite(xi_bar_[t]) && std::isfinite(xi_hat_[t]), ErrorKind::Validation,
            "uncertainty: non-finite entry");
    require(xi_hat_[t] >= 0.0, ErrorKind::Validation, "uncertainty: negative deviation at hour " + std::to_string(t));
    require(xi_bar_[t] - xi_hat_[t] >= 0.0, ErrorKind::Validation,
            "uncertainty: xi_bar - xi_hat negative at hour " + std::to_string(t));
  }
}

std::vector<int> BudgetedUncertaintySet::active_hours() const {
  std::vector<int> hours;
  for (int t = 0; t < dimension(); ++t) {
    if (xi_hat_[t] > 0.0) hours.push_back(t);
  }
  return hours;
}

std::vector<double> BudgetedUncertaintySet::point(std::span<const double> z) const {
  require(static_cast<int>(z.size()) == dimension(), ErrorKind::Dimension, "uncertainty: z has wrong length");
  std::vector<double> xi(xi_bar_);
  for (int t = 0; t < dimension(); ++t) xi[t] -= xi_hat_[t] * z[t];
  return xi;
}

long count_extreme_points(const BudgetedUncertaintySet& u, long limit) {
  const long p = static_cast<long>(u.active_hours().size());
  const long top = std::min<long>(u.gamma(), p);
  long total = 0;
  long binom = 1;  // C(p, j)
  for (long j = 0; j <= top; ++j) {
    if (j > 0) {
      // C(p, j) = C(p, j-1) * (p - j + 1) / j, computed in long double to avoid overflow.
      const long double next = static_cast<long double>(binom) * (p - j + 1) / j;
      if (next > limit) return limit + 1;
      binom = std::lround(static_cast<double>(next));
    }
    total += binom;
    if (total > limit) return limit + 1;
  }
  return total;
}

std::vector<std::vector<double>> enumerate_extreme_points(const BudgetedUncertaintySet& u, long cap) {
  const long count = count_extreme_points(u, cap);
  if (count > cap) {
    fail(ErrorKind::Capacity, "enumerate_extreme_points: vertex count exceeds cap " + std::to_string(cap) +
                                  "; use the dualized MILP subproblem instead");
  }
  const std::vector<int> hours = u.active_hours();
  const int p = static_cast<int>(hours.size());
  std::vector<std::vector<double>> points;
  points.reserve(static_cast<std::size_t>(count));
  points.push_back(u.xi_bar());
  std::vector<int> pick;
  for (int size = 1; size <= std::min(u.gamma(), p); ++size) {
    pick.resize(size);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      std::vector<double> xi(u.xi_bar());
      for (int i : pick) xi[hours[i]] -= u.xi_hat()[hours[i]];
      points.push_back(std::move(xi));
      int i = size - 1;
      while (i >= 0 && pick[i] == p - size + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int k = i + 1; k < size; ++k) pick[k] = pick[k - 1] + 1;
    }
  }
  return points;
}

bool membership(const BudgetedUncertaintySet& u, std::span<const double> xi, double tol) {
  if (static_cast<int>(xi.size()) != u.dimension()) return false;
  double used = 0.0;
  for (int t = 0; t < u.dimension(); ++t) {
    const double drop = u.xi_bar()[t] - xi[t];
    if (u.xi_hat()[t] == 0.0) {
      if (std::abs(drop) > tol) return false;
      continue;
    }
    const double z = drop / u.xi_hat()[t];
    if (z < -tol || z > 1.0 + tol) return false;
    used += z;
  }
  return used <= u.gamma() + tol;
}

std::vector<double> budget_usage(const BudgetedUncertaintySet& u, std::span<const double> xi) {
  require(static_cast<int>(xi.size()) == u.dimension(), ErrorKind::Dimension, "budget_usage: xi has wrong length");
  std::vector<double> z(xi.size(), 0.0);
  for (int t = 0; t < u.dimension(); ++t) {
    if (u.xi_hat()[t] > 0.0) z[t] = (u.xi_bar()[t] - xi[t]) / u.xi_hat()[t];
  }
  return z;
}

void MarkovPriceChain::validate() const {
  const std::size_t k = states.size();
  require(k > 0, ErrorKind::Validation, "price chain: no states");
  require(transition.size() == k && initial.size() == k, ErrorKind::Dimension, "price chain: size mismatch");
  for (std::size_t i = 1; i < k; ++i) {
    require(states[i] > states[i - 1], ErrorKind::Validation, "price chain: states must be strictly ascending");
  }
  auto check_distribution = [](const std::vector<double>& row, const std::string& what) {
    double sum = 0.0;
    for (double v : row) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::Validation, what + " has a negative entry");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::Validation, what + " does not sum to 1");
  };
  check_distribution(initial, "price chain initial distribution");
  for (std::size_t i = 0; i < k; ++i) {
    require(transition[i].size() == k, ErrorKind::Dimension, "price chain: ragged transition matrix");
    check_distribution(transition[i], "price chain transition row " + std::to_string(i));
  }
}

void PriceScenarioSet::validate(int horizon) const {
  require(!trajectories.empty(), ErrorKind::Validation, "scenarios: empty set");
  require(trajectories.size() == weights.size(), ErrorKind::Dimension, "scenarios: weight count mismatch");
  double sum = 0.0;
  for (std::size_t w = 0; w < weights.size(); ++w) {
    require(static_cast<int>(trajectories[w].size()) == horizon, ErrorKind::Dimension,
            "scenarios: trajectory " + std::to_string(w) + " has wrong length");
    require(weights[w] >= 0.0, ErrorKind::Validation, "scenarios: negative weight");
    sum += weights[w];
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::Validation, "scenarios: weights do not sum to 1");
}

namespace {

// Inverse-CDF draw; std::discrete_distribution is avoided so sampled paths do
// not depend on the standard library implementation.
int draw(const std::vector<double>& probabilities, std::mt19937_64& rng) {
  const double u = std::generate_canonical<double, 53>(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

}  // namespace

PriceScenarioSet sample_trajectories(const MarkovPriceChain& chain, int horizon, int count, std::uint64_t seed) {
  chain.validate();
  require(horizon > 0 && count > 0, ErrorKind::Validation, "sample_trajectories: horizon and count must be positive");
  std::mt19937_64 rng(seed);
  PriceScenarioSet set;
  set.trajectories.reserve(count);
  for (int w = 0; w < count; ++w) {
    std::vector<double> path(horizon);
    int state = draw(chain.initial, rng);
    for (int t = 0; t < horizon; ++t) {
      if (t > 0) state = draw(chain.transition[state], rng);
      path[t] = chain.states[state];
    }
    set.trajectories.push_back(std::move(path));
  }
  set.weights.assign(count, 1.0 / count);
  return set;
}

MarkovPriceChain fit_markov_chain(std::span<const double> series, int state_count) {
  require(state_count > 0, ErrorKind::Validation, "fit_markov_chain: state_count must be positive");
  require(series.size() >= 2, ErrorKind::Validation, "fit_markov_chain: series too short");
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;  // upper edge of each bin except the last
  for (int k = 1; k < state_count; ++k) {
    edges.push_back(sorted[sorted.size() * k / state_count]);
  }
  auto bin = [&](double v) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  };
  std::vector<double> sum(state_count, 0.0);
  std::vector<int> hits(state_count, 0);
  for (double v : series) {
    const int b = bin(v);
    sum[b] += v;
    ++hits[b];
  }
  // Bins that received no samples (ties at an edge) are dropped.
  std::vector<int> remap(state_count, -1);
  MarkovPriceChain chain;
  for (int b = 0; b < state_count; ++b) {
    if (hits[b] == 0) continue;
    const double level = sum[b] / hits[b];
    if (!chain.states.empty() && level <= chain.states.back()) {
      remap[b] = static_cast<int>(chain.states.size()) - 1;
      continue;
    }
    remap[b] = static_cast<int>(chain.states.size());
    chain.states.push_back(level);
  }
  const std::size_t k = chain.states.size();
  std::vector<std::vector<double>> counts(k, std::vector<double>(k, 1.0));
  std::vector<double> first(k, 1.0);
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    counts[remap[bin(series[i])]][remap[bin(series[i + 1])]] += 1.0;
  }
  for (double v : series) first[remap[bin(v)]] += 1.0;
  auto normalise = [](std::vector<double>& row) {
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& v : row) v /= total;
    // Push the rounding residue into the largest entry so the row sums to 1.
    const double residue = 1.0 - std::accumulate(row.begin(), row.end(), 0.0);
    *std::max_element(row.begin(), row.end()) += residue;
  };
  for (auto& row : counts) normalise(row);
  normalise(first);
  chain.transition = std::move(counts);
  chain.initial = std::move(first);
  return chain;
}

}  // namespace deroffer
