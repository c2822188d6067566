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

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/surrogate.hpp"

namespace deroffer {
namespace {

std::uint64_t splitmix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

std::string describe_point(std::span<const double> x, std::span<const double> xi) {
  std::ostringstream out;
  out.precision(17);
  out << "x=[";
  for (std::size_t i = 0; i < x.size(); ++i) out << (i ? "," : "") << x[i];
  out << "] xi=[";
  for (std::size_t i = 0; i < xi.size(); ++i) out << (i ? "," : "") << xi[i];
  out << "]";
  return out.str();
}

// Mean/scale of one feature column over every token row.
void column_stats(const std::vector<const std::vector<std::vector<double>>*>& blocks, std::size_t width,
                  std::vector<double>& mean, std::vector<double>& scale) {
  mean.assign(width, 0.0);
  scale.assign(width, 0.0);
  double count = 0.0;
  for (const auto* rows : blocks) {
    for (const auto& row : *rows) {
      for (std::size_t f = 0; f < width; ++f) mean[f] += row[f];
      count += 1.0;
    }
  }
  if (count == 0.0) {
    scale.assign(width, 1.0);
    return;
  }
  for (double& m : mean) m /= count;
  for (const auto* rows : blocks) {
    for (const auto& row : *rows) {
      for (std::size_t f = 0; f < width; ++f) scale[f] += (row[f] - mean[f]) * (row[f] - mean[f]);
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / count);
    if (!(s > 1e-12)) s = 1.0;  // constant column
  }
}

}  // namespace

std::size_t LabeledDataset::count(bool validation) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const DatasetRecord& r) { return r.validation == validation; }));
}

std::vector<double> sample_first_stage(const OfferInstance& instance, std::mt19937_64& rng) {
  // Sorted uniform spacings are uniform on each hour's scaled simplex.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x;
  x.reserve(instance.offer_count());
  for (int t = 0; t < instance.horizon; ++t) {
    const std::size_t k = instance.price_grid[t].size();
    std::vector<double> cuts(k + 1);
    for (double& c : cuts) c = unit(rng);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i < k; ++i) x.push_back(instance.q_max[t] * (cuts[i + 1] - cuts[i]));
  }
  return x;
}

std::vector<double> sample_first_stage_scaled(const OfferInstance& instance, std::mt19937_64& rng) {
  // Hour totals follow what PV plus some battery could deliver, so the
  // cheap low-deviation region gets covered as well.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = 1.5 * unit(rng);
  const double storage = instance.battery.power_limit * unit(rng);
  std::vector<double> x;
  x.reserve(instance.offer_count());
  for (int t = 0; t < instance.horizon; ++t) {
    const std::size_t k = instance.price_grid[t].size();
    const double total = std::min(instance.q_max[t], (instance.pv_forecast[t] + storage) * scale * unit(rng));
    std::vector<double> share(k, 0.0);
    if (unit(rng) < 0.5) {
      share[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
    } else {
      std::vector<double> cuts(k + 1);
      cuts[0] = 0.0;
      cuts[k] = 1.0;
      for (std::size_t i = 1; i < k; ++i) cuts[i] = unit(rng);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t i = 0; i < k; ++i) share[i] = cuts[i + 1] - cuts[i];
    }
    for (double s : share) x.push_back(total * s);
  }
  return x;
}

std::vector<double> sample_first_stage_near(const OfferInstance& instance, std::span<const double> anchor,
                                           std::mt19937_64& rng) {
  require(static_cast<int>(anchor.size()) == instance.offer_count(), ErrorKind::Dimension,
          "sample_first_stage_near: anchor has the wrong length");
  std::uniform_real_distribution<double> factor(0.0, 1.25);
  std::vector<double> x(anchor.begin(), anchor.end());
  std::size_t at = 0;
  for (int t = 0; t < instance.horizon; ++t) {
    const std::size_t k = instance.price_grid[t].size();
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += (x[at + i] = std::max(0.0, x[at + i]) * factor(rng));
    if (total > instance.q_max[t]) {
      for (std::size_t i = 0; i < k; ++i) x[at + i] *= instance.q_max[t] / total;
    }
    at += k;
  }
  return x;
}

std::vector<double> sample_uncertainty(const BudgetedUncertaintySet& u, bool vertex, std::mt19937_64& rng) {
  std::vector<int> active = u.active_hours();
  std::vector<double> z(u.dimension(), 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int most = std::min<int>(u.gamma(), static_cast<int>(active.size()));
  if (vertex) {
    const int k = std::uniform_int_distribution<int>(0, most)(rng);
    std::shuffle(active.begin(), active.end(), rng);
    for (int i = 0; i < k; ++i) z[active[i]] = 1.0;
  } else if (most > 0) {
    double used = 0.0;
    for (int t : active) used += (z[t] = unit(rng));
    if (used > u.gamma()) {
      const double shrink = u.gamma() / used * unit(rng);
      for (int t : active) z[t] *= shrink;
    }
  }
  return u.point(z);
}

PriceScenarioSet dataset_context_scenarios(const OfferInstance& instance, const DatasetConfig& config, int context) {
  require(context >= 0 && !config.trajectory_counts.empty(), ErrorKind::Validation,
          "dataset_context_scenarios: bad context or no trajectory counts");
  const int count = config.trajectory_counts[context % config.trajectory_counts.size()];
  return sample_trajectories(instance.price_chain, instance.horizon, count,
                             splitmix64(config.seed + 7919ULL * static_cast<std::uint64_t>(context)));
}

LabeledDataset generate_dataset(const OfferInstance& instance, const DatasetConfig& config) {
  require(config.contexts > 0 && config.x_per_context > 0 && config.xi_per_x > 0, ErrorKind::Validation,
          "generate_dataset: counts must be positive");
  require(!config.trajectory_counts.empty(), ErrorKind::Validation, "generate_dataset: no trajectory counts");
  for (int c : config.trajectory_counts) {
    require(c > 0, ErrorKind::Validation, "generate_dataset: trajectory counts must be positive");
  }
  require(config.scaled_fraction >= 0.0 && config.anchored_fraction >= 0.0 &&
              config.scaled_fraction + config.anchored_fraction <= 1.0,
          ErrorKind::Validation, "generate_dataset: sampler fractions must be nonnegative with sum <= 1");
  require(config.spot_check_fraction >= 0.0 && config.spot_check_fraction <= 1.0, ErrorKind::Validation,
          "generate_dataset: spot check fraction outside [0, 1]");
  instance.validate();

  LabeledDataset ds;
  std::mt19937_64 rng(config.seed);
  std::mt19937_64 audit_rng(splitmix64(config.seed ^ 0xa5a5a5a5ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uint64_t record_index = 0;

  for (int ctx = 0; ctx < config.contexts; ++ctx) {
    const StochasticProblem pb = lower(instance, dataset_context_scenarios(instance, config, ctx));
    ds.contexts.push_back(token_features(pb));
    std::vector<RecourseSolver> solvers;
    solvers.reserve(pb.scenario_count());
    for (const CompactProblem& cp : pb.compact) solvers.emplace_back(cp, config.solver.settings, config.solver.backend);

    // Anchors are the context's master solutions against the nominal point
    // and against one budget-saturating vertex, solved on first use.
    std::vector<std::vector<double>> anchors;
    for (int ix = 0; ix < config.x_per_context; ++ix) {
      const double pick = unit(rng);
      std::vector<double> x;
      if (pick < config.anchored_fraction) {
        if (anchors.empty()) {
          std::vector<double> z(pb.uncertainty.dimension(), 0.0);
          std::vector<int> active = pb.uncertainty.active_hours();
          std::shuffle(active.begin(), active.end(), rng);
          for (int i = 0; i < std::min<int>(pb.uncertainty.gamma(), static_cast<int>(active.size())); ++i) {
            z[active[i]] = 1.0;
          }
          CcgMaster master(pb, config.solver);
          for (const std::vector<double>& xi : {pb.uncertainty.xi_bar(), pb.uncertainty.point(z)}) {
            master.add_point(xi);
            const MasterResult m = master.solve();
            require(m.status == solver::SolveStatus::Optimal, ErrorKind::Internal,
                    "generate_dataset: anchor master did not solve to optimality");
            anchors.push_back(m.x);
          }
        }
        x = sample_first_stage_near(instance, anchors[ix % anchors.size()], rng);
      } else if (pick < config.anchored_fraction + config.scaled_fraction) {
        x = sample_first_stage_scaled(instance, rng);
      } else {
        x = sample_first_stage(instance, rng);
      }
      const double revenue = pb.expected_revenue_cost(x);
      for (int j = 0; j < config.xi_per_x; ++j) {
        DatasetRecord rec;
        rec.context = ctx;
        rec.x = x;
        rec.xi = sample_uncertainty(pb.uncertainty, j % 2 == 0, rng);
        double label = revenue;
        try {
          for (int w = 0; w < pb.scenario_count(); ++w) label += pb.weights[w] * solvers[w].value(x, rec.xi);
        } catch (const Error& e) {
          fail(ErrorKind::Internal, std::string("dataset labeling failed at ") + describe_point(x, rec.xi) + ": " +
                                        e.what());
        }
        rec.label = label;
        rec.validation = splitmix64(config.seed ^ (record_index * 0x9e3779b97f4a7c15ULL)) % 5 == 0;
        ++record_index;

        if (unit(audit_rng) < config.spot_check_fraction) {
          solver::SolveSettings permuted = config.solver.settings;
          permuted.permutation_seed = 1 + record_index;
          double again = revenue;
          for (int w = 0; w < pb.scenario_count(); ++w) {
            RecourseSolver fresh(pb.compact[w], permuted, config.solver.backend);
            again += pb.weights[w] * fresh.value(x, rec.xi);
          }
          if (std::abs(again - label) > 1e-6 * std::max(1.0, std::abs(label))) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "dataset label audit failed (" << label << " vs " << again << ") at " << describe_point(x, rec.xi);
            fail(ErrorKind::Internal, msg.str());
          }
        }
        ds.records.push_back(std::move(rec));
      }
    }
  }
  return ds;
}

void write_dataset_csv(const LabeledDataset& ds, std::ostream& out) {
  const std::size_t n = ds.records.empty() ? 0 : ds.records.front().x.size();
  const std::size_t p = ds.records.empty() ? 0 : ds.records.front().xi.size();
  const auto precision = out.precision(17);
  out << "# deroffer dataset v1 n=" << n << " p=" << p << " contexts=" << ds.contexts.size()
      << " schema=" << token_schema_hash() << '\n';
  out << "context,split,label";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i;
  for (std::size_t i = 0; i < p; ++i) out << ",xi" << i;
  out << '\n';
  for (const DatasetRecord& r : ds.records) {
    out << r.context << ',' << (r.validation ? "validation" : "train") << ',' << r.label;
    for (double v : r.x) out << ',' << v;
    for (double v : r.xi) out << ',' << v;
    out << '\n';
  }
  out.precision(precision);
}

Normalization fit_normalization(const LabeledDataset& ds) {
  require(!ds.contexts.empty(), ErrorKind::Validation, "fit_normalization: dataset has no contexts");
  std::vector<bool> used(ds.contexts.size(), false);
  double x_mass = 0.0, xi_mass = 0.0, label_sum = 0.0;
  std::size_t train = 0;
  for (const DatasetRecord& r : ds.records) {
    if (r.validation) continue;
    used.at(r.context) = true;
    for (double v : r.x) x_mass += std::abs(v);
    for (double v : r.xi) xi_mass += std::abs(v);
    label_sum += r.label;
    ++train;
  }
  require(train > 0, ErrorKind::Validation, "fit_normalization: training split is empty");

  std::vector<const std::vector<std::vector<double>>*> xs, xis;
  for (std::size_t c = 0; c < ds.contexts.size(); ++c) {
    if (!used[c]) continue;
    xs.push_back(&ds.contexts[c].x);
    xis.push_back(&ds.contexts[c].xi);
  }
  Normalization norm;
  column_stats(xs, ds.contexts.front().x.front().size(), norm.x_mean, norm.x_scale);
  column_stats(xis, ds.contexts.front().xi.front().size(), norm.xi_mean, norm.xi_scale);
  norm.x_value_scale = x_mass > 0.0 ? x_mass / train : 1.0;
  norm.xi_value_scale = xi_mass > 0.0 ? xi_mass / train : 1.0;
  norm.label_mean = label_sum / train;
  double var = 0.0;
  for (const DatasetRecord& r : ds.records) {
    if (!r.validation) var += (r.label - norm.label_mean) * (r.label - norm.label_mean);
  }
  norm.label_scale = std::sqrt(var / train);
  if (!(norm.label_scale > 1e-12)) norm.label_scale = 1.0;
  norm.validate();
  return norm;
}

}  // namespace deroffer
