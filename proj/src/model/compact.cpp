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
#include <numeric>

#include "deroffer/error.hpp"
#include "deroffer/model.hpp"
#include "network.hpp"

namespace deroffer {

const char* to_string(RowFamily family) noexcept {
  switch (family) {
    case RowFamily::Nonnegativity: return "nonnegativity";
    case RowFamily::OfferCapacity: return "offer_capacity";
    case RowFamily::PvAvailability: return "pv_availability";
    case RowFamily::BatteryPower: return "battery_power";
    case RowFamily::BatteryEnergy: return "battery_energy";
    case RowFamily::StateOfCharge: return "state_of_charge";
    case RowFamily::LineFlow: return "line_flow";
    case RowFamily::Voltage: return "voltage";
    case RowFamily::Balance: return "balance";
  }
  return "unknown";
}

const char* to_string(RecourseKind kind) noexcept {
  switch (kind) {
    case RecourseKind::Pv: return "pv";
    case RecourseKind::Charge: return "charge";
    case RecourseKind::Discharge: return "discharge";
    case RecourseKind::Energy: return "energy";
    case RecourseKind::OverDelivery: return "over_delivery";
    case RecourseKind::Shortfall: return "shortfall";
  }
  return "unknown";
}

int OfferInstance::offer_count() const {
  int count = 0;
  for (const auto& hour : price_grid) count += static_cast<int>(hour.size());
  return count;
}

void OfferInstance::validate() const {
  const int T = horizon;
  require(T > 0, ErrorKind::Validation, "instance: horizon must be positive");
  auto per_hour = [&](std::size_t size, const char* name) {
    require(static_cast<int>(size) == T, ErrorKind::Dimension, std::string("instance: ") + name + " must have T entries");
  };
  per_hour(price_grid.size(), "price_grid");
  per_hour(q_max.size(), "q_max");
  per_hour(pv_forecast.size(), "pv_forecast");
  per_hour(load.size(), "load");
  per_hour(pv_deviation.size(), "pv_deviation");
  for (int t = 0; t < T; ++t) {
    const std::string hour = " at hour " + std::to_string(t);
    require(!price_grid[t].empty(), ErrorKind::Validation, "instance: empty price grid" + hour);
    for (std::size_t k = 0; k < price_grid[t].size(); ++k) {
      require(std::isfinite(price_grid[t][k]), ErrorKind::Validation, "instance: non-finite price" + hour);
      require(k == 0 || price_grid[t][k] > price_grid[t][k - 1], ErrorKind::Validation,
              "instance: price grid not strictly increasing" + hour);
    }
    require(std::isfinite(q_max[t]) && q_max[t] >= 0.0, ErrorKind::Validation, "instance: negative q_max" + hour);
    require(std::isfinite(pv_forecast[t]) && pv_forecast[t] >= 0.0, ErrorKind::Validation,
            "instance: negative pv_forecast" + hour);
    require(std::isfinite(load[t]) && load[t] >= 0.0, ErrorKind::Validation, "instance: negative load" + hour);
  }
  const double forecast_total = std::accumulate(pv_forecast.begin(), pv_forecast.end(), 0.0);
  require(!pv_units.empty() || forecast_total == 0.0, ErrorKind::Validation,
          "instance: PV forecast given but no PV units placed");
  double share = 0.0;
  for (const PvUnit& unit : pv_units) {
    require(unit.bus >= 0 && unit.bus < network.bus_count, ErrorKind::Validation, "instance: PV unit on missing bus");
    require(unit.share >= 0.0, ErrorKind::Validation, "instance: negative PV share");
    share += unit.share;
  }
  require(pv_units.empty() || std::abs(share - 1.0) <= 1e-9, ErrorKind::Validation,
          "instance: PV shares must sum to 1");
  require(battery.bus >= 0 && battery.bus < network.bus_count, ErrorKind::Validation, "instance: battery on missing bus");
  require(battery.power_limit >= 0.0 && battery.energy_limit >= 0.0, ErrorKind::Validation,
          "instance: negative battery capacity");
  require(battery.efficiency > 0.0 && battery.efficiency <= 1.0, ErrorKind::Validation,
          "instance: battery efficiency must lie in (0, 1]");
  require(battery.initial_energy >= 0.0 && battery.initial_energy <= battery.energy_limit, ErrorKind::Validation,
          "instance: initial battery energy outside [0, energy_limit]");
  require(penalty_price >= 0.0 && rt_adder_fraction >= 0.0, ErrorKind::Validation,
          "instance: penalty price and real-time adder must be nonnegative");

  const Network& net = network;
  require(net.v_min > 0.0 && net.v_min < net.v_max, ErrorKind::Validation, "instance: voltage bounds inconsistent");
  require(net.base_mva > 0.0, ErrorKind::Validation, "instance: base_mva must be positive");
  require(net.reactive_ratio >= 0.0, ErrorKind::Validation, "instance: negative reactive ratio");
  require(static_cast<int>(net.load_share.size()) == net.bus_count, ErrorKind::Dimension,
          "instance: load_share needs one entry per bus");
  double load_share = 0.0;
  for (double s : net.load_share) {
    require(s >= 0.0, ErrorKind::Validation, "instance: negative load share");
    load_share += s;
  }
  require(std::abs(load_share - 1.0) <= 1e-9, ErrorKind::Validation, "instance: load shares must sum to 1");
  for (const Line& line : net.lines) {
    require(line.flow_limit > 0.0, ErrorKind::Validation, "instance: line flow limits must be positive");
    require(line.resistance >= 0.0 && line.reactance >= 0.0, ErrorKind::Validation, "instance: negative impedance");
  }
  detail::analyse_feeder(net);
  uncertainty_set(*this);
  if (!price_chain.empty()) price_chain.validate();
}

BudgetedUncertaintySet uncertainty_set(const OfferInstance& instance) {
  return BudgetedUncertaintySet(instance.pv_forecast, instance.pv_deviation, instance.gamma);
}

std::vector<double> cleared_revenue_coeffs(const OfferInstance& instance, std::span<const double> trajectory) {
  require(static_cast<int>(trajectory.size()) == instance.horizon, ErrorKind::Dimension,
          "cleared_revenue_coeffs: trajectory length must equal the horizon");
  require(static_cast<int>(instance.price_grid.size()) == instance.horizon, ErrorKind::Dimension,
          "cleared_revenue_coeffs: price grid length must equal the horizon");
  std::vector<double> c;
  c.reserve(instance.offer_count());
  for (int t = 0; t < instance.horizon; ++t) {
    for (double offer : instance.price_grid[t]) c.push_back(offer <= trajectory[t] ? -trajectory[t] : 0.0);
  }
  return c;
}

double deviation_price(const OfferInstance& instance, double day_ahead_price) {
  return instance.penalty_price + instance.rt_adder_fraction * day_ahead_price;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix to_matrix(int rows, int cols, const Triplets& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

// Accumulates >= rows of the recourse block.
struct RowBuilder {
  Triplets e, f, h;
  std::vector<double> g;
  std::vector<RowFamily> family;

  int add(RowFamily fam, std::vector<std::pair<int, double>> f_terms, double rhs) {
    const int r = static_cast<int>(g.size());
    for (auto [col, v] : f_terms) {
      if (v != 0.0) f.emplace_back(r, col, v);
    }
    g.push_back(rhs);
    family.push_back(fam);
    return r;
  }
};

}  // namespace

CompactProblem build_compact(const OfferInstance& instance, std::span<const double> trajectory) {
  instance.validate();
  const std::vector<double> c = cleared_revenue_coeffs(instance, trajectory);
  const detail::Feeder feeder = detail::analyse_feeder(instance.network);
  const Network& net = instance.network;
  const Battery& bat = instance.battery;
  const int T = instance.horizon;
  const int units = static_cast<int>(instance.pv_units.size());
  const int block = units + 5;

  CompactProblem cp;
  cp.n = instance.offer_count();
  cp.m = T * block;
  cp.p = T;
  cp.c = c;

  // First stage: x >= 0 and per-hour capacity.
  Triplets a;
  for (int t = 0, j = 0; t < T; ++t) {
    for (std::size_t k = 0; k < instance.price_grid[t].size(); ++k, ++j) {
      cp.x_hour.push_back(t);
      cp.x_block.push_back(static_cast<int>(k));
    }
  }
  for (int j = 0; j < cp.n; ++j) {
    a.emplace_back(j, j, 1.0);
    cp.d.push_back(0.0);
    cp.a_family.push_back(RowFamily::Nonnegativity);
  }
  for (int t = 0; t < T; ++t) {
    const int r = static_cast<int>(cp.d.size());
    for (int j = 0; j < cp.n; ++j) {
      if (cp.x_hour[j] == t) a.emplace_back(r, j, -1.0);
    }
    cp.d.push_back(-instance.q_max[t]);
    cp.a_family.push_back(RowFamily::OfferCapacity);
  }
  cp.A = to_matrix(static_cast<int>(cp.d.size()), cp.n, a);

  auto pv = [&](int t, int u) { return t * block + u; };
  auto ch = [&](int t) { return t * block + units; };
  auto dis = [&](int t) { return t * block + units + 1; };
  auto soc = [&](int t) { return t * block + units + 2; };
  auto up = [&](int t) { return t * block + units + 3; };
  auto dn = [&](int t) { return t * block + units + 4; };

  cp.b.assign(cp.m, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < units; ++u) cp.y_kind.push_back(RecourseKind::Pv);
    for (RecourseKind kind : {RecourseKind::Charge, RecourseKind::Discharge, RecourseKind::Energy,
                              RecourseKind::OverDelivery, RecourseKind::Shortfall}) {
      cp.y_kind.push_back(kind);
    }
    for (int i = 0; i < block; ++i) cp.y_hour.push_back(t);
    const double price = deviation_price(instance, trajectory[t]);
    cp.b[up(t)] = price;
    cp.b[dn(t)] = price;
  }

  const double eta = std::sqrt(bat.efficiency);
  RowBuilder rows;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < block; ++i) rows.add(RowFamily::Nonnegativity, {{t * block + i, 1.0}}, 0.0);
    for (int u = 0; u < units; ++u) {
      const int r = rows.add(RowFamily::PvAvailability, {{pv(t, u), -1.0}}, 0.0);
      rows.h.emplace_back(r, t, -instance.pv_units[u].share);
    }
    rows.add(RowFamily::BatteryPower, {{ch(t), -1.0}}, -bat.power_limit);
    rows.add(RowFamily::BatteryPower, {{dis(t), -1.0}}, -bat.power_limit);
    rows.add(RowFamily::BatteryEnergy, {{soc(t), -1.0}}, -bat.energy_limit);
    // soc_t - soc_{t-1} - eta ch_t + dis_t / eta = (t == 0 ? initial : 0)
    std::vector<std::pair<int, double>> dyn = {{soc(t), 1.0}, {ch(t), -eta}, {dis(t), 1.0 / eta}};
    if (t > 0) dyn.emplace_back(soc(t - 1), -1.0);
    const double start = t == 0 ? bat.initial_energy : 0.0;
    rows.add(RowFamily::StateOfCharge, dyn, start);
    for (auto& term : dyn) term.second = -term.second;
    rows.add(RowFamily::StateOfCharge, dyn, -start);
    if (t == T - 1) rows.add(RowFamily::StateOfCharge, {{soc(t), 1.0}}, bat.initial_energy);

    // Network rows as affine functions of the bus injections, keeping only
    // those that can bind inside the recourse box.
    std::vector<std::vector<std::pair<int, double>>> injection(net.bus_count);
    std::vector<double> inj_max(net.bus_count, 0.0);
    std::vector<double> inj_min(net.bus_count, 0.0);
    for (int u = 0; u < units; ++u) {
      const int bus = instance.pv_units[u].bus;
      injection[bus].emplace_back(pv(t, u), 1.0);
      inj_max[bus] += instance.pv_units[u].share * instance.pv_forecast[t];
    }
    injection[bat.bus].emplace_back(dis(t), 1.0);
    injection[bat.bus].emplace_back(ch(t), -1.0);
    inj_max[bat.bus] += bat.power_limit;
    inj_min[bat.bus] -= bat.power_limit;

    auto network_row = [&](RowFamily fam, const std::vector<double>& weight, double rhs, const std::string& what) {
      // Row: sum_b weight_b inj_b >= rhs.
      double lowest = 0.0;
      std::vector<std::pair<int, double>> terms;
      for (int bus = 0; bus < net.bus_count; ++bus) {
        if (weight[bus] == 0.0) continue;
        lowest += weight[bus] * (weight[bus] > 0.0 ? inj_min[bus] : inj_max[bus]);
        for (auto [col, v] : injection[bus]) terms.emplace_back(col, weight[bus] * v);
      }
      const double slack = 1e-9 * std::max(1.0, std::abs(rhs));
      require(rhs <= slack, ErrorKind::Validation,
              "instance: " + what + " violated at hour " + std::to_string(t) + " with all DERs idle");
      if (lowest >= rhs - slack) return;
      rows.add(fam, terms, rhs);
    };

    std::vector<double> base_p(net.lines.size(), 0.0);
    std::vector<double> base_q(net.lines.size(), 0.0);
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
      for (int bus : feeder.below[l]) base_p[l] += net.load_share[bus] * instance.load[t];
      base_q[l] = net.reactive_ratio * base_p[l];
    }
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
      std::vector<double> weight(net.bus_count, 0.0);
      for (int bus : feeder.below[l]) weight[bus] = 1.0;
      const double limit = net.lines[l].flow_limit;
      const std::string what = "flow limit of line " + std::to_string(l);
      // P_l = base - sum inj;  P_l <= limit  and  P_l >= -limit.
      network_row(RowFamily::LineFlow, weight, base_p[l] - limit, what);
      for (double& w : weight) w = -w;
      network_row(RowFamily::LineFlow, weight, -limit - base_p[l], what);
    }
    for (int k = 1; k < net.bus_count; ++k) {
      double v0 = 1.0;
      for (int l : feeder.path[k]) {
        v0 -= 2.0 * (net.lines[l].resistance * base_p[l] + net.lines[l].reactance * base_q[l]) / net.base_mva;
      }
      std::vector<double> weight(net.bus_count);
      for (int bus = 0; bus < net.bus_count; ++bus) weight[bus] = detail::voltage_sensitivity(net, feeder, k, bus);
      const std::string what = "voltage limit at bus " + std::to_string(k);
      network_row(RowFamily::Voltage, weight, net.v_min * net.v_min - v0, what);
      for (double& w : weight) w = -w;
      network_row(RowFamily::Voltage, weight, v0 - net.v_max * net.v_max, what);
    }

    // Real-time balance: PV + dis - ch + shortfall - over = load + cleared(x).
    std::vector<std::pair<int, double>> balance = {{dis(t), 1.0}, {ch(t), -1.0}, {dn(t), 1.0}, {up(t), -1.0}};
    for (int u = 0; u < units; ++u) balance.emplace_back(pv(t, u), 1.0);
    const int r1 = rows.add(RowFamily::Balance, balance, instance.load[t]);
    for (auto& term : balance) term.second = -term.second;
    const int r2 = rows.add(RowFamily::Balance, balance, -instance.load[t]);
    for (int j = 0; j < cp.n; ++j) {
      if (cp.x_hour[j] != t || c[j] == 0.0) continue;
      rows.e.emplace_back(r1, j, -1.0);
      rows.e.emplace_back(r2, j, 1.0);
    }
  }

  const int my = static_cast<int>(rows.g.size());
  cp.E = to_matrix(my, cp.n, rows.e);
  cp.F = to_matrix(my, cp.m, rows.f);
  cp.H = to_matrix(my, cp.p, rows.h);
  cp.g = std::move(rows.g);
  cp.y_family = std::move(rows.family);
  cp.check();
  return cp;
}

std::vector<CompactProblem> build_compact_set(const OfferInstance& instance, const PriceScenarioSet& scenarios) {
  scenarios.validate(instance.horizon);
  std::vector<CompactProblem> out;
  out.reserve(scenarios.trajectories.size());
  for (const auto& path : scenarios.trajectories) out.push_back(build_compact(instance, path));
  return out;
}

void CompactProblem::check() const {
  const int ma = static_cast<int>(d.size());
  const int my = static_cast<int>(g.size());
  auto dims = [](const SparseMatrix& mat, int rows, int cols) { return mat.rows() == rows && mat.cols() == cols; };
  require(dims(A, ma, n) && dims(E, my, n) && dims(F, my, m) && dims(H, my, p), ErrorKind::Dimension,
          "compact problem: matrix dimensions inconsistent");
  require(static_cast<int>(c.size()) == n && static_cast<int>(b.size()) == m, ErrorKind::Dimension,
          "compact problem: cost vector length mismatch");
  require(static_cast<int>(x_hour.size()) == n && static_cast<int>(y_hour.size()) == m &&
              static_cast<int>(y_family.size()) == my && static_cast<int>(a_family.size()) == ma,
          ErrorKind::Dimension, "compact problem: layout metadata length mismatch");
}

void write_triplets(const CompactProblem& cp, std::ostream& out) {
  out.precision(17);
  auto dump = [&](const char* name, const SparseMatrix& mat) {
    for (int r = 0; r < mat.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(mat, r); it; ++it) out << name << ' ' << r << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  };
  auto dump_vec = [&](const char* name, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] != 0.0) out << name << ' ' << i << " 0 " << v[i] << '\n';
    }
  };
  dump("A", cp.A);
  dump_vec("d", cp.d);
  dump_vec("c", cp.c);
  dump_vec("b", cp.b);
  dump("E", cp.E);
  dump("F", cp.F);
  dump_vec("g", cp.g);
  dump("H", cp.H);
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<int> add_first_stage(solver::LinearModel& model, const CompactProblem& cp) {
  std::vector<int> x(cp.n);
  for (int j = 0; j < cp.n; ++j) x[j] = model.add_variable(-solver::kInf, solver::kInf);
  for (int r = 0; r < cp.A.outerSize(); ++r) {
    std::vector<solver::Term> terms;
    for (SparseMatrix::InnerIterator it(cp.A, r); it; ++it) terms.push_back({x[it.col()], it.value()});
    if (terms.size() == 1) {
      const auto& v = model.variables()[terms[0].var];
      const double bound = cp.d[r] / terms[0].coef;
      if (terms[0].coef > 0.0) {
        model.set_bounds(terms[0].var, std::max(v.lower, bound), v.upper);
      } else {
        model.set_bounds(terms[0].var, v.lower, std::min(v.upper, bound));
      }
      continue;
    }
    model.add_constraint(std::move(terms), solver::RowSense::GreaterEqual, cp.d[r]);
  }
  return x;
}

solver::AffineExpr revenue_expr(const CompactProblem& cp, std::span<const int> x_vars) {
  require(static_cast<int>(x_vars.size()) == cp.n, ErrorKind::Dimension, "revenue_expr: wrong x length");
  solver::AffineExpr expr;
  for (int j = 0; j < cp.n; ++j) expr.add(x_vars[j], cp.c[j]);
  return expr;
}

int add_recourse_copy(solver::LinearModel& model, const CompactProblem& cp, std::span<const int> x_vars,
                      std::span<const solver::AffineExpr> xi_expr) {
  require(static_cast<int>(x_vars.size()) == cp.n, ErrorKind::Dimension, "add_recourse_copy: wrong x length");
  require(static_cast<int>(xi_expr.size()) == cp.p, ErrorKind::Dimension, "add_recourse_copy: wrong xi length");
  const int first = model.num_variables();
  for (int j = 0; j < cp.m; ++j) model.add_variable(-solver::kInf, solver::kInf);
  for (int r = 0; r < cp.recourse_rows(); ++r) {
    // rhs = g + H xi - E x
    solver::AffineExpr rhs = solver::AffineExpr::constant_of(cp.g[r]);
    for (SparseMatrix::InnerIterator it(cp.H, r); it; ++it) rhs.add(xi_expr[it.col()], it.value());
    for (SparseMatrix::InnerIterator it(cp.E, r); it; ++it) rhs.add(x_vars[it.col()], -it.value());
    int nnz = 0;
    for (SparseMatrix::InnerIterator it(cp.F, r); it; ++it) ++nnz;
    if (nnz == 1 && rhs.is_constant()) {
      SparseMatrix::InnerIterator it(cp.F, r);
      const int var = first + static_cast<int>(it.col());
      const double bound = rhs.constant / it.value();
      const auto& v = model.variables()[var];
      if (it.value() > 0.0) {
        model.set_bounds(var, std::max(v.lower, bound), v.upper);
      } else {
        model.set_bounds(var, v.lower, std::min(v.upper, bound));
      }
      continue;
    }
    solver::AffineExpr lhs;
    for (SparseMatrix::InnerIterator it(cp.F, r); it; ++it) lhs.add(first + static_cast<int>(it.col()), it.value());
    lhs.add(rhs, -1.0);
    model.add_constraint(lhs, solver::RowSense::GreaterEqual, 0.0);
  }
  return first;
}

}  // namespace deroffer
