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

#include "deroffer/ccg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "deroffer/error.hpp"

namespace deroffer {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<solver::AffineExpr> constant_exprs(std::span<const double> values) {
  std::vector<solver::AffineExpr> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(solver::AffineExpr::constant_of(v));
  return out;
}

}  // namespace

double StochasticProblem::expected_revenue_cost(std::span<const double> x) const {
  double acc = 0.0;
  for (int w = 0; w < scenario_count(); ++w) acc += weights[w] * dot(compact[w].c, x);
  return acc;
}

StochasticProblem lower(const OfferInstance& instance, const PriceScenarioSet& scenarios) {
  StochasticProblem problem;
  problem.compact = build_compact_set(instance, scenarios);
  problem.weights = scenarios.weights;
  problem.uncertainty = uncertainty_set(instance);
  return problem;
}

CcgMaster::CcgMaster(const StochasticProblem& problem, SolverConfig config)
    : problem_(&problem), config_(std::move(config)) {
  require(problem.scenario_count() > 0, ErrorKind::Validation, "ccg master: no scenarios");
  x_ = add_first_stage(model_, problem.compact.front());
  eta_ = model_.add_variable(-solver::kInf, solver::kInf);
  model_.set_objective_coef(eta_, 1.0);
  for (int v : x_) {
    const double lo = model_.variables()[v].lower;
    x_hint_.push_back(std::isfinite(lo) ? lo : 0.0);
  }
  recourse_.reserve(problem.scenario_count());
  for (const CompactProblem& cp : problem.compact) recourse_.emplace_back(cp, config_.settings, config_.backend);
}

void CcgMaster::add_point(std::span<const double> xi) {
  const StochasticProblem& pb = *problem_;
  const auto xi_expr = constant_exprs(xi);
  // eta >= sum_omega rho (c^T x + b^T y)
  solver::AffineExpr cut = solver::AffineExpr::variable(eta_);
  for (int w = 0; w < pb.scenario_count(); ++w) {
    const CompactProblem& cp = pb.compact[w];
    const int row0 = model_.num_constraints();
    const int y0 = add_recourse_copy(model_, cp, x_, xi_expr);
    cut.add(revenue_expr(cp, x_), -pb.weights[w]);
    for (int j = 0; j < cp.m; ++j) cut.add(y0 + j, -pb.weights[w] * cp.b[j]);
    try {
      recourse_[w].solve(x_hint_, xi);
      auto block = recourse_[w].basis();
      if (block && block->cols == cp.m && block->rows == model_.num_constraints() - row0 &&
          y0 + cp.m == model_.num_variables()) {
        pending_.push_back({y0, row0, std::move(block)});
      }
    } catch (const Error&) {
      // No hint for this copy; the simplex repairs it from the slack basis.
    }
  }
  model_.add_constraint(cut, solver::RowSense::GreaterEqual, 0.0);
  ++points_;
}

MasterResult CcgMaster::solve() {
  require(points_ > 0, ErrorKind::Validation, "ccg master: active set is empty");
  solver::SolveSettings settings = config_.settings;
  const int cols = model_.num_variables();
  const int rows = model_.num_constraints();
  solver::Basis start = basis_ ? solver::extend_basis(*basis_, cols, rows) : solver::slack_basis(cols, rows);
  for (const PendingBlock& block : pending_) solver::embed_basis(start, *block.basis, block.col, block.row);
  pending_.clear();
  settings.warm_start = std::make_shared<const solver::Basis>(std::move(start));
  const solver::SolveOutcome out = config_.engine().solve(model_, settings);
  MasterResult result;
  result.status = out.status;
  result.iterations = out.iterations;
  if (!out.optimal()) return result;
  basis_ = out.basis;
  result.x.reserve(x_.size());
  for (int v : x_) result.x.push_back(out.primal[v]);
  x_hint_ = result.x;
  result.eta = out.objective;
  return result;
}

MasterResult solve_master(const StochasticProblem& problem, const std::vector<std::vector<double>>& points,
                          const SolverConfig& config) {
  CcgMaster master(problem, config);
  for (const auto& xi : points) master.add_point(xi);
  return master.solve();
}

std::vector<double> vertex_values(const StochasticProblem& problem, std::span<const double> x,
                                  const std::vector<std::vector<double>>& vertices, const SolverConfig& config) {
  std::vector<double> total(vertices.size(), 0.0);
  for (int w = 0; w < problem.scenario_count(); ++w) {
    RecourseSolver rs(problem.compact[w], config.settings, config.backend);
    for (std::size_t i = 0; i < vertices.size(); ++i) total[i] += problem.weights[w] * rs.value(x, vertices[i]);
  }
  return total;
}

SubproblemResult exact_subproblem(const StochasticProblem& problem, std::span<const double> x, long cap,
                                  const SolverConfig& config) {
  if (count_extreme_points(problem.uncertainty, cap) > cap) {
    DualizedConfig dual;
    dual.solver = config;
    return dualized_subproblem_milp(problem, x, dual);
  }
  const auto vertices = enumerate_extreme_points(problem.uncertainty, cap);
  const std::vector<double> values = vertex_values(problem, x, vertices, config);
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    // Values within rounding of the incumbent count as ties.
    if (values[i] > values[best] + 1e-9 * std::max(1.0, std::abs(values[best]))) best = i;
  }
  SubproblemResult result;
  result.xi = vertices[best];
  result.value = values[best];
  result.vertex_index = static_cast<long>(best);
  return result;
}

SubproblemResult dualized_subproblem_milp(const StochasticProblem& problem, std::span<const double> x,
                                          const DualizedConfig& config) {
  const BudgetedUncertaintySet& u = problem.uncertainty;
  const int p = u.dimension();
  solver::LinearModel model;
  model.set_sense(solver::ObjSense::Maximize);
  std::vector<int> z(p, -1);
  std::vector<solver::Term> budget;
  for (int t : u.active_hours()) {
    z[t] = model.add_binary();
    budget.push_back({z[t], 1.0});
  }
  if (!budget.empty()) model.add_constraint(budget, solver::RowSense::LessEqual, u.gamma());

  for (int w = 0; w < problem.scenario_count(); ++w) {
    const CompactProblem& cp = problem.compact[w];
    const double rho = problem.weights[w];
    double b_max = 0.0;
    for (double v : cp.b) b_max = std::max(b_max, std::abs(v));
    const double bound = config.pi_bound_scale * b_max;

    const int rows = cp.recourse_rows();
    std::vector<int> pi(rows);
    for (int r = 0; r < rows; ++r) {
      double coef = cp.g[r];
      for (SparseMatrix::InnerIterator it(cp.E, r); it; ++it) coef -= it.value() * x[it.col()];
      bool has_h = false;
      for (SparseMatrix::InnerIterator it(cp.H, r); it; ++it) {
        coef += it.value() * u.xi_bar()[it.col()];
        has_h = true;
      }
      double upper = solver::kInf;
      if (has_h) {
        int nnz = 0;
        double f = 0.0;
        for (SparseMatrix::InnerIterator it(cp.F, r); it; ++it) {
          ++nnz;
          f = it.value();
        }
        if (nnz != 1 || std::abs(f) != 1.0) {
          fail(ErrorKind::Configuration, "dualized subproblem: no finite bound for the multiplier of row " +
                                             std::to_string(r) + " (uncertain row is not a unit singleton)");
        }
        upper = bound;
      }
      pi[r] = model.add_variable(0.0, upper);
      model.set_objective_coef(pi[r], rho * coef);
    }
    // F^T pi = b
    std::vector<std::vector<solver::Term>> columns(cp.m);
    for (int r = 0; r < rows; ++r) {
      for (SparseMatrix::InnerIterator it(cp.F, r); it; ++it) columns[it.col()].push_back({pi[r], it.value()});
    }
    for (int j = 0; j < cp.m; ++j) model.add_constraint(std::move(columns[j]), solver::RowSense::Equal, cp.b[j]);
    // w = pi_r * z_t through McCormick on [0, bound] x {0, 1}.
    for (int r = 0; r < rows; ++r) {
      for (SparseMatrix::InnerIterator it(cp.H, r); it; ++it) {
        const int t = static_cast<int>(it.col());
        if (z[t] < 0) continue;
        const int prod = model.add_variable(0.0, bound);
        model.set_objective_coef(prod, -rho * it.value() * u.xi_hat()[t]);
        model.add_constraint({{prod, 1.0}, {z[t], -bound}}, solver::RowSense::LessEqual, 0.0);
        model.add_constraint({{prod, 1.0}, {pi[r], -1.0}}, solver::RowSense::LessEqual, 0.0);
        model.add_constraint({{prod, 1.0}, {pi[r], -1.0}, {z[t], -bound}}, solver::RowSense::GreaterEqual, -bound);
      }
    }
  }

  const solver::SolveOutcome out = config.solver.engine().solve(model, config.solver.settings);
  require(out.optimal(), ErrorKind::Internal,
          std::string("dualized subproblem: MILP ended with status ") + solver::to_string(out.status));
  std::vector<double> zval(p, 0.0);
  for (int t = 0; t < p; ++t) {
    if (z[t] >= 0) zval[t] = std::round(out.primal[z[t]]);
  }
  SubproblemResult result;
  result.xi = u.point(zval);
  result.value = out.objective;
  result.used_milp = true;
  return result;
}

CcgState ccg_solve(const StochasticProblem& problem, const CcgSettings& settings) {
  require(settings.tol > 0.0, ErrorKind::Validation, "ccg_solve: tolerance must be positive");
  CcgState state;
  CcgMaster master(problem, settings.solver);
  state.points.push_back(problem.uncertainty.xi_bar());
  master.add_point(state.points.back());

  while (state.iteration < settings.max_iterations) {
    ++state.iteration;
    CcgIteration row;
    row.k = state.iteration;
    auto start = std::chrono::steady_clock::now();
    const MasterResult m = master.solve();
    row.master_time = seconds_since(start);
    state.status = m.status;
    if (m.status != solver::SolveStatus::Optimal) break;
    state.lower_bound = std::max(state.lower_bound, m.eta);

    start = std::chrono::steady_clock::now();
    const SubproblemResult sub = exact_subproblem(problem, m.x, settings.vertex_cap, settings.solver);
    row.sub_time = seconds_since(start);
    const double candidate = problem.expected_revenue_cost(m.x) + sub.value;
    if (candidate < state.upper_bound) {
      state.upper_bound = candidate;
      state.x = m.x;
    }
    row.lower_bound = state.lower_bound;
    row.upper_bound = state.upper_bound;
    row.gap = state.upper_bound - state.lower_bound;
    state.log.push_back(row);

    const double allowance = settings.tol * (1.0 + std::abs(state.upper_bound));
    if (row.gap <= allowance) {
      state.converged = true;
      break;
    }
    if (std::find(state.points.begin(), state.points.end(), sub.xi) != state.points.end()) {
      // The worst case is already in the master, so only rounding separates
      // the bounds; stop rather than loop.
      state.converged = row.gap <= 1e-6 * (1.0 + std::abs(state.upper_bound));
      break;
    }
    state.points.push_back(sub.xi);
    master.add_point(sub.xi);
  }
  return state;
}

void write_ccg_log(const CcgState& state, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "k,LB,UB,gap,master_time,sub_time\n";
  for (const CcgIteration& row : state.log) {
    out << row.k << ',' << row.lower_bound << ',' << row.upper_bound << ',' << row.gap << ',' << row.master_time << ','
        << row.sub_time << '\n';
  }
  out.precision(precision);
}

MonolithicResult solve_monolithic(const StochasticProblem& problem, long cap, const SolverConfig& config) {
  const auto vertices = enumerate_extreme_points(problem.uncertainty, cap);
  CcgMaster master(problem, config);
  for (const auto& xi : vertices) master.add_point(xi);
  const MasterResult m = master.solve();
  MonolithicResult result;
  result.status = m.status;
  result.x = m.x;
  result.objective = m.eta;
  result.vertices = static_cast<long>(vertices.size());
  return result;
}

}  // namespace deroffer
