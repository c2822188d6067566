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
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>

#include "deroffer/error.hpp"
#include "deroffer/solver.hpp"
#include "simplex.hpp"

namespace deroffer::solver {
namespace {

detail::SimplexOptions simplex_options(const SolveSettings& s) {
  detail::SimplexOptions o;
  o.feasibility_tol = s.feasibility_tol;
  o.optimality_tol = s.optimality_tol;
  o.pivot_tol = s.pivot_tol;
  o.refactor_interval = s.refactor_interval;
  o.iteration_limit = s.iteration_limit;
  return o;
}

SolveOutcome to_outcome(const LinearModel& model, const detail::LpResult& lp) {
  const int n = model.num_variables();
  const int m = model.num_constraints();
  const double sign = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  SolveOutcome out;
  out.status = lp.status;
  out.iterations = lp.iterations;
  out.primal.assign(lp.x.begin(), lp.x.begin() + n);
  out.objective = sign * lp.objective + model.objective_constant();
  out.best_bound = out.objective;
  out.duals.resize(m);
  for (int r = 0; r < m; ++r) out.duals[r] = sign * lp.y[r];
  out.reduced_costs.resize(n);
  for (int j = 0; j < n; ++j) out.reduced_costs[j] = sign * lp.d[j];
  return out;
}

std::shared_ptr<const Basis> export_basis(const detail::LpData& lp, const detail::BasisState& state) {
  auto basis = std::make_shared<Basis>();
  basis->cols = lp.cols;
  basis->rows = lp.rows;
  basis->head = state.head;
  basis->state.reserve(state.state.size());
  for (detail::VarState v : state.state) basis->state.push_back(static_cast<signed char>(v));
  return basis;
}

bool import_basis(const detail::LpData& lp, const Basis& basis, detail::BasisState& out) {
  if (basis.cols != lp.cols || basis.rows != lp.rows) return false;
  if (basis.head.size() != static_cast<std::size_t>(lp.rows) ||
      basis.state.size() != static_cast<std::size_t>(lp.rows + lp.cols)) {
    return false;
  }
  out.head = basis.head;
  out.state.clear();
  out.state.reserve(basis.state.size());
  for (signed char v : basis.state) {
    if (v < 0 || v > static_cast<signed char>(detail::VarState::FreeZero)) return false;
    out.state.push_back(static_cast<detail::VarState>(v));
  }
  return true;
}

SolveOutcome solve_permuted(const LinearModel& model, const SolveSettings& settings) {
  const int n = model.num_variables();
  const int m = model.num_constraints();
  std::mt19937_64 rng(settings.permutation_seed);
  std::vector<int> col(n);
  std::vector<int> row(m);
  std::iota(col.begin(), col.end(), 0);
  std::iota(row.begin(), row.end(), 0);
  std::shuffle(col.begin(), col.end(), rng);
  std::shuffle(row.begin(), row.end(), rng);
  std::vector<int> col_inverse(n);
  for (int j = 0; j < n; ++j) col_inverse[col[j]] = j;

  LinearModel permuted;
  permuted.set_sense(model.sense());
  permuted.set_objective_constant(model.objective_constant());
  for (int j = 0; j < n; ++j) {
    const Variable& v = model.variables()[col[j]];
    permuted.add_variable(v.lower, v.upper, v.kind);
    permuted.set_objective_coef(j, model.objective()[col[j]]);
  }
  for (int r = 0; r < m; ++r) {
    const Constraint& c = model.constraints()[row[r]];
    std::vector<Term> terms;
    terms.reserve(c.terms.size());
    for (const Term& t : c.terms) terms.push_back({col_inverse[t.var], t.coef});
    std::reverse(terms.begin(), terms.end());
    permuted.add_constraint(std::move(terms), c.sense, c.rhs);
  }
  SolveSettings inner = settings;
  inner.permutation_seed = 0;
  inner.warm_start.reset();
  SolveOutcome p = solve_lp(permuted, inner);
  SolveOutcome out = p;
  for (int j = 0; j < n; ++j) {
    out.primal[col[j]] = p.primal[j];
    out.reduced_costs[col[j]] = p.reduced_costs[j];
  }
  for (int r = 0; r < m; ++r) out.duals[row[r]] = p.duals[r];
  out.basis.reset();
  return out;
}

struct Node {
  std::vector<std::pair<int, double>> fixes;
  double bound = -kInf;  // minimization sense
  std::shared_ptr<const detail::BasisState> basis;
};

}  // namespace

SolveOutcome solve_lp(const LinearModel& model, const SolveSettings& settings) {
  model.validate();
  if (model.has_binaries()) fail(ErrorKind::Validation, "solve_lp: model contains binary variables");
  if (settings.permutation_seed != 0) return solve_permuted(model, settings);
  const detail::LpData lp = detail::build_lp_data(model);
  detail::BasisState warm;
  const bool use_warm = settings.warm_start && import_basis(lp, *settings.warm_start, warm);
  const detail::LpResult result = detail::run_primal_simplex(lp, simplex_options(settings), use_warm ? &warm : nullptr);
  SolveOutcome out = to_outcome(model, result);
  out.basis = export_basis(lp, result.basis);
  return out;
}

Basis extend_basis(const Basis& basis, int cols, int rows) {
  require(cols >= basis.cols && rows >= basis.rows, ErrorKind::Dimension, "extend_basis: model shrank");
  const int shift = cols - basis.cols;
  Basis out;
  out.cols = cols;
  out.rows = rows;
  out.head.reserve(rows);
  for (int var : basis.head) out.head.push_back(var >= basis.cols ? var + shift : var);
  for (int r = basis.rows; r < rows; ++r) out.head.push_back(cols + r);
  out.state.assign(static_cast<std::size_t>(cols + rows), static_cast<signed char>(detail::VarState::AtLower));
  for (int j = 0; j < basis.cols; ++j) out.state[j] = basis.state[j];
  for (int r = 0; r < basis.rows; ++r) out.state[cols + r] = basis.state[basis.cols + r];
  for (int r = basis.rows; r < rows; ++r) out.state[cols + r] = static_cast<signed char>(detail::VarState::Basic);
  return out;
}

Basis slack_basis(int cols, int rows) {
  Basis out;
  out.cols = cols;
  out.rows = rows;
  out.head.resize(rows);
  std::iota(out.head.begin(), out.head.end(), cols);
  out.state.assign(static_cast<std::size_t>(cols + rows), static_cast<signed char>(detail::VarState::AtLower));
  std::fill(out.state.begin() + cols, out.state.end(), static_cast<signed char>(detail::VarState::Basic));
  return out;
}

void embed_basis(Basis& into, const Basis& block, int col_offset, int row_offset) {
  require(col_offset >= 0 && row_offset >= 0 && col_offset + block.cols <= into.cols &&
              row_offset + block.rows <= into.rows,
          ErrorKind::Dimension, "embed_basis: block does not fit");
  require(block.state.size() == static_cast<std::size_t>(block.cols + block.rows), ErrorKind::Dimension,
          "embed_basis: malformed block");
  for (int j = 0; j < block.cols; ++j) into.state[col_offset + j] = block.state[j];
  for (int r = 0; r < block.rows; ++r) into.state[into.cols + row_offset + r] = block.state[block.cols + r];
  into.head.clear();
  const auto basic = static_cast<signed char>(detail::VarState::Basic);
  for (int v = 0; v < into.cols + into.rows; ++v) {
    if (into.state[v] == basic) into.head.push_back(v);
  }
  // Both sides carry one basic per row, so the count is unchanged.
  require(static_cast<int>(into.head.size()) == into.rows, ErrorKind::Internal, "embed_basis: basic count mismatch");
}

SolveOutcome solve_milp(const LinearModel& model, const SolveSettings& settings) {
  model.validate();
  if (!model.has_binaries()) return solve_lp(model, settings);

  const int n = model.num_variables();
  const double sign = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  const detail::LpData base = detail::build_lp_data(model);
  const detail::SimplexOptions options = simplex_options(settings);
  std::vector<int> binaries;
  for (int j = 0; j < n; ++j) {
    if (model.variables()[j].kind == VarKind::Binary) binaries.push_back(j);
  }

  // Internal bookkeeping is in minimization sense; `sign` maps back.
  double incumbent = kInf;
  std::vector<double> incumbent_x;
  SolveOutcome out;
  bool incomplete = false;

  std::map<long, Node> open;
  std::set<std::pair<double, long>> by_bound;
  long next_id = 0;
  auto push = [&](Node node) {
    const long id = next_id++;
    by_bound.insert({node.bound, id});
    open.emplace(id, std::move(node));
  };
  auto gap_allowance = [&](double value) { return settings.gap_tol * std::max(1.0, std::abs(value)); };
  auto prunable = [&](double value) { return incumbent < kInf && value >= incumbent - gap_allowance(incumbent); };
  auto global_bound = [&]() {
    double b = by_bound.empty() ? kInf : by_bound.begin()->first;
    return std::min(b, incumbent);
  };

  Node first;
  if (settings.warm_start) {
    auto warm = std::make_shared<detail::BasisState>();
    if (import_basis(base, *settings.warm_start, *warm)) first.basis = std::move(warm);
  }
  push(std::move(first));
  bool root = true;
  double last_bound = -kInf;
  detail::LpData lp = base;

  while (!open.empty()) {
    if (out.bnb.nodes >= settings.node_limit) {
      incomplete = true;
      break;
    }
    if (incumbent < kInf && incumbent - global_bound() <= gap_allowance(incumbent)) break;

    // Dive depth-first until an incumbent exists, then best-bound.
    long id = incumbent < kInf ? by_bound.begin()->second : open.rbegin()->first;
    Node node = std::move(open.at(id));
    open.erase(id);
    by_bound.erase({node.bound, id});
    if (prunable(node.bound)) continue;

    lp.lower = base.lower;
    lp.upper = base.upper;
    for (const auto& [var, value] : node.fixes) lp.lower[var] = lp.upper[var] = value;
    detail::LpResult res = detail::run_primal_simplex(lp, options, node.basis.get());
    ++out.bnb.nodes;

    if (root) {
      root = false;
      if (res.status == SolveStatus::Unbounded) {
        out.status = SolveStatus::Unbounded;
        return out;
      }
      out.bnb.root_bound = sign * (res.objective + sign * model.objective_constant());
    }
    if (res.status == SolveStatus::IterationLimit) {
      incomplete = true;
    } else if (res.status == SolveStatus::Optimal) {
      const double value = std::max(res.objective + sign * model.objective_constant(), node.bound);
      if (!prunable(value)) {
        int branch = -1;
        double most = settings.integrality_tol;
        for (int j : binaries) {
          const double frac = std::abs(res.x[j] - std::round(res.x[j]));
          if (frac > most + 1e-12) {
            most = frac;
            branch = j;
          }
        }
        if (branch < 0) {
          incumbent = value;
          incumbent_x.assign(res.x.begin(), res.x.begin() + n);
          for (int j : binaries) incumbent_x[j] = std::round(incumbent_x[j]);
          ++out.bnb.incumbents;
        } else {
          auto basis = std::make_shared<const detail::BasisState>(std::move(res.basis));
          const double xv = res.x[branch];
          const double far = xv < 0.5 ? 1.0 : 0.0;
          for (double side : {far, 1.0 - far}) {
            Node child;
            child.fixes = node.fixes;
            child.fixes.emplace_back(branch, side);
            child.bound = value;
            child.basis = basis;
            push(std::move(child));
          }
        }
      }
    }
    const double gb = std::max(global_bound(), last_bound);
    last_bound = gb;
    out.bnb.bound_trace.push_back(sign * gb);
  }

  out.iterations = out.bnb.nodes;
  if (incumbent == kInf) {
    out.status = incomplete ? SolveStatus::IterationLimit : SolveStatus::Infeasible;
    out.best_bound = sign * global_bound();
    return out;
  }
  out.status = (incomplete && incumbent - global_bound() > gap_allowance(incumbent)) ? SolveStatus::IterationLimit
                                                                                      : SolveStatus::Optimal;
  out.primal = std::move(incumbent_x);
  out.objective = sign * incumbent;
  out.best_bound = sign * std::min(global_bound(), incumbent);
  return out;
}

SolveOutcome BuiltinBackend::solve(const LinearModel& model, const SolveSettings& settings) const {
  return model.has_binaries() ? solve_milp(model, settings) : solve_lp(model, settings);
}

const SolverBackend& default_backend() {
  static const BuiltinBackend backend;
  return backend;
}

}  // namespace deroffer::solver
