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

#include <cmath>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/model.hpp"

namespace deroffer {

RecourseSolver::RecourseSolver(const CompactProblem& compact, solver::SolveSettings settings,
                               const solver::SolverBackend* backend)
    : compact_(&compact), settings_(std::move(settings)), backend_(backend) {
  compact.check();
  const int rows = compact.recourse_rows();
  lower_rows_.assign(compact.m, {});
  upper_rows_.assign(compact.m, {});
  model_row_of_.assign(rows, -1);
  for (int j = 0; j < compact.m; ++j) {
    model_.add_variable(-solver::kInf, solver::kInf);
    model_.set_objective_coef(j, compact.b[j]);
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<solver::Term> terms;
    for (SparseMatrix::InnerIterator it(compact.F, r); it; ++it) terms.push_back({static_cast<int>(it.col()), it.value()});
    // Same split as add_recourse_copy with a constant xi, so bases carry over.
    if (terms.size() == 1 && compact.E.row(r).nonZeros() == 0) {
      auto& side = terms[0].coef > 0.0 ? lower_rows_ : upper_rows_;
      side[terms[0].var].push_back({r, terms[0].coef});
      continue;
    }
    model_row_of_[r] = model_.add_constraint(std::move(terms), solver::RowSense::GreaterEqual, 0.0);
  }
  active_lower_.assign(compact.m, {-1, 0.0});
  active_upper_.assign(compact.m, {-1, 0.0});
}

void RecourseSolver::load_rhs(std::span<const double> x, std::span<const double> xi) {
  const CompactProblem& cp = *compact_;
  require(static_cast<int>(x.size()) == cp.n, ErrorKind::Dimension, "recourse_lp: x has wrong length");
  require(static_cast<int>(xi.size()) == cp.p, ErrorKind::Dimension, "recourse_lp: xi has wrong length");
  rhs_ = cp.g;
  for (int r = 0; r < cp.recourse_rows(); ++r) {
    for (SparseMatrix::InnerIterator it(cp.H, r); it; ++it) rhs_[r] += it.value() * xi[it.col()];
    for (SparseMatrix::InnerIterator it(cp.E, r); it; ++it) rhs_[r] -= it.value() * x[it.col()];
    if (model_row_of_[r] >= 0) model_.set_rhs(model_row_of_[r], rhs_[r]);
  }
  for (int j = 0; j < cp.m; ++j) {
    double lower = -solver::kInf;
    double upper = solver::kInf;
    active_lower_[j] = active_upper_[j] = {-1, 0.0};
    for (const BoundRow& row : lower_rows_[j]) {
      const double bound = rhs_[row.row] / row.coef;
      if (bound > lower) {
        lower = bound;
        active_lower_[j] = row;
      }
    }
    for (const BoundRow& row : upper_rows_[j]) {
      const double bound = rhs_[row.row] / row.coef;
      if (bound < upper) {
        upper = bound;
        active_upper_[j] = row;
      }
    }
    // Crossed bounds within rounding noise (e.g. an empty PV box).
    if (lower > upper && lower - upper <= 1e-12 * std::max(1.0, std::abs(lower))) upper = lower;
    model_.set_bounds(j, lower, upper);
  }
}

const solver::SolveOutcome& RecourseSolver::run() {
  solver::SolveSettings settings = settings_;
  if (last_.basis) settings.warm_start = last_.basis;
  solver::SolveOutcome out = backend_ ? backend_->solve(model_, settings) : solver::solve_lp(model_, settings);
  if (!out.optimal()) {
    std::ostringstream msg;
    msg << "recourse_lp: LP " << solver::to_string(out.status) << " despite complete recourse; rhs =";
    msg.precision(17);
    for (double v : rhs_) msg << ' ' << v;
    fail(ErrorKind::Internal, msg.str());
  }
  last_ = std::move(out);
  return last_;
}

RecourseSolution RecourseSolver::solve(std::span<const double> x, std::span<const double> xi) {
  load_rhs(x, xi);
  const solver::SolveOutcome& out = run();
  const CompactProblem& cp = *compact_;
  RecourseSolution sol;
  sol.y = out.primal;
  sol.objective = out.objective;
  sol.dual.assign(cp.recourse_rows(), 0.0);
  for (int r = 0; r < cp.recourse_rows(); ++r) {
    if (model_row_of_[r] >= 0) sol.dual[r] = std::max(0.0, out.duals[model_row_of_[r]]);
  }
  for (int j = 0; j < cp.m; ++j) {
    const double dj = out.reduced_costs[j];
    if (dj > 0.0 && active_lower_[j].row >= 0) {
      sol.dual[active_lower_[j].row] = dj / active_lower_[j].coef;
    } else if (dj < 0.0 && active_upper_[j].row >= 0) {
      sol.dual[active_upper_[j].row] = dj / active_upper_[j].coef;
    }
  }
  return sol;
}

double RecourseSolver::value(std::span<const double> x, std::span<const double> xi) {
  load_rhs(x, xi);
  return run().objective;
}

RecourseSolution recourse_lp(const CompactProblem& compact, std::span<const double> x, std::span<const double> xi) {
  RecourseSolver solver(compact);
  return solver.solve(x, xi);
}

double dual_objective(const CompactProblem& cp, std::span<const double> pi, std::span<const double> x,
                      std::span<const double> xi) {
  require(static_cast<int>(pi.size()) == cp.recourse_rows(), ErrorKind::Dimension, "dual_objective: wrong pi length");
  double value = 0.0;
  for (int r = 0; r < cp.recourse_rows(); ++r) {
    double rhs = cp.g[r];
    for (SparseMatrix::InnerIterator it(cp.H, r); it; ++it) rhs += it.value() * xi[it.col()];
    for (SparseMatrix::InnerIterator it(cp.E, r); it; ++it) rhs -= it.value() * x[it.col()];
    value += pi[r] * rhs;
  }
  return value;
}

double dual_residual(const CompactProblem& cp, std::span<const double> pi) {
  require(static_cast<int>(pi.size()) == cp.recourse_rows(), ErrorKind::Dimension, "dual_residual: wrong pi length");
  std::vector<double> ft(cp.m, 0.0);
  double worst = 0.0;
  for (int r = 0; r < cp.recourse_rows(); ++r) {
    worst = std::max(worst, -pi[r]);
    for (SparseMatrix::InnerIterator it(cp.F, r); it; ++it) ft[it.col()] += it.value() * pi[r];
  }
  for (int j = 0; j < cp.m; ++j) worst = std::max(worst, std::abs(ft[j] - cp.b[j]));
  return worst;
}

}  // namespace deroffer
