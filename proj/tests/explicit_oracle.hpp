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

// Deterministic equivalent written straight from the compact matrices: every
// row stays an explicit constraint and every solve starts cold. Shared by the
// tests that need recourse values independent of RecourseSolver.

#include <span>
#include <stdexcept>
#include <vector>

#include "deroffer/ccg.hpp"
#include "deroffer/solver.hpp"

namespace oracle {

using namespace deroffer;
namespace sv = deroffer::solver;

struct ExplicitModel {
  sv::LinearModel lp;
  std::vector<int> x;
};

inline ExplicitModel explicit_model(const StochasticProblem& pb) {
  ExplicitModel em;
  const CompactProblem& c0 = pb.compact.front();
  for (int i = 0; i < c0.n; ++i) em.x.push_back(em.lp.add_variable(-sv::kInf, sv::kInf));
  for (int r = 0; r < c0.A.rows(); ++r) {
    std::vector<sv::Term> terms;
    for (SparseMatrix::InnerIterator it(c0.A, r); it; ++it) terms.push_back({em.x[it.col()], it.value()});
    em.lp.add_constraint(std::move(terms), sv::RowSense::GreaterEqual, c0.d[r]);
  }
  return em;
}

// Adds one recourse copy per trajectory for `xi`, returns the expression
// sum_omega rho (c^T x + b^T y).
inline sv::AffineExpr add_explicit_copy(ExplicitModel& em, const StochasticProblem& pb, std::span<const double> xi) {
  sv::AffineExpr cost;
  for (int w = 0; w < pb.scenario_count(); ++w) {
    const CompactProblem& cp = pb.compact[w];
    std::vector<int> y;
    for (int j = 0; j < cp.m; ++j) y.push_back(em.lp.add_variable(-sv::kInf, sv::kInf));
    for (int r = 0; r < cp.F.rows(); ++r) {
      std::vector<sv::Term> terms;
      for (SparseMatrix::InnerIterator it(cp.F, r); it; ++it) terms.push_back({y[it.col()], it.value()});
      for (SparseMatrix::InnerIterator it(cp.E, r); it; ++it) terms.push_back({em.x[it.col()], it.value()});
      double rhs = cp.g[r];
      for (SparseMatrix::InnerIterator it(cp.H, r); it; ++it) rhs += it.value() * xi[it.col()];
      em.lp.add_constraint(std::move(terms), sv::RowSense::GreaterEqual, rhs);
    }
    for (int i = 0; i < cp.n; ++i) cost.add(em.x[i], pb.weights[w] * cp.c[i]);
    for (int j = 0; j < cp.m; ++j) cost.add(y[j], pb.weights[w] * cp.b[j]);
  }
  return cost;
}

// Expected recourse value at fixed (x, xi) from the explicit rows.
inline double explicit_recourse(const StochasticProblem& pb, std::span<const double> x, std::span<const double> xi) {
  ExplicitModel em = explicit_model(pb);
  const sv::AffineExpr cost = add_explicit_copy(em, pb, xi);
  em.lp.add_objective(cost);
  for (int i = 0; i < pb.n(); ++i) em.lp.set_bounds(em.x[i], x[i], x[i]);
  const sv::SolveOutcome out = sv::solve_lp(em.lp);
  if (!out.optimal()) throw std::runtime_error("explicit recourse LP did not solve");
  return out.objective - pb.expected_revenue_cost(x);
}

}  // namespace oracle
