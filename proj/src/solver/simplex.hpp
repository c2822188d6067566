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

// Internal bounded-variable primal simplex. Works on the computational form
//   A x - s = 0,  lower <= (x, s) <= upper
// where s holds one logical variable per row.

#include <vector>

#include "deroffer/solver.hpp"

namespace deroffer::solver::detail {

enum class VarState : signed char { Basic, AtLower, AtUpper, FreeZero };

struct LpData {
  int rows = 0;
  int cols = 0;  // structural columns
  // Structural columns in compressed-column form.
  std::vector<int> col_start;
  std::vector<int> row_index;
  std::vector<double> value;
  // Bounds and costs for cols + rows entries (structurals, then logicals).
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> cost;  // minimization sense
};

struct BasisState {
  std::vector<int> head;          // basic variable per basis row
  std::vector<VarState> state;    // per variable
  bool empty() const { return head.empty(); }
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 100;
  long iteration_limit = 0;
};

struct LpResult {
  SolveStatus status = SolveStatus::IterationLimit;
  std::vector<double> x;       // cols + rows
  std::vector<double> y;       // row duals (minimization sense)
  std::vector<double> d;       // reduced costs, cols + rows
  double objective = 0.0;      // c^T x without constant
  long iterations = 0;
  BasisState basis;
};

LpData build_lp_data(const LinearModel& model);
LpResult run_primal_simplex(const LpData& lp, const SimplexOptions& options,
                            const BasisState* warm_start = nullptr);

}  // namespace deroffer::solver::detail
