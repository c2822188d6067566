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

// Classical column-and-constraint generation for
//   min_x  E_omega[c(omega)^T x] + max_{xi in U} E_omega[min_y b(omega)^T y]
// with one recourse copy per (vertex, trajectory) pair in the master.

#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "deroffer/model.hpp"
#include "deroffer/solver.hpp"
#include "deroffer/uncertainty.hpp"

namespace deroffer {

/// An instance lowered over a scenario set: one compact problem per
/// trajectory, sharing A, d, F, g and H.
struct StochasticProblem {
  std::vector<CompactProblem> compact;
  std::vector<double> weights;
  BudgetedUncertaintySet uncertainty;

  int scenario_count() const { return static_cast<int>(compact.size()); }
  int n() const { return compact.front().n; }
  /// sum_omega rho_omega c(omega)^T x
  double expected_revenue_cost(std::span<const double> x) const;
};

StochasticProblem lower(const OfferInstance& instance, const PriceScenarioSet& scenarios);

struct SolverConfig {
  solver::SolveSettings settings;
  const solver::SolverBackend* backend = nullptr;  // null: built-in engine

  const solver::SolverBackend& engine() const { return backend ? *backend : solver::default_backend(); }
};

struct MasterResult {
  solver::SolveStatus status = solver::SolveStatus::IterationLimit;
  std::vector<double> x;
  double eta = 0.0;
  long iterations = 0;
};

/// Master over a growing active set; keeps the LP basis between solves.
class CcgMaster {
 public:
  CcgMaster(const StochasticProblem& problem, SolverConfig config = {});

  void add_point(std::span<const double> xi);
  MasterResult solve();
  int point_count() const { return points_; }
  const solver::LinearModel& model() const { return model_; }

 private:
  const StochasticProblem* problem_;
  SolverConfig config_;
  solver::LinearModel model_;
  std::vector<int> x_;
  int eta_ = -1;
  int points_ = 0;
  std::shared_ptr<const solver::Basis> basis_;
  // Copies added since the last solve start from their own recourse basis
  // at x_hint_, which keeps the extended basis primal feasible.
  struct PendingBlock {
    int col = 0;
    int row = 0;
    std::shared_ptr<const solver::Basis> basis;
  };
  std::vector<PendingBlock> pending_;
  std::vector<double> x_hint_;
  std::vector<RecourseSolver> recourse_;
};

MasterResult solve_master(const StochasticProblem& problem, const std::vector<std::vector<double>>& points,
                          const SolverConfig& config = {});

struct SubproblemResult {
  std::vector<double> xi;
  double value = 0.0;       // sum_omega rho_omega * recourse value
  long vertex_index = -1;   // enumeration index, -1 from the MILP path
  bool used_milp = false;
};

/// Worst vertex by enumeration; ties go to the lowest index. Falls back to
/// the dualized MILP when the vertex count exceeds `cap`.
SubproblemResult exact_subproblem(const StochasticProblem& problem, std::span<const double> x,
                                  long cap = kDefaultVertexCap, const SolverConfig& config = {});

/// Per-vertex expected recourse values in enumeration order.
std::vector<double> vertex_values(const StochasticProblem& problem, std::span<const double> x,
                                  const std::vector<std::vector<double>>& vertices, const SolverConfig& config = {});

struct DualizedConfig {
  SolverConfig solver;
  /// Multiplies the structural dual bound; values below 1 make it invalid.
  double pi_bound_scale = 1.0;
};

/// max over pi in P(omega), z in {0,1}^p, sum z <= Gamma of the dual recourse
/// objective, with pi_r * z_t linearized by McCormick envelopes.
SubproblemResult dualized_subproblem_milp(const StochasticProblem& problem, std::span<const double> x,
                                          const DualizedConfig& config = {});

struct CcgIteration {
  int k = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  double master_time = 0.0;
  double sub_time = 0.0;
};

struct CcgSettings {
  double tol = 1e-4;
  int max_iterations = 100;
  long vertex_cap = kDefaultVertexCap;
  SolverConfig solver;
};

struct CcgState {
  int iteration = 0;
  std::vector<std::vector<double>> points;
  double lower_bound = -solver::kInf;
  double upper_bound = solver::kInf;
  std::vector<double> x;  // incumbent achieving upper_bound
  std::vector<CcgIteration> log;
  bool converged = false;
  solver::SolveStatus status = solver::SolveStatus::Optimal;  // last master status
};

CcgState ccg_solve(const StochasticProblem& problem, const CcgSettings& settings = {});

void write_ccg_log(const CcgState& state, std::ostream& out);

struct MonolithicResult {
  solver::SolveStatus status = solver::SolveStatus::IterationLimit;
  std::vector<double> x;
  double objective = 0.0;
  long vertices = 0;
};

/// Deterministic equivalent over every vertex of U. Throws Error(Capacity)
/// when the vertex count exceeds `cap`.
MonolithicResult solve_monolithic(const StochasticProblem& problem, long cap = kDefaultVertexCap,
                                  const SolverConfig& config = {});

}  // namespace deroffer
