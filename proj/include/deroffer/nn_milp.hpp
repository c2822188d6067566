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

// Big-M MILP encodings of the surrogate and the NN-accelerated CCG loop.

#include <ostream>
#include <span>
#include <vector>

#include "deroffer/ccg.hpp"
#include "deroffer/solver.hpp"
#include "deroffer/surrogate.hpp"

namespace deroffer {

struct ReluNeuron {
  int layer = 0;
  int unit = 0;
  double lower = 0.0;  // pre-activation interval
  double upper = 0.0;
  int post = -1;       // model variable, -1 when the unit is stable
  int indicator = -1;  // binary, -1 when the unit is stable
};

struct ReluEncoding {
  std::vector<solver::AffineExpr> outputs;
  std::vector<double> output_lower;
  std::vector<double> output_upper;
  std::vector<ReluNeuron> neurons;  // hidden units

  int binary_count() const;
};

/// Encodes `mlp` applied to `inputs`, each confined to [lower_i, upper_i].
/// Unstable hidden units get h >= a, h >= 0, h <= a - L(1 - d), h <= U d.
/// Throws Error(Validation) when a box side is not finite.
ReluEncoding encode_relu(solver::LinearModel& model, const MlpParams& mlp, std::span<const solver::AffineExpr> inputs,
                         std::span<const double> lower, std::span<const double> upper);

struct ArgmaxEncoding {
  std::vector<int> selectors;  // binaries, sum = 1
  int selected = -1;           // continuous, equals the largest value
};

/// s >= v_i, s <= v_i + M_i (1 - beta_i), sum beta = 1 with
/// M_i = max_j upper_j - lower_i. Throws Error(Validation) on missing bounds.
ArgmaxEncoding encode_argmax(solver::LinearModel& model, std::span<const solver::AffineExpr> values,
                             std::span<const double> lower, std::span<const double> upper);

/// Precomputed pieces of a trained surrogate on one lowered problem.
class SurrogateView {
 public:
  SurrogateView(const StochasticProblem& problem, const SurrogateModel& model, const SolverConfig& config = {});

  const StochasticProblem& problem() const { return *problem_; }
  const SurrogateModel& model() const { return *model_; }
  std::vector<double> x_embedding(std::span<const double> x) const;
  std::vector<double> xi_embedding(std::span<const double> xi) const;
  /// Surrogate value in $ through the linear embeddings.
  double predict(std::span<const double> x, std::span<const double> xi) const;

  const std::vector<std::vector<double>>& x_rows() const { return x_rows_; }
  const std::vector<std::vector<double>>& xi_rows() const { return xi_rows_; }
  /// Range of each x-embedding coordinate over X.
  const std::vector<double>& x_lower() const { return x_lower_; }
  const std::vector<double>& x_upper() const { return x_upper_; }

 private:
  const StochasticProblem* problem_;
  const SurrogateModel* model_;
  std::vector<std::vector<double>> x_rows_;
  std::vector<std::vector<double>> xi_rows_;
  std::vector<double> x_lower_;
  std::vector<double> x_upper_;
};

struct NnMasterResult {
  solver::SolveStatus status = solver::SolveStatus::IterationLimit;
  std::vector<double> x;
  double objective = 0.0;
  int selected = -1;               // index into S
  std::vector<double> predicted;   // surrogate value of each S member at x
  long nodes = 0;
};

/// min_x E[c^T x + b^T y_omega] with one recourse copy per trajectory facing
/// the member of S that the surrogate ranks worst at x.
NnMasterResult nn_master(const SurrogateView& view, const std::vector<std::vector<double>>& active,
                         const SolverConfig& config = {});

struct NnSubproblemResult {
  solver::SolveStatus status = solver::SolveStatus::IterationLimit;
  std::vector<double> xi;  // surrogate argmax
  double predicted = 0.0;
  std::vector<std::vector<double>> candidates;  // best first, candidates[0] == xi
  std::vector<double> candidate_values;
};

/// max over the vertices of U of the surrogate at fixed x. With
/// `candidates` > 1 the next best vertices follow, found under no-good cuts
/// (fewer when U runs out of vertices).
NnSubproblemResult nn_subproblem(const SurrogateView& view, std::span<const double> x,
                                 const SolverConfig& config = {}, int candidates = 1);

/// Exact sum_omega rho_omega Q_omega(x, xi) from recourse LPs.
double verify_candidate(const StochasticProblem& problem, std::span<const double> x, std::span<const double> xi,
                        const SolverConfig& config = {});

/// Budget spent on the hours with the largest deviation (lowest hour first
/// on ties).
std::vector<double> initial_scenario(const BudgetedUncertaintySet& u);

struct NnCcgSettings {
  double epsilon = 0.005;  // relative to max(1, |value|)
  int max_iterations = 50;
  bool verify = true;      // stopping test on exact values
  int candidates = 5;      // surrogate top picks verified per iteration
  SolverConfig solver;
};

struct NnCcgIteration {
  int k = 0;
  int active = 0;             // |S| when the master was solved
  double predicted = 0.0;     // surrogate worst value at x (total $)
  double verified = 0.0;      // exact value of that worst case (total $)
  double best_active = 0.0;   // best value over S, same mode as the test
  double master_objective = 0.0;
  double master_time = 0.0;
  double sub_time = 0.0;
  double verify_time = 0.0;
  long master_nodes = 0;
};

struct NnCcgResult {
  std::vector<double> x;
  // The visited x with the smallest verified value E[c^T x] + max exact
  // recourse over S and that iteration's candidate.
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  solver::SolveStatus status = solver::SolveStatus::Optimal;
  std::vector<std::vector<double>> active;
  std::vector<std::vector<double>> visited_x;
  std::vector<NnCcgIteration> log;
};

NnCcgResult nn_ccg(const SurrogateView& view, const NnCcgSettings& settings = {});

void write_nn_ccg_log(const NnCcgResult& result, std::ostream& out);

}  // namespace deroffer
