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

// Self-contained LP / MILP engine. Every optimization model in the library is
// expressed as a LinearModel and handed to a SolverBackend, so an external
// solver can be slotted in without touching the callers.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace deroffer::solver {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class ObjSense { Minimize, Maximize };
enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(SolveStatus status) noexcept;

struct Term {
  int var;
  double coef;
};

/// Sum of coefficient * variable plus a constant.
struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  static AffineExpr constant_of(double value) { return AffineExpr{{}, value}; }
  static AffineExpr variable(int var, double coef = 1.0) { return AffineExpr{{{var, coef}}, 0.0}; }

  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  AffineExpr& add(const AffineExpr& other, double scale = 1.0);
  double evaluate(std::span<const double> values) const;
  bool is_constant() const { return terms.empty(); }
};

struct Variable {
  double lower = 0.0;
  double upper = kInf;
  VarKind kind = VarKind::Continuous;
  std::string name;
};

struct Constraint {
  std::vector<Term> terms;
  RowSense sense = RowSense::GreaterEqual;
  double rhs = 0.0;
  std::string name;
};

class LinearModel {
 public:
  int add_variable(double lower, double upper, VarKind kind = VarKind::Continuous,
                   std::string name = {});
  int add_binary(std::string name = {}) { return add_variable(0.0, 1.0, VarKind::Binary, std::move(name)); }

  int add_constraint(std::vector<Term> terms, RowSense sense, double rhs, std::string name = {});
  /// Adds `lhs sense rhs`, moving the constant of `lhs` to the right-hand side.
  int add_constraint(const AffineExpr& lhs, RowSense sense, double rhs, std::string name = {});

  void set_objective_coef(int var, double coef);
  void add_objective(const AffineExpr& expr, double scale = 1.0);
  void set_objective_constant(double value) { objective_constant_ = value; }
  void set_sense(ObjSense sense) { sense_ = sense; }

  void set_bounds(int var, double lower, double upper);
  void set_rhs(int row, double rhs) { constraints_.at(static_cast<std::size_t>(row)).rhs = rhs; }

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<double>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  ObjSense sense() const { return sense_; }
  bool has_binaries() const;

  /// Throws Error(Validation) on inconsistent bounds, binary bounds outside
  /// [0,1], out-of-range indices or non-finite coefficients.
  void validate() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
  ObjSense sense_ = ObjSense::Minimize;
};

/// Simplex basis snapshot. Indices below `cols` are structural columns,
/// `cols + r` is the logical of row r. Backends other than the built-in one
/// may ignore it.
struct Basis {
  int cols = 0;
  int rows = 0;
  std::vector<int> head;
  std::vector<signed char> state;
};

/// Carries a basis over to a model that appends columns and rows to the one
/// it came from: new columns start nonbasic, new logicals become basic.
Basis extend_basis(const Basis& basis, int cols, int rows);

/// All logicals basic, structurals nonbasic.
Basis slack_basis(int cols, int rows);

/// Overwrites the statuses of a contiguous block of columns and rows with
/// those of `block`, a basis of the block taken on its own. Column j of the
/// block maps to col_offset + j and its row r to row_offset + r.
void embed_basis(Basis& into, const Basis& block, int col_offset, int row_offset);

struct BnbStats {
  long nodes = 0;
  long incumbents = 0;
  double root_bound = 0.0;
  /// Global best bound after each processed node (model sense).
  std::vector<double> bound_trace;
};

/// Duals and reduced costs follow the model's own sense: dual[r] is the
/// rate of change of the optimal objective per unit increase of rhs[r].
struct SolveOutcome {
  SolveStatus status = SolveStatus::IterationLimit;
  std::vector<double> primal;
  double objective = 0.0;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  long iterations = 0;
  double best_bound = 0.0;
  BnbStats bnb;
  std::shared_ptr<const Basis> basis;  // LP solves only

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SolveSettings {
  double gap_tol = 1e-6;
  long node_limit = 200000;
  long iteration_limit = 0;  // 0: derived from model size
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  double integrality_tol = 1e-6;
  int refactor_interval = 100;
  /// Non-zero: solve a row/column-permuted copy, which changes the pivot
  /// sequence but not the optimum.
  std::uint64_t permutation_seed = 0;
  /// Starting basis (for a MILP, of the root relaxation); ignored when it
  /// does not fit the model.
  std::shared_ptr<const Basis> warm_start;
};

SolveOutcome solve_lp(const LinearModel& model, const SolveSettings& settings = {});
SolveOutcome solve_milp(const LinearModel& model, const SolveSettings& settings = {});

/// Anything that can turn a LinearModel into a SolveOutcome. Failures must
/// be reported through SolveStatus, not exceptions.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual SolveOutcome solve(const LinearModel& model, const SolveSettings& settings) const = 0;
  virtual std::string name() const = 0;
};

/// Dispatches to solve_lp or solve_milp depending on the variable kinds.
class BuiltinBackend final : public SolverBackend {
 public:
  SolveOutcome solve(const LinearModel& model, const SolveSettings& settings) const override;
  std::string name() const override { return "builtin"; }
};

const SolverBackend& default_backend();

/// CPLEX-LP text dump for cross-checking with external tools.
void write_lp_format(const LinearModel& model, std::ostream& out);

/// max |row activity violation| and bound violation of `values`.
double primal_residual(const LinearModel& model, std::span<const double> values);

}  // namespace deroffer::solver
