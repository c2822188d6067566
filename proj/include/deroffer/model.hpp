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

// DER day-ahead offering instance and its lowering to the compact form
//   X = {x : A x >= d},   Y(x, xi) = {y : E x + F y >= g + H xi},
// with revenue c(omega)^T x and recourse cost b(omega)^T y.

#include <Eigen/SparseCore>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "deroffer/solver.hpp"
#include "deroffer/uncertainty.hpp"

namespace deroffer {

inline constexpr int kInstanceSchemaVersion = 1;

struct Battery {
  int bus = 0;
  double power_limit = 0.0;     // MW, charge and discharge
  double energy_limit = 0.0;    // MWh
  double efficiency = 1.0;      // round trip, (0, 1]
  double initial_energy = 0.0;  // MWh

  bool operator==(const Battery&) const = default;
};

struct PvUnit {
  int bus = 0;
  double share = 1.0;  // fraction of the aggregate availability xi_t

  bool operator==(const PvUnit&) const = default;
};

struct Line {
  int parent = 0;
  int child = 0;
  double resistance = 0.0;  // p.u. on base_mva
  double reactance = 0.0;   // p.u. on base_mva
  double flow_limit = 0.0;  // MW

  bool operator==(const Line&) const = default;
};

/// Radial feeder rooted at bus 0 (substation, fixed at 1 p.u.).
struct Network {
  int bus_count = 1;
  std::vector<Line> lines;
  double v_min = 0.95;  // p.u. magnitude
  double v_max = 1.05;
  double base_mva = 1.0;
  std::vector<double> load_share;  // per bus, sums to 1
  double reactive_ratio = 0.0;     // Q/P of every load

  bool operator==(const Network&) const = default;
};

struct OfferInstance {
  int horizon = 24;
  std::vector<std::vector<double>> price_grid;  // per hour, strictly ascending $/MWh
  std::vector<double> q_max;                    // MW
  std::vector<double> pv_forecast;              // MW, nominal availability xi_bar
  std::vector<double> load;                     // MW
  std::vector<PvUnit> pv_units;
  Battery battery;
  Network network;
  double penalty_price = 0.0;        // $/MWh on every deviation
  double rt_adder_fraction = 0.1;    // real-time adder as a fraction of the day-ahead price
  std::vector<double> pv_deviation;  // xi_hat, MW
  int gamma = 0;
  MarkovPriceChain price_chain;

  bool operator==(const OfferInstance&) const = default;
  int offer_count() const;
  /// Throws Error(Validation) or Error(Structure).
  void validate() const;
};

BudgetedUncertaintySet uncertainty_set(const OfferInstance& instance);

/// Row-major sparse matrix used for every block of the compact form.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class RowFamily {
  Nonnegativity,
  OfferCapacity,
  PvAvailability,
  BatteryPower,
  BatteryEnergy,
  StateOfCharge,
  LineFlow,
  Voltage,
  Balance,
};

enum class RecourseKind { Pv, Charge, Discharge, Energy, OverDelivery, Shortfall };

const char* to_string(RowFamily family) noexcept;
const char* to_string(RecourseKind kind) noexcept;

struct CompactProblem {
  int n = 0;  // first stage
  int m = 0;  // recourse
  int p = 0;  // uncertainty
  SparseMatrix A;
  std::vector<double> d;
  std::vector<double> c;
  std::vector<double> b;
  SparseMatrix E;
  SparseMatrix F;
  std::vector<double> g;
  SparseMatrix H;

  // Layout metadata.
  std::vector<int> x_hour;
  std::vector<int> x_block;
  std::vector<int> y_hour;
  std::vector<RecourseKind> y_kind;
  std::vector<RowFamily> a_family;
  std::vector<RowFamily> y_family;  // one per row of E/F/g/H

  int recourse_rows() const { return static_cast<int>(g.size()); }
  /// Dimension consistency check, throws Error(Dimension).
  void check() const;
};

std::vector<double> cleared_revenue_coeffs(const OfferInstance& instance, std::span<const double> trajectory);

/// b_t = penalty_price + rt_adder_fraction * lambda_t on both deviation slacks.
double deviation_price(const OfferInstance& instance, double day_ahead_price);

CompactProblem build_compact(const OfferInstance& instance, std::span<const double> trajectory);

/// One compact problem per trajectory, in scenario order.
std::vector<CompactProblem> build_compact_set(const OfferInstance& instance, const PriceScenarioSet& scenarios);

/// Sparse triplet dump, one "block row col value" line per nonzero.
void write_triplets(const CompactProblem& compact, std::ostream& out);

struct RecourseSolution {
  std::vector<double> y;
  double objective = 0.0;
  std::vector<double> dual;  // one per recourse row, >= 0
};

/// Solves min b^T y over {y : F y >= g + H xi - E x}. Rows whose F part is a
/// single entry are passed to the LP as variable bounds; their multipliers
/// are recovered from reduced costs. Keeps the last basis as a warm start,
/// so one instance must not be shared between threads.
class RecourseSolver {
 public:
  explicit RecourseSolver(const CompactProblem& compact, solver::SolveSettings settings = {},
                          const solver::SolverBackend* backend = nullptr);

  RecourseSolution solve(std::span<const double> x, std::span<const double> xi);
  /// Objective only; skips building the dual vector.
  double value(std::span<const double> x, std::span<const double> xi);

  const CompactProblem& compact() const { return *compact_; }
  /// Basis of the last solve. Its columns are y and its rows are the
  /// non-bound rows in the order add_recourse_copy emits them.
  std::shared_ptr<const solver::Basis> basis() const { return last_.basis; }

 private:
  struct BoundRow {
    int row;
    double coef;
  };
  void load_rhs(std::span<const double> x, std::span<const double> xi);
  const solver::SolveOutcome& run();

  const CompactProblem* compact_;
  solver::SolveSettings settings_;
  const solver::SolverBackend* backend_;
  solver::LinearModel model_;
  std::vector<int> model_row_of_;  // compact row -> model row or -1
  std::vector<std::vector<BoundRow>> lower_rows_;
  std::vector<std::vector<BoundRow>> upper_rows_;
  std::vector<double> rhs_;
  std::vector<BoundRow> active_lower_;  // row -1 when unbounded
  std::vector<BoundRow> active_upper_;
  solver::SolveOutcome last_;
};

RecourseSolution recourse_lp(const CompactProblem& compact, std::span<const double> x, std::span<const double> xi);

/// Value of the recourse LP dual objective pi^T (g + H xi - E x).
double dual_objective(const CompactProblem& compact, std::span<const double> pi, std::span<const double> x,
                      std::span<const double> xi);

/// max over rows of the violation of F^T pi = b and pi >= 0.
double dual_residual(const CompactProblem& compact, std::span<const double> pi);

/// Adds a recourse copy y to `model`: rows E x + F y >= g + H xi, where the
/// right-hand side may depend on model variables through `x_vars` (model ids
/// of x, or empty with `x_fixed`) and `xi_expr` (one affine expression per
/// hour). Singleton rows with constant right-hand side become bounds.
/// Returns the model id of y_0; the copy occupies m consecutive ids.
int add_recourse_copy(solver::LinearModel& model, const CompactProblem& compact, std::span<const int> x_vars,
                      std::span<const solver::AffineExpr> xi_expr);

/// Adds x with A x >= d and returns the n model ids.
std::vector<int> add_first_stage(solver::LinearModel& model, const CompactProblem& compact);

/// sum_j c_j x_j for x given by model ids.
solver::AffineExpr revenue_expr(const CompactProblem& compact, std::span<const int> x_vars);

double dot(std::span<const double> a, std::span<const double> b);

// Instance documents (JSON with a schema version).
using WarningSink = std::function<void(const std::string&)>;
OfferInstance parse_instance(const std::string& text, const WarningSink& warn = {});
std::string serialize_instance(const OfferInstance& instance);
OfferInstance load_instance(const std::filesystem::path& path, const WarningSink& warn = {});
void save_instance(const OfferInstance& instance, const std::filesystem::path& path);

}  // namespace deroffer
