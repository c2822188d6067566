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
#include <random>
#include <sstream>

#include "doctest.h"
#include "deroffer/error.hpp"
#include "deroffer/solver.hpp"
#include "oracles/tableau_simplex.hpp"

using namespace deroffer::solver;

namespace {

// Random feasible, bounded LP in both representations. Row senses are mixed
// and the box 0 <= x <= 10 is written as explicit rows for the oracle.
std::pair<LinearModel, oracle::DenseLp> random_lp(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> point(0.0, 5.0);
  std::vector<double> x0(cols);
  for (double& v : x0) v = point(rng);
  LinearModel model;
  oracle::DenseLp dense;
  for (int j = 0; j < cols; ++j) {
    model.add_variable(0.0, 10.0);
    const double c = coef(rng);
    model.set_objective_coef(j, c);
    dense.c.push_back(c);
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<Term> terms;
    std::vector<double> dense_row(cols, 0.0);
    double activity = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double a = coef(rng);
      terms.push_back({j, a});
      dense_row[j] = a;
      activity += a * x0[j];
    }
    const int kind = r % 3;
    RowSense sense = kind == 0 ? RowSense::LessEqual : kind == 1 ? RowSense::GreaterEqual : RowSense::Equal;
    double rhs = activity;
    if (kind == 0) rhs += point(rng);
    if (kind == 1) rhs -= point(rng);
    if (kind == 2 && r > 3) continue;  // keep a few equalities only
    model.add_constraint(terms, sense, rhs);
    dense.a.push_back(dense_row);
    dense.sense.push_back(kind == 0 ? oracle::Sense::Le : kind == 1 ? oracle::Sense::Ge : oracle::Sense::Eq);
    dense.b.push_back(rhs);
  }
  for (int j = 0; j < cols; ++j) {
    std::vector<double> box(cols, 0.0);
    box[j] = 1.0;
    dense.a.push_back(box);
    dense.sense.push_back(oracle::Sense::Le);
    dense.b.push_back(10.0);
  }
  return {std::move(model), std::move(dense)};
}

// Lagrangian dual objective sum_r y_r rhs_r + sum_j d_j x_j (minimization).
double dual_objective(const LinearModel& model, const SolveOutcome& out) {
  double value = model.objective_constant();
  for (int r = 0; r < model.num_constraints(); ++r) value += out.duals[r] * model.constraints()[r].rhs;
  for (int j = 0; j < model.num_variables(); ++j) value += out.reduced_costs[j] * out.primal[j];
  return value;
}

}  // namespace

TEST_CASE("two-variable covering LP") {
  LinearModel model;
  const int x1 = model.add_variable(0.0, kInf);
  const int x2 = model.add_variable(0.0, kInf);
  model.set_objective_coef(x1, 1.0);
  model.set_objective_coef(x2, 1.0);
  model.add_constraint({{x1, 1.0}, {x2, 1.0}}, RowSense::GreaterEqual, 1.0);
  const SolveOutcome out = solve_lp(model);
  REQUIRE(out.status == SolveStatus::Optimal);
  CHECK(out.objective == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.duals[0] == doctest::Approx(1.0));
}

TEST_CASE("unbounded and infeasible LPs are reported as status") {
  LinearModel unbounded;
  const int x = unbounded.add_variable(0.0, kInf);
  unbounded.set_objective_coef(x, 1.0);
  unbounded.set_sense(ObjSense::Maximize);
  CHECK(solve_lp(unbounded).status == SolveStatus::Unbounded);

  LinearModel infeasible;
  const int a = infeasible.add_variable(0.0, 1.0);
  infeasible.add_constraint({{a, 1.0}}, RowSense::GreaterEqual, 2.0);
  CHECK(solve_lp(infeasible).status == SolveStatus::Infeasible);
}

TEST_CASE("free variables and equalities") {
  // min |u| style: min t s.t. t >= u - 3, t >= 3 - u, u free, u + w = 5, w in [0,1]
  LinearModel model;
  const int u = model.add_variable(-kInf, kInf);
  const int t = model.add_variable(-kInf, kInf);
  const int w = model.add_variable(0.0, 1.0);
  model.set_objective_coef(t, 1.0);
  model.add_constraint({{t, 1.0}, {u, -1.0}}, RowSense::GreaterEqual, -3.0);
  model.add_constraint({{t, 1.0}, {u, 1.0}}, RowSense::GreaterEqual, 3.0);
  model.add_constraint({{u, 1.0}, {w, 1.0}}, RowSense::Equal, 5.0);
  const SolveOutcome out = solve_lp(model);
  REQUIRE(out.optimal());
  CHECK(out.objective == doctest::Approx(1.0));
  CHECK(out.primal[u] == doctest::Approx(4.0));
}

TEST_CASE("random dense LPs match the tableau oracle") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 25; ++trial) {
    auto [model, dense] = random_lp(rng, 20, 30);
    const oracle::TableauResult expected = oracle::tableau_solve(dense);
    REQUIRE(expected.feasible);
    REQUIRE(expected.bounded);
    const SolveOutcome out = solve_lp(model);
    REQUIRE(out.optimal());
    CHECK(std::abs(out.objective - expected.objective) <= 1e-8 * (1.0 + std::abs(expected.objective)));
    CHECK(primal_residual(model, out.primal) <= 1e-6);
    // Weak duality holds with equality at the optimum.
    CHECK(std::abs(dual_objective(model, out) - out.objective) <= 1e-6 * (1.0 + std::abs(out.objective)));
    for (int r = 0; r < model.num_constraints(); ++r) {
      const Constraint& c = model.constraints()[r];
      double activity = 0.0;
      for (const Term& term : c.terms) activity += term.coef * out.primal[term.var];
      if (c.sense == RowSense::GreaterEqual) CHECK(out.duals[r] >= -1e-9);
      if (c.sense == RowSense::LessEqual) CHECK(out.duals[r] <= 1e-9);
      CHECK(std::abs(out.duals[r] * (activity - c.rhs)) <= 1e-6);
    }
  }
}

TEST_CASE("maximization duals follow the model sense") {
  // max 3x + 2y s.t. x + y <= 4, x <= 3  -> 11, dual of first row = 2
  LinearModel model;
  const int x = model.add_variable(0.0, kInf);
  const int y = model.add_variable(0.0, kInf);
  model.set_sense(ObjSense::Maximize);
  model.set_objective_coef(x, 3.0);
  model.set_objective_coef(y, 2.0);
  model.add_constraint({{x, 1.0}, {y, 1.0}}, RowSense::LessEqual, 4.0);
  model.add_constraint({{x, 1.0}}, RowSense::LessEqual, 3.0);
  const SolveOutcome out = solve_lp(model);
  REQUIRE(out.optimal());
  CHECK(out.objective == doctest::Approx(11.0));
  CHECK(out.duals[0] == doctest::Approx(2.0));
  CHECK(out.duals[1] == doctest::Approx(1.0));
}

TEST_CASE("permuted solve reaches the same optimum") {
  std::mt19937_64 rng(7);
  auto [model, dense] = random_lp(rng, 15, 25);
  const SolveOutcome base = solve_lp(model);
  SolveSettings settings;
  settings.permutation_seed = 99;
  const SolveOutcome permuted = solve_lp(model, settings);
  REQUIRE(base.optimal());
  REQUIRE(permuted.optimal());
  CHECK(std::abs(base.objective - permuted.objective) <= 1e-8 * (1.0 + std::abs(base.objective)));
}

TEST_CASE("highly degenerate assignment LP") {
  const int n = 12;
  LinearModel model;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cost(1, 3);  // many ties
  for (int i = 0; i < n * n; ++i) {
    model.add_variable(0.0, kInf);
    model.set_objective_coef(i, cost(rng));
  }
  for (int i = 0; i < n; ++i) {
    std::vector<Term> row;
    std::vector<Term> col;
    for (int j = 0; j < n; ++j) {
      row.push_back({i * n + j, 1.0});
      col.push_back({j * n + i, 1.0});
    }
    model.add_constraint(row, RowSense::Equal, 1.0);
    model.add_constraint(col, RowSense::Equal, 1.0);
  }
  const SolveOutcome out = solve_lp(model);
  REQUIRE(out.optimal());
  CHECK(out.objective >= n - 1e-9);
  CHECK(primal_residual(model, out.primal) <= 1e-9);
}

TEST_CASE("knapsack MILP") {
  LinearModel model;
  const int a = model.add_binary();
  const int b = model.add_binary();
  model.set_sense(ObjSense::Maximize);
  model.set_objective_coef(a, 3.0);
  model.set_objective_coef(b, 2.0);
  model.add_constraint({{a, 1.0}, {b, 1.0}}, RowSense::LessEqual, 1.0);
  const SolveOutcome out = solve_milp(model);
  REQUIRE(out.optimal());
  CHECK(out.objective == doctest::Approx(3.0));
  CHECK(out.primal[a] == 1.0);
}

TEST_CASE("all-binary models match exhaustive enumeration") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-4.0, 6.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6 + trial % 7;  // up to 12 binaries
    const int rows = 3 + trial % 4;
    LinearModel model;
    model.set_sense(trial % 2 ? ObjSense::Maximize : ObjSense::Minimize);
    for (int j = 0; j < n; ++j) {
      model.add_binary();
      model.set_objective_coef(j, coef(rng));
    }
    std::vector<std::vector<double>> a(rows, std::vector<double>(n));
    std::vector<double> rhs(rows);
    for (int r = 0; r < rows; ++r) {
      std::vector<Term> terms;
      for (int j = 0; j < n; ++j) {
        a[r][j] = coef(rng);
        terms.push_back({j, a[r][j]});
      }
      rhs[r] = 2.0 + coef(rng);
      model.add_constraint(terms, RowSense::LessEqual, rhs[r]);
    }
    // 2^n enumeration oracle
    bool found = false;
    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      bool ok = true;
      for (int r = 0; r < rows && ok; ++r) {
        double act = 0.0;
        for (int j = 0; j < n; ++j) act += ((mask >> j) & 1u) ? a[r][j] : 0.0;
        ok = act <= rhs[r] + 1e-12;
      }
      if (!ok) continue;
      double value = 0.0;
      for (int j = 0; j < n; ++j) value += ((mask >> j) & 1u) ? model.objective()[j] : 0.0;
      const bool better = model.sense() == ObjSense::Maximize ? value > best : value < best;
      if (!found || better) best = value;
      found = true;
    }
    const SolveOutcome out = solve_milp(model);
    if (!found) {
      CHECK(out.status == SolveStatus::Infeasible);
      continue;
    }
    REQUIRE(out.optimal());
    CHECK(out.objective == doctest::Approx(best).epsilon(1e-9));
    // Relaxation bound brackets the integer optimum; bound trace is monotone.
    if (model.sense() == ObjSense::Maximize) {
      CHECK(out.bnb.root_bound >= out.objective - 1e-9);
    } else {
      CHECK(out.bnb.root_bound <= out.objective + 1e-9);
    }
    for (std::size_t k = 1; k < out.bnb.bound_trace.size(); ++k) {
      if (model.sense() == ObjSense::Maximize) {
        CHECK(out.bnb.bound_trace[k] <= out.bnb.bound_trace[k - 1] + 1e-12);
      } else {
        CHECK(out.bnb.bound_trace[k] >= out.bnb.bound_trace[k - 1] - 1e-12);
      }
    }
  }
}

TEST_CASE("node limit yields iteration-limit with incumbent data") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(1.0, 10.0);
  LinearModel model;
  model.set_sense(ObjSense::Maximize);
  std::vector<Term> weight;
  for (int j = 0; j < 25; ++j) {
    model.add_binary();
    model.set_objective_coef(j, coef(rng));
    weight.push_back({j, coef(rng)});
  }
  model.add_constraint(weight, RowSense::LessEqual, 40.0);
  SolveSettings settings;
  settings.node_limit = 3;
  const SolveOutcome out = solve_milp(model, settings);
  CHECK(out.status == SolveStatus::IterationLimit);
  CHECK(out.bnb.nodes == 3);
}

TEST_CASE("backend contract: LP and MILP paths agree on a pure LP") {
  std::mt19937_64 rng(17);
  auto [model, dense] = random_lp(rng, 10, 14);
  const SolveOutcome lp = solve_lp(model);
  const SolveOutcome via_backend = default_backend().solve(model, {});
  const SolveOutcome milp = solve_milp(model);
  CHECK(std::abs(lp.objective - milp.objective) <= 1e-8);
  CHECK(std::abs(lp.objective - via_backend.objective) <= 1e-8);
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(23);
  auto [model, dense] = random_lp(rng, 12, 18);
  const SolveOutcome a = solve_lp(model);
  const SolveOutcome b = solve_lp(model);
  CHECK(a.primal == b.primal);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("model validation") {
  LinearModel bad_bounds;
  bad_bounds.add_variable(2.0, 1.0);
  CHECK_THROWS_AS(bad_bounds.validate(), deroffer::Error);

  LinearModel bad_binary;
  bad_binary.add_variable(0.0, 2.0, VarKind::Binary);
  CHECK_THROWS_AS(bad_binary.validate(), deroffer::Error);

  LinearModel bad_index;
  bad_index.add_variable(0.0, 1.0);
  bad_index.add_constraint({{3, 1.0}}, RowSense::LessEqual, 1.0);
  CHECK_THROWS_AS(solve_lp(bad_index), deroffer::Error);

  LinearModel with_binary;
  with_binary.add_binary();
  CHECK_THROWS_AS(solve_lp(with_binary), deroffer::Error);
}

TEST_CASE("warm starts: optimal basis restarts in zero pivots") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    auto [model, dense] = random_lp(rng, 8, 6);
    const SolveOutcome cold = solve_lp(model);
    REQUIRE(cold.optimal());
    REQUIRE(cold.basis);
    SolveSettings settings;
    settings.warm_start = cold.basis;
    const SolveOutcome warm = solve_lp(model, settings);
    REQUIRE(warm.optimal());
    CHECK(warm.iterations == 0);
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-10));
  }
}

TEST_CASE("warm starts: a basis of the wrong shape is ignored") {
  std::mt19937_64 rng(78);
  auto [model, dense] = random_lp(rng, 6, 5);
  const SolveOutcome cold = solve_lp(model);
  REQUIRE(cold.optimal());
  SolveSettings settings;
  settings.warm_start = std::make_shared<const Basis>(slack_basis(2, 2));
  const SolveOutcome warm = solve_lp(model, settings);
  REQUIRE(warm.optimal());
  CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-10));
}

TEST_CASE("warm starts: extended and embedded bases keep the optimum") {
  // Two copies of one LP side by side; the second copy starts from the
  // first copy's own optimal basis.
  std::mt19937_64 rng(79);
  auto [model, dense] = random_lp(rng, 7, 5);
  const SolveOutcome single = solve_lp(model);
  REQUIRE(single.optimal());
  LinearModel twice = model;
  const int cols = model.num_variables();
  for (int j = 0; j < cols; ++j) {
    const int v = twice.add_variable(0.0, 10.0);
    twice.set_objective_coef(v, model.objective()[j]);
  }
  for (const auto& row : model.constraints()) {
    std::vector<Term> terms = row.terms;
    for (Term& t : terms) t.var += cols;
    twice.add_constraint(std::move(terms), row.sense, row.rhs);
  }
  Basis start = extend_basis(*single.basis, twice.num_variables(), twice.num_constraints());
  CHECK(start.head.size() == static_cast<std::size_t>(twice.num_constraints()));
  embed_basis(start, *single.basis, cols, model.num_constraints());
  SolveSettings settings;
  settings.warm_start = std::make_shared<const Basis>(start);
  const SolveOutcome warm = solve_lp(twice, settings);
  REQUIRE(warm.optimal());
  CHECK(warm.iterations == 0);
  CHECK(warm.objective == doctest::Approx(2.0 * single.objective).epsilon(1e-10));

  Basis small = slack_basis(1, 1);
  CHECK_THROWS_AS(embed_basis(small, *single.basis, 0, 0), deroffer::Error);
  CHECK_THROWS_AS(extend_basis(*single.basis, 1, 1), deroffer::Error);
}

TEST_CASE("MILP root warm start does not change the optimum") {
  std::mt19937_64 rng(80);
  std::uniform_real_distribution<double> w(1.0, 9.0);
  std::vector<double> value(12), weight(12);
  for (int j = 0; j < 12; ++j) {
    value[j] = w(rng);
    weight[j] = w(rng);
  }
  auto knapsack = [&](VarKind kind) {
    LinearModel model;
    model.set_sense(ObjSense::Maximize);
    std::vector<Term> cap;
    for (int j = 0; j < 12; ++j) {
      const int v = model.add_variable(0.0, 1.0, kind);
      model.set_objective_coef(v, value[j]);
      cap.push_back({v, weight[j]});
    }
    model.add_constraint(cap, RowSense::LessEqual, 20.0);
    return model;
  };
  const LinearModel model = knapsack(VarKind::Binary);
  const SolveOutcome cold = solve_milp(model);
  REQUIRE(cold.optimal());
  SolveSettings settings;
  settings.warm_start = solve_lp(knapsack(VarKind::Continuous)).basis;
  const SolveOutcome warm = solve_milp(model, settings);
  REQUIRE(warm.optimal());
  CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-10));
}

TEST_CASE("LP text dump") {
  LinearModel model;
  const int a = model.add_binary();
  const int b = model.add_variable(-kInf, kInf);
  model.set_objective_coef(a, 2.0);
  model.add_constraint({{a, 1.0}, {b, -1.0}}, RowSense::GreaterEqual, 0.5);
  std::ostringstream out;
  write_lp_format(model, out);
  const std::string text = out.str();
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("c0: + 1 x0 - 1 x1 >= 0.5") != std::string::npos);
  CHECK(text.find("x1 free") != std::string::npos);
  CHECK(text.find("Binaries\n x0") != std::string::npos);
}
