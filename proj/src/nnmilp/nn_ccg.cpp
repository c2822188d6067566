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
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/nn_milp.hpp"

namespace deroffer {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

solver::AffineExpr linear_embedding(const std::vector<std::vector<double>>& rows, std::span<const int> vars, int k) {
  solver::AffineExpr e;
  for (std::size_t i = 0; i < rows.size(); ++i) e.add(vars[i], rows[i][k]);
  return e;
}

// Value head with denormalization, as an affine expression plus bounds.
struct EncodedValue {
  solver::AffineExpr value;
  double lower = 0.0;
  double upper = 0.0;
};

EncodedValue encode_value(solver::LinearModel& model, const SurrogateModel& sm, std::vector<solver::AffineExpr> inputs,
                          std::vector<double> lower, std::vector<double> upper) {
  const ReluEncoding enc = encode_relu(model, sm.phi_value, inputs, lower, upper);
  EncodedValue out;
  out.value = solver::AffineExpr::constant_of(sm.norm.label_mean);
  out.value.add(enc.outputs[0], sm.norm.label_scale);
  out.lower = sm.norm.denormalize_label(enc.output_lower[0]);
  out.upper = sm.norm.denormalize_label(enc.output_upper[0]);
  return out;
}

// One recourse solver per trajectory, reused across verifications.
class Verifier {
 public:
  Verifier(const StochasticProblem& pb, const SolverConfig& config) : pb_(pb) {
    solvers_.reserve(pb.scenario_count());
    for (const CompactProblem& cp : pb.compact) solvers_.emplace_back(cp, config.settings, config.backend);
  }
  double recourse(std::span<const double> x, std::span<const double> xi) {
    double total = 0.0;
    for (int w = 0; w < pb_.scenario_count(); ++w) total += pb_.weights[w] * solvers_[w].value(x, xi);
    return total;
  }

 private:
  const StochasticProblem& pb_;
  std::vector<RecourseSolver> solvers_;
};

}  // namespace

SurrogateView::SurrogateView(const StochasticProblem& problem, const SurrogateModel& model, const SolverConfig& config)
    : problem_(&problem), model_(&model) {
  model.validate();
  const FeatureContext ctx = token_features(problem);
  x_rows_ = embedding_rows(model, ctx, TokenKind::X);
  xi_rows_ = embedding_rows(model, ctx, TokenKind::Xi);

  // Embedding ranges over X from one LP per side and coordinate.
  solver::LinearModel lp;
  const std::vector<int> x = add_first_stage(lp, problem.compact.front());
  const int e = model.embedding_width();
  for (int k = 0; k < e; ++k) {
    for (solver::ObjSense sense : {solver::ObjSense::Minimize, solver::ObjSense::Maximize}) {
      solver::LinearModel probe = lp;
      probe.set_sense(sense);
      for (std::size_t i = 0; i < x.size(); ++i) probe.set_objective_coef(x[i], x_rows_[i][k]);
      const solver::SolveOutcome out = config.engine().solve(probe, config.settings);
      if (!out.optimal()) {
        fail(ErrorKind::Validation,
             "surrogate view: embedding range over X is unbounded or X is empty; X must be a bounded polytope");
      }
      (sense == solver::ObjSense::Minimize ? x_lower_ : x_upper_).push_back(out.objective);
    }
  }
}

std::vector<double> SurrogateView::x_embedding(std::span<const double> x) const {
  require(x.size() == x_rows_.size(), ErrorKind::Dimension, "x_embedding: wrong length");
  std::vector<double> e(model_->embedding_width(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += x[i] * x_rows_[i][k];
  }
  return e;
}

std::vector<double> SurrogateView::xi_embedding(std::span<const double> xi) const {
  require(xi.size() == xi_rows_.size(), ErrorKind::Dimension, "xi_embedding: wrong length");
  std::vector<double> e(model_->embedding_width(), 0.0);
  for (std::size_t t = 0; t < xi.size(); ++t) {
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += xi[t] * xi_rows_[t][k];
  }
  return e;
}

double SurrogateView::predict(std::span<const double> x, std::span<const double> xi) const {
  return forward_value(*model_, x_embedding(x), xi_embedding(xi));
}

NnMasterResult nn_master(const SurrogateView& view, const std::vector<std::vector<double>>& active,
                         const SolverConfig& config) {
  require(!active.empty(), ErrorKind::Validation, "nn_master: active set is empty");
  const StochasticProblem& pb = view.problem();
  const SurrogateModel& sm = view.model();
  const int e = sm.embedding_width();
  solver::LinearModel model;
  const std::vector<int> x = add_first_stage(model, pb.compact.front());

  std::vector<solver::AffineExpr> ex;
  for (int k = 0; k < e; ++k) ex.push_back(linear_embedding(view.x_rows(), x, k));

  std::vector<solver::AffineExpr> values;
  std::vector<double> v_lo, v_hi;
  for (const auto& xi : active) {
    require(static_cast<int>(xi.size()) == pb.uncertainty.dimension(), ErrorKind::Dimension,
            "nn_master: scenario has wrong length");
    const std::vector<double> exi = view.xi_embedding(xi);
    std::vector<solver::AffineExpr> inputs = ex;
    std::vector<double> lo = view.x_lower();
    std::vector<double> hi = view.x_upper();
    for (double v : exi) {
      inputs.push_back(solver::AffineExpr::constant_of(v));
      lo.push_back(v);
      hi.push_back(v);
    }
    EncodedValue val = encode_value(model, sm, std::move(inputs), std::move(lo), std::move(hi));
    values.push_back(std::move(val.value));
    v_lo.push_back(val.lower);
    v_hi.push_back(val.upper);
  }
  const ArgmaxEncoding arg = encode_argmax(model, values, v_lo, v_hi);

  // The recourse copies face xi_hat(x) = sum_i beta_i xi^(i).
  std::vector<solver::AffineExpr> xi_expr(pb.uncertainty.dimension());
  for (std::size_t i = 0; i < active.size(); ++i) {
    for (std::size_t t = 0; t < xi_expr.size(); ++t) {
      if (active[i][t] != 0.0) xi_expr[t].add(arg.selectors[i], active[i][t]);
    }
  }
  for (int w = 0; w < pb.scenario_count(); ++w) {
    const CompactProblem& cp = pb.compact[w];
    const int y0 = add_recourse_copy(model, cp, x, xi_expr);
    model.add_objective(revenue_expr(cp, x), pb.weights[w]);
    for (int j = 0; j < cp.m; ++j) model.set_objective_coef(y0 + j, model.objective()[y0 + j] + pb.weights[w] * cp.b[j]);
  }

  const solver::SolveOutcome out = config.engine().solve(model, config.settings);
  NnMasterResult result;
  result.status = out.status;
  result.nodes = out.bnb.nodes;
  if (!out.optimal()) {
    if (out.status == solver::SolveStatus::Infeasible) {
      fail(ErrorKind::Internal, "nn_master: infeasible although the recourse is complete");
    }
    return result;
  }
  result.objective = out.objective;
  for (int v : x) result.x.push_back(out.primal[v]);
  double best = -1.0;
  for (std::size_t i = 0; i < arg.selectors.size(); ++i) {
    if (out.primal[arg.selectors[i]] > best) {
      best = out.primal[arg.selectors[i]];
      result.selected = static_cast<int>(i);
    }
  }
  for (const auto& xi : active) result.predicted.push_back(view.predict(result.x, xi));
  return result;
}

NnSubproblemResult nn_subproblem(const SurrogateView& view, std::span<const double> x, const SolverConfig& config,
                                 int candidates) {
  require(candidates > 0, ErrorKind::Validation, "nn_subproblem: candidate count must be positive");
  const BudgetedUncertaintySet& u = view.problem().uncertainty;
  const SurrogateModel& sm = view.model();
  const int e = sm.embedding_width();
  const int p = u.dimension();
  solver::LinearModel model;
  model.set_sense(solver::ObjSense::Maximize);
  std::vector<int> z(p, -1);
  std::vector<solver::Term> budget;
  for (int t : u.active_hours()) {
    z[t] = model.add_binary();
    budget.push_back({z[t], 1.0});
  }
  if (!budget.empty()) model.add_constraint(std::move(budget), solver::RowSense::LessEqual, u.gamma());

  const std::vector<double> ex = view.x_embedding(x);
  std::vector<solver::AffineExpr> inputs;
  std::vector<double> lo, hi;
  for (double v : ex) {
    inputs.push_back(solver::AffineExpr::constant_of(v));
    lo.push_back(v);
    hi.push_back(v);
  }
  // e_k = sum_t (xi_bar_t - xi_hat_t z_t) R_tk; the range over the budget
  // polytope takes the gamma most extreme slopes on each side.
  for (int k = 0; k < e; ++k) {
    solver::AffineExpr ek;
    std::vector<double> slopes;
    for (int t = 0; t < p; ++t) {
      ek.constant += u.xi_bar()[t] * view.xi_rows()[t][k];
      if (z[t] >= 0) {
        const double slope = -u.xi_hat()[t] * view.xi_rows()[t][k];
        ek.add(z[t], slope);
        slopes.push_back(slope);
      }
    }
    std::sort(slopes.begin(), slopes.end());
    double down = 0.0, up = 0.0;
    const int take = std::min<int>(u.gamma(), static_cast<int>(slopes.size()));
    for (int i = 0; i < take; ++i) {
      down += std::min(0.0, slopes[i]);
      up += std::max(0.0, slopes[slopes.size() - 1 - i]);
    }
    lo.push_back(ek.constant + down);
    hi.push_back(ek.constant + up);
    inputs.push_back(std::move(ek));
  }
  const ReluEncoding enc = encode_relu(model, sm.phi_value, inputs, lo, hi);
  model.add_objective(enc.outputs[0]);

  // Later candidates come from re-solving with a no-good cut on each z
  // already returned.
  NnSubproblemResult result;
  for (int round = 0; round < candidates; ++round) {
    const solver::SolveOutcome out = config.engine().solve(model, config.settings);
    if (round == 0) result.status = out.status;
    if (!out.optimal()) break;
    std::vector<double> zv(p, 0.0);
    solver::AffineExpr cut;
    for (int t = 0; t < p; ++t) {
      if (z[t] < 0) continue;
      zv[t] = std::round(out.primal[z[t]]);
      if (zv[t] > 0.5) {
        cut.constant += 1.0;
        cut.add(z[t], -1.0);
      } else {
        cut.add(z[t], 1.0);
      }
    }
    result.candidates.push_back(u.point(zv));
    result.candidate_values.push_back(view.predict(x, result.candidates.back()));
    if (cut.terms.empty()) break;  // U is a single point
    model.add_constraint(std::move(cut), solver::RowSense::GreaterEqual, 1.0);
  }
  if (!result.candidates.empty()) {
    result.xi = result.candidates.front();
    result.predicted = result.candidate_values.front();
  }
  return result;
}

double verify_candidate(const StochasticProblem& problem, std::span<const double> x, std::span<const double> xi,
                        const SolverConfig& config) {
  require(membership(problem.uncertainty, xi, 1e-9), ErrorKind::Validation, "verify_candidate: xi is not in U");
  Verifier verifier(problem, config);
  return verifier.recourse(x, xi);
}

std::vector<double> initial_scenario(const BudgetedUncertaintySet& u) {
  std::vector<int> hours = u.active_hours();
  std::stable_sort(hours.begin(), hours.end(), [&](int a, int b) { return u.xi_hat()[a] > u.xi_hat()[b]; });
  std::vector<double> z(u.dimension(), 0.0);
  const int take = std::min<int>(u.gamma(), static_cast<int>(hours.size()));
  for (int i = 0; i < take; ++i) z[hours[i]] = 1.0;
  return u.point(z);
}

NnCcgResult nn_ccg(const SurrogateView& view, const NnCcgSettings& settings) {
  require(settings.epsilon > 0.0, ErrorKind::Validation, "nn_ccg: epsilon must be positive");
  require(settings.max_iterations > 0, ErrorKind::Validation, "nn_ccg: iteration cap must be positive");
  const StochasticProblem& pb = view.problem();
  require(settings.candidates > 0, ErrorKind::Validation, "nn_ccg: candidate count must be positive");
  Verifier verifier(pb, settings.solver);
  NnCcgResult result;
  result.active.push_back(initial_scenario(pb.uncertainty));
  double best_objective = solver::kInf;

  while (result.iterations < settings.max_iterations) {
    ++result.iterations;
    NnCcgIteration row;
    row.k = result.iterations;
    row.active = static_cast<int>(result.active.size());

    auto start = std::chrono::steady_clock::now();
    const NnMasterResult master = nn_master(view, result.active, settings.solver);
    row.master_time = seconds_since(start);
    row.master_nodes = master.nodes;
    result.status = master.status;
    if (master.status != solver::SolveStatus::Optimal) break;
    row.master_objective = master.objective;
    result.visited_x.push_back(master.x);

    start = std::chrono::steady_clock::now();
    const NnSubproblemResult sub = nn_subproblem(view, master.x, settings.solver, settings.candidates);
    row.sub_time = seconds_since(start);
    result.status = sub.status;
    if (sub.status != solver::SolveStatus::Optimal) break;

    // With verification the candidate is the exact worst of the surrogate's
    // top picks; without it, the surrogate's own argmax.
    start = std::chrono::steady_clock::now();
    const double revenue = pb.expected_revenue_cost(master.x);
    std::size_t pick = 0;
    double picked_exact = -solver::kInf;
    const std::size_t verified_count = settings.verify ? sub.candidates.size() : 1;
    for (std::size_t c = 0; c < verified_count; ++c) {
      const double v = revenue + verifier.recourse(master.x, sub.candidates[c]);
      if (v > picked_exact) {
        picked_exact = v;
        pick = c;
      }
    }
    const std::vector<double>& xi_star = sub.candidates[pick];
    row.predicted = sub.candidate_values[pick];
    row.verified = picked_exact;
    double best_exact = -solver::kInf;
    for (const auto& xi : result.active) best_exact = std::max(best_exact, revenue + verifier.recourse(master.x, xi));
    row.verify_time = seconds_since(start);

    // The returned point is the visited x with the smallest verified value.
    const double objective = std::max(best_exact, row.verified);
    if (objective < best_objective) {
      best_objective = objective;
      result.x = master.x;
      result.objective = objective;
    }

    const double candidate = settings.verify ? row.verified : row.predicted;
    row.best_active = settings.verify ? best_exact
                                      : *std::max_element(master.predicted.begin(), master.predicted.end());
    result.log.push_back(row);

    const double eps = settings.epsilon * std::max(1.0, std::abs(row.best_active));
    const bool known = std::find(result.active.begin(), result.active.end(), xi_star) != result.active.end();
    if (candidate < row.best_active + eps || known) {
      result.converged = true;
      break;
    }
    result.active.push_back(xi_star);
  }
  return result;
}

void write_nn_ccg_log(const NnCcgResult& result, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "k,active,predicted,verified,best_active,master_objective,master_time,sub_time,verify_time,master_nodes\n";
  for (const NnCcgIteration& r : result.log) {
    out << r.k << ',' << r.active << ',' << r.predicted << ',' << r.verified << ',' << r.best_active << ','
        << r.master_objective << ',' << r.master_time << ',' << r.sub_time << ',' << r.verify_time << ','
        << r.master_nodes << '\n';
  }
  out.precision(precision);
}

}  // namespace deroffer
