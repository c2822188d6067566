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

#include "simplex.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "deroffer/error.hpp"

namespace deroffer::solver::detail {
namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kDegenerateStep = 1e-12;

struct Eta {
  int row = 0;
  double pivot = 1.0;
  std::vector<int> index;
  std::vector<double> value;
};

class PrimalSimplex {
 public:
  PrimalSimplex(const LpData& lp, const SimplexOptions& options)
      : lp_(lp), opt_(options), m_(lp.rows), n_(lp.cols), total_(lp.rows + lp.cols) {}

  LpResult run(const BasisState* warm);

 private:
  void cold_start();
  bool load_warm(const BasisState& warm);
  double nonbasic_value(int var, VarState state) const;
  bool factorize();
  void ftran(Vec& v) const;
  void btran(Vec& v) const;
  void load_column(int var, Vec& out) const;
  double column_dot(int var, const Vec& y) const;
  void recompute_basics();
  double tol(double bound) const { return opt_.feasibility_tol * std::max(1.0, std::abs(bound)); }
  bool below(int var) const { return x_[var] < lp_.lower[var] - tol(lp_.lower[var]); }
  bool above(int var) const { return x_[var] > lp_.upper[var] + tol(lp_.upper[var]); }
  LpResult finish(SolveStatus status, long iterations);

  const LpData& lp_;
  SimplexOptions opt_;
  int m_;
  int n_;
  int total_;
  std::vector<int> head_;
  std::vector<int> pos_;
  std::vector<VarState> state_;
  std::vector<double> x_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

double PrimalSimplex::nonbasic_value(int var, VarState state) const {
  switch (state) {
    case VarState::AtLower: return lp_.lower[var];
    case VarState::AtUpper: return lp_.upper[var];
    default: return 0.0;
  }
}

VarState default_state(double lower, double upper) {
  if (std::isfinite(lower)) return VarState::AtLower;
  if (std::isfinite(upper)) return VarState::AtUpper;
  return VarState::FreeZero;
}

void PrimalSimplex::cold_start() {
  head_.assign(m_, 0);
  pos_.assign(total_, -1);
  state_.assign(total_, VarState::Basic);
  x_.assign(total_, 0.0);
  for (int j = 0; j < n_; ++j) {
    state_[j] = default_state(lp_.lower[j], lp_.upper[j]);
    x_[j] = nonbasic_value(j, state_[j]);
  }
  for (int r = 0; r < m_; ++r) {
    head_[r] = n_ + r;
    pos_[n_ + r] = r;
  }
}

bool PrimalSimplex::load_warm(const BasisState& warm) {
  if (static_cast<int>(warm.head.size()) != m_ || static_cast<int>(warm.state.size()) != total_) return false;
  head_ = warm.head;
  state_ = warm.state;
  pos_.assign(total_, -1);
  x_.assign(total_, 0.0);
  for (int r = 0; r < m_; ++r) {
    const int var = head_[r];
    if (var < 0 || var >= total_ || pos_[var] != -1 || state_[var] != VarState::Basic) return false;
    pos_[var] = r;
  }
  for (int j = 0; j < total_; ++j) {
    if (pos_[j] >= 0) continue;
    if (state_[j] == VarState::Basic) return false;
    // Bounds may have moved since the basis was recorded (branching).
    if ((state_[j] == VarState::AtLower && !std::isfinite(lp_.lower[j])) ||
        (state_[j] == VarState::AtUpper && !std::isfinite(lp_.upper[j])) ||
        (state_[j] == VarState::FreeZero && (std::isfinite(lp_.lower[j]) || std::isfinite(lp_.upper[j])))) {
      state_[j] = default_state(lp_.lower[j], lp_.upper[j]);
    }
    x_[j] = nonbasic_value(j, state_[j]);
  }
  return true;
}

bool PrimalSimplex::factorize() {
  etas_.clear();
  if (m_ == 0) return true;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(m_) * 3);
  for (int r = 0; r < m_; ++r) {
    const int var = head_[r];
    if (var < n_) {
      for (int k = lp_.col_start[var]; k < lp_.col_start[var + 1]; ++k) {
        triplets.emplace_back(lp_.row_index[k], r, lp_.value[k]);
      }
    } else {
      triplets.emplace_back(var - n_, r, -1.0);
    }
  }
  SpMat basis(m_, m_);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  lu_.analyzePattern(basis);
  lu_.factorize(basis);
  return lu_.info() == Eigen::Success;
}

void PrimalSimplex::ftran(Vec& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v);
  for (const Eta& eta : etas_) {
    const double pivot_value = v[eta.row] / eta.pivot;
    if (pivot_value != 0.0) {
      for (std::size_t k = 0; k < eta.index.size(); ++k) v[eta.index[k]] -= eta.value[k] * pivot_value;
    }
    v[eta.row] = pivot_value;
  }
}

void PrimalSimplex::btran(Vec& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->row];
    for (std::size_t k = 0; k < it->index.size(); ++k) acc -= it->value[k] * v[it->index[k]];
    v[it->row] = acc / it->pivot;
  }
  v = lu_.transpose().solve(v);
}

void PrimalSimplex::load_column(int var, Vec& out) const {
  out.setZero(m_);
  if (var < n_) {
    for (int k = lp_.col_start[var]; k < lp_.col_start[var + 1]; ++k) out[lp_.row_index[k]] = lp_.value[k];
  } else {
    out[var - n_] = -1.0;
  }
}

double PrimalSimplex::column_dot(int var, const Vec& y) const {
  if (var >= n_) return -y[var - n_];
  double acc = 0.0;
  for (int k = lp_.col_start[var]; k < lp_.col_start[var + 1]; ++k) acc += lp_.value[k] * y[lp_.row_index[k]];
  return acc;
}

void PrimalSimplex::recompute_basics() {
  if (m_ == 0) return;
  Vec rhs = Vec::Zero(m_);
  for (int j = 0; j < total_; ++j) {
    if (pos_[j] >= 0 || x_[j] == 0.0) continue;
    if (j < n_) {
      for (int k = lp_.col_start[j]; k < lp_.col_start[j + 1]; ++k) rhs[lp_.row_index[k]] -= lp_.value[k] * x_[j];
    } else {
      rhs[j - n_] += x_[j];
    }
  }
  ftran(rhs);
  for (int r = 0; r < m_; ++r) x_[head_[r]] = rhs[r];
}

LpResult PrimalSimplex::finish(SolveStatus status, long iterations) {
  LpResult result;
  result.status = status;
  result.iterations = iterations;
  result.x = x_;
  result.y.assign(m_, 0.0);
  result.d.assign(total_, 0.0);
  if (m_ > 0) {
    Vec cb(m_);
    for (int r = 0; r < m_; ++r) cb[r] = lp_.cost[head_[r]];
    btran(cb);
    for (int r = 0; r < m_; ++r) result.y[r] = cb[r];
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] < 0) result.d[j] = lp_.cost[j] - column_dot(j, cb);
    }
  } else {
    for (int j = 0; j < total_; ++j) result.d[j] = lp_.cost[j];
  }
  double objective = 0.0;
  for (int j = 0; j < total_; ++j) objective += lp_.cost[j] * x_[j];
  result.objective = objective;
  result.basis.head = head_;
  result.basis.state = state_;
  return result;
}

LpResult PrimalSimplex::run(const BasisState* warm) {
  if (warm == nullptr || !load_warm(*warm)) cold_start();
  if (!factorize()) {
    cold_start();
    if (!factorize()) fail(ErrorKind::Internal, "simplex: slack basis factorization failed");
  }
  recompute_basics();

  const long limit = opt_.iteration_limit > 0 ? opt_.iteration_limit
                                              : std::max<long>(20000, 50L * (m_ + n_));
  const long degenerate_limit = 5L * (m_ + n_);
  long degenerate = 0;
  bool bland = false;
  bool fresh = true;  // factorization and basic values are up to date
  Vec y(m_);
  Vec alpha(m_);
  std::vector<double> phase_cost(m_, 0.0);

  for (long iter = 0; iter < limit; ++iter) {
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      if (!factorize()) {
        cold_start();
        if (!factorize()) fail(ErrorKind::Internal, "simplex: refactorization failed");
      }
      recompute_basics();
      fresh = true;
    }

    bool infeasible = false;
    for (int r = 0; r < m_; ++r) {
      const int var = head_[r];
      if (below(var)) {
        phase_cost[r] = -1.0;
        infeasible = true;
      } else if (above(var)) {
        phase_cost[r] = 1.0;
        infeasible = true;
      } else {
        phase_cost[r] = 0.0;
      }
    }
    for (int r = 0; r < m_; ++r) y[r] = infeasible ? phase_cost[r] : lp_.cost[head_[r]];
    btran(y);

    // Pricing.
    int entering = -1;
    int direction = 0;
    double best = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0) continue;
      if (lp_.lower[j] == lp_.upper[j]) continue;
      const double cj = infeasible ? 0.0 : lp_.cost[j];
      const double dj = cj - column_dot(j, y);
      int dir = 0;
      switch (state_[j]) {
        case VarState::AtLower: if (dj < -opt_.optimality_tol) dir = 1; break;
        case VarState::AtUpper: if (dj > opt_.optimality_tol) dir = -1; break;
        case VarState::FreeZero:
          if (dj < -opt_.optimality_tol) dir = 1;
          else if (dj > opt_.optimality_tol) dir = -1;
          break;
        default: break;
      }
      if (dir == 0) continue;
      if (bland) {
        entering = j;
        direction = dir;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        entering = j;
        direction = dir;
      }
    }

    if (entering < 0) {
      if (!fresh) {
        if (!factorize()) fail(ErrorKind::Internal, "simplex: refactorization failed");
        recompute_basics();
        fresh = true;
        continue;
      }
      return finish(infeasible ? SolveStatus::Infeasible : SolveStatus::Optimal, iter);
    }

    load_column(entering, alpha);
    ftran(alpha);

    // Ratio test (two-pass Harris; exact minimum with index ties under Bland).
    auto breakpoint = [&](int r, double rate, bool relaxed, double& target) -> double {
      const int var = head_[r];
      const double xv = x_[var];
      const double lo = lp_.lower[var];
      const double hi = lp_.upper[var];
      const double slack_lo = relaxed ? tol(lo) : 0.0;
      const double slack_hi = relaxed ? tol(hi) : 0.0;
      if (rate < 0.0) {
        if (below(var)) return kInf;
        if (above(var)) {
          target = hi;
          return (xv - hi + slack_hi) / -rate;
        }
        if (!std::isfinite(lo)) return kInf;
        target = lo;
        return std::max(0.0, xv - lo + slack_lo) / -rate;
      }
      if (above(var)) return kInf;
      if (below(var)) {
        target = lo;
        return (lo - xv + slack_lo) / rate;
      }
      if (!std::isfinite(hi)) return kInf;
      target = hi;
      return std::max(0.0, hi - xv + slack_hi) / rate;
    };

    int leave = -1;
    double theta = kInf;
    double leave_target = 0.0;
    if (bland) {
      int leave_var = total_;
      for (int r = 0; r < m_; ++r) {
        if (std::abs(alpha[r]) <= opt_.pivot_tol) continue;
        double target = 0.0;
        const double ratio = breakpoint(r, -direction * alpha[r], false, target);
        if (ratio == kInf) continue;
        if (ratio < theta - kDegenerateStep || (ratio <= theta + kDegenerateStep && head_[r] < leave_var)) {
          theta = std::min(theta, ratio);
          leave = r;
          leave_var = head_[r];
          leave_target = target;
        }
      }
    } else {
      double relaxed_min = kInf;
      for (int r = 0; r < m_; ++r) {
        if (std::abs(alpha[r]) <= opt_.pivot_tol) continue;
        double target = 0.0;
        relaxed_min = std::min(relaxed_min, breakpoint(r, -direction * alpha[r], true, target));
      }
      if (relaxed_min < kInf) {
        double best_pivot = 0.0;
        for (int r = 0; r < m_; ++r) {
          if (std::abs(alpha[r]) <= opt_.pivot_tol) continue;
          double target = 0.0;
          const double ratio = breakpoint(r, -direction * alpha[r], false, target);
          if (ratio <= relaxed_min && std::abs(alpha[r]) > best_pivot) {
            best_pivot = std::abs(alpha[r]);
            leave = r;
            theta = ratio;
            leave_target = target;
          }
        }
      }
    }

    const double span = lp_.upper[entering] - lp_.lower[entering];
    const bool flip = std::isfinite(span) && span <= theta;
    if (leave < 0 && !flip) {
      if (!fresh) {
        if (!factorize()) fail(ErrorKind::Internal, "simplex: refactorization failed");
        recompute_basics();
        fresh = true;
        continue;
      }
      return finish(infeasible ? SolveStatus::IterationLimit : SolveStatus::Unbounded, iter);
    }
    if (flip) theta = span;

    if (theta < kDegenerateStep) {
      if (++degenerate > degenerate_limit) bland = true;
    }

    const double step = direction * theta;
    x_[entering] += step;
    for (int r = 0; r < m_; ++r) {
      if (alpha[r] != 0.0) x_[head_[r]] -= step * alpha[r];
    }

    if (flip) {
      state_[entering] = direction > 0 ? VarState::AtUpper : VarState::AtLower;
      x_[entering] = direction > 0 ? lp_.upper[entering] : lp_.lower[entering];
      fresh = false;
      continue;
    }

    const int leaving = head_[leave];
    x_[leaving] = leave_target;
    state_[leaving] = (leave_target == lp_.lower[leaving]) ? VarState::AtLower : VarState::AtUpper;
    pos_[leaving] = -1;
    head_[leave] = entering;
    pos_[entering] = leave;
    state_[entering] = VarState::Basic;

    Eta eta;
    eta.row = leave;
    eta.pivot = alpha[leave];
    for (int r = 0; r < m_; ++r) {
      if (r != leave && alpha[r] != 0.0) {
        eta.index.push_back(r);
        eta.value.push_back(alpha[r]);
      }
    }
    etas_.push_back(std::move(eta));
    fresh = false;
  }
  return finish(SolveStatus::IterationLimit, limit);
}

}  // namespace

LpData build_lp_data(const LinearModel& model) {
  LpData lp;
  lp.rows = model.num_constraints();
  lp.cols = model.num_variables();
  const int total = lp.rows + lp.cols;
  lp.lower.resize(total);
  lp.upper.resize(total);
  lp.cost.assign(total, 0.0);
  const double sign = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
  for (int j = 0; j < lp.cols; ++j) {
    lp.lower[j] = model.variables()[j].lower;
    lp.upper[j] = model.variables()[j].upper;
    lp.cost[j] = sign * model.objective()[j];
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < lp.rows; ++r) {
    const Constraint& row = model.constraints()[r];
    for (const Term& t : row.terms) triplets.emplace_back(r, t.var, t.coef);
    double lo = -kInf;
    double hi = kInf;
    switch (row.sense) {
      case RowSense::LessEqual: hi = row.rhs; break;
      case RowSense::GreaterEqual: lo = row.rhs; break;
      case RowSense::Equal: lo = hi = row.rhs; break;
    }
    lp.lower[lp.cols + r] = lo;
    lp.upper[lp.cols + r] = hi;
  }
  SpMat a(lp.rows, lp.cols);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  lp.col_start.assign(a.outerIndexPtr(), a.outerIndexPtr() + lp.cols + 1);
  lp.row_index.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
  lp.value.assign(a.valuePtr(), a.valuePtr() + a.nonZeros());
  return lp;
}

LpResult run_primal_simplex(const LpData& lp, const SimplexOptions& options, const BasisState* warm_start) {
  PrimalSimplex simplex(lp, options);
  return simplex.run(warm_start);
}

}  // namespace deroffer::solver::detail
