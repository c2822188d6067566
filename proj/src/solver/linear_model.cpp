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
#include <ostream>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/solver.hpp"

namespace deroffer::solver {

const char* to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

AffineExpr& AffineExpr::add(const AffineExpr& other, double scale) {
  if (scale == 0.0) return *this;
  for (const Term& t : other.terms) add(t.var, t.coef * scale);
  constant += other.constant * scale;
  return *this;
}

double AffineExpr::evaluate(std::span<const double> values) const {
  double acc = constant;
  for (const Term& t : terms) acc += t.coef * values[static_cast<std::size_t>(t.var)];
  return acc;
}

int LinearModel::add_variable(double lower, double upper, VarKind kind, std::string name) {
  variables_.push_back(Variable{lower, upper, kind, std::move(name)});
  objective_.push_back(0.0);
  return num_variables() - 1;
}

int LinearModel::add_constraint(std::vector<Term> terms, RowSense sense, double rhs, std::string name) {
  constraints_.push_back(Constraint{std::move(terms), sense, rhs, std::move(name)});
  return num_constraints() - 1;
}

int LinearModel::add_constraint(const AffineExpr& lhs, RowSense sense, double rhs, std::string name) {
  return add_constraint(lhs.terms, sense, rhs - lhs.constant, std::move(name));
}

void LinearModel::set_objective_coef(int var, double coef) {
  objective_.at(static_cast<std::size_t>(var)) = coef;
}

void LinearModel::add_objective(const AffineExpr& expr, double scale) {
  for (const Term& t : expr.terms) objective_.at(static_cast<std::size_t>(t.var)) += scale * t.coef;
  objective_constant_ += scale * expr.constant;
}

void LinearModel::set_bounds(int var, double lower, double upper) {
  Variable& v = variables_.at(static_cast<std::size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

bool LinearModel::has_binaries() const {
  for (const Variable& v : variables_) {
    if (v.kind == VarKind::Binary) return true;
  }
  return false;
}

void LinearModel::validate() const {
  const int n = num_variables();
  for (int j = 0; j < n; ++j) {
    const Variable& v = variables_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      std::ostringstream msg;
      msg << "variable " << j << " has inconsistent bounds [" << v.lower << ", " << v.upper << "]";
      fail(ErrorKind::Validation, msg.str());
    }
    if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0)) {
      fail(ErrorKind::Validation, "binary variable " + std::to_string(j) + " has bounds outside [0,1]");
    }
    if (!std::isfinite(objective_[j])) {
      fail(ErrorKind::Validation, "objective coefficient of variable " + std::to_string(j) + " is not finite");
    }
  }
  for (int r = 0; r < num_constraints(); ++r) {
    const Constraint& c = constraints_[r];
    if (!std::isfinite(c.rhs)) fail(ErrorKind::Validation, "constraint " + std::to_string(r) + " has non-finite rhs");
    for (const Term& t : c.terms) {
      if (t.var < 0 || t.var >= n) {
        fail(ErrorKind::Validation, "constraint " + std::to_string(r) + " references variable " +
                                        std::to_string(t.var) + " out of range");
      }
      if (!std::isfinite(t.coef)) {
        fail(ErrorKind::Validation, "constraint " + std::to_string(r) + " has a non-finite coefficient");
      }
    }
  }
}

double primal_residual(const LinearModel& model, std::span<const double> values) {
  double worst = 0.0;
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    worst = std::max({worst, v.lower - values[j], values[j] - v.upper});
  }
  for (const Constraint& c : model.constraints()) {
    double activity = 0.0;
    for (const Term& t : c.terms) activity += t.coef * values[static_cast<std::size_t>(t.var)];
    switch (c.sense) {
      case RowSense::LessEqual: worst = std::max(worst, activity - c.rhs); break;
      case RowSense::GreaterEqual: worst = std::max(worst, c.rhs - activity); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(activity - c.rhs)); break;
    }
  }
  return worst;
}

namespace {

void write_number(std::ostream& out, double value) {
  if (value == kInf) {
    out << "+inf";
  } else if (value == -kInf) {
    out << "-inf";
  } else {
    out << value;
  }
}

}  // namespace

void write_lp_format(const LinearModel& model, std::ostream& out) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out.precision(17);
  out << (model.sense() == ObjSense::Minimize ? "Minimize\n" : "Maximize\n") << " obj:";
  bool any = false;
  for (int j = 0; j < model.num_variables(); ++j) {
    const double c = model.objective()[j];
    if (c == 0.0) continue;
    out << (c < 0 ? " - " : " + ") << std::abs(c) << " x" << j;
    any = true;
  }
  if (model.objective_constant() != 0.0) {
    out << (model.objective_constant() < 0 ? " - " : " + ") << std::abs(model.objective_constant());
    any = true;
  }
  if (!any) out << " 0 x0";
  out << "\nSubject To\n";
  for (int r = 0; r < model.num_constraints(); ++r) {
    const Constraint& c = model.constraints()[r];
    out << " c" << r << ":";
    if (c.terms.empty()) out << " 0 x0";
    for (const Term& t : c.terms) out << (t.coef < 0 ? " - " : " + ") << std::abs(t.coef) << " x" << t.var;
    switch (c.sense) {
      case RowSense::LessEqual: out << " <= "; break;
      case RowSense::GreaterEqual: out << " >= "; break;
      case RowSense::Equal: out << " = "; break;
    }
    out << c.rhs << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    if (v.lower == -kInf && v.upper == kInf) {
      out << " x" << j << " free\n";
      continue;
    }
    out << " ";
    write_number(out, v.lower);
    out << " <= x" << j << " <= ";
    write_number(out, v.upper);
    out << "\n";
  }
  bool header = false;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.variables()[j].kind != VarKind::Binary) continue;
    if (!header) out << "Binaries\n";
    header = true;
    out << " x" << j << "\n";
  }
  out << "End\n";
  out.flags(flags);
  out.precision(precision);
}

}  // namespace deroffer::solver
