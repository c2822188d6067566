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
#include <cmath>
#include <map>
#include <sstream>

#include "deroffer/error.hpp"
#include "deroffer/nn_milp.hpp"

namespace deroffer {
namespace {

// Merges repeated variables so long embedding sums stay one term per var.
solver::AffineExpr merged(const solver::AffineExpr& e) {
  std::map<int, double> acc;
  for (const solver::Term& t : e.terms) acc[t.var] += t.coef;
  solver::AffineExpr out = solver::AffineExpr::constant_of(e.constant);
  for (const auto& [var, coef] : acc) out.add(var, coef);
  return out;
}

}  // namespace

int ReluEncoding::binary_count() const {
  return static_cast<int>(std::count_if(neurons.begin(), neurons.end(), [](const ReluNeuron& n) { return n.indicator >= 0; }));
}

ReluEncoding encode_relu(solver::LinearModel& model, const MlpParams& mlp, std::span<const solver::AffineExpr> inputs,
                         std::span<const double> lower, std::span<const double> upper) {
  mlp.validate();
  require(static_cast<int>(inputs.size()) == mlp.inputs() && lower.size() == inputs.size() &&
              upper.size() == inputs.size(),
          ErrorKind::Dimension, "encode_relu: inputs do not match the network");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      std::ostringstream msg;
      msg << "encode_relu: input " << i << " needs a finite box, got [" << lower[i] << ", " << upper[i] << "]";
      fail(ErrorKind::Validation, msg.str());
    }
  }

  std::vector<solver::AffineExpr> prev(inputs.begin(), inputs.end());
  std::vector<double> lo(lower.begin(), lower.end());
  std::vector<double> hi(upper.begin(), upper.end());
  ReluEncoding enc;
  for (int l = 0; l < mlp.layers(); ++l) {
    const int rows = mlp.widths[l + 1];
    const int cols = mlp.widths[l];
    const bool last = l + 1 == mlp.layers();
    std::vector<solver::AffineExpr> next;
    std::vector<double> next_lo, next_hi;
    for (int r = 0; r < rows; ++r) {
      const double* w = mlp.weights[l].data() + static_cast<std::size_t>(r) * cols;
      solver::AffineExpr a = solver::AffineExpr::constant_of(mlp.biases[l][r]);
      double a_lo = mlp.biases[l][r];
      double a_hi = mlp.biases[l][r];
      for (int c = 0; c < cols; ++c) {
        if (w[c] == 0.0) continue;
        a.add(prev[c], w[c]);
        a_lo += w[c] > 0.0 ? w[c] * lo[c] : w[c] * hi[c];
        a_hi += w[c] > 0.0 ? w[c] * hi[c] : w[c] * lo[c];
      }
      a = merged(a);
      if (last) {
        next.push_back(std::move(a));
        next_lo.push_back(a_lo);
        next_hi.push_back(a_hi);
        continue;
      }
      ReluNeuron neuron{l, r, a_lo, a_hi, -1, -1};
      if (a_hi <= 0.0) {
        next.push_back(solver::AffineExpr::constant_of(0.0));
        next_lo.push_back(0.0);
        next_hi.push_back(0.0);
      } else if (a_lo >= 0.0) {
        next.push_back(std::move(a));
        next_lo.push_back(a_lo);
        next_hi.push_back(a_hi);
      } else {
        const int h = model.add_variable(0.0, a_hi);
        const int d = model.add_binary();
        neuron.post = h;
        neuron.indicator = d;
        solver::AffineExpr h_minus_a = solver::AffineExpr::variable(h);
        h_minus_a.add(a, -1.0);
        model.add_constraint(h_minus_a, solver::RowSense::GreaterEqual, 0.0);
        // h <= a - L (1 - d)
        solver::AffineExpr upper_active = h_minus_a;
        upper_active.add(d, -a_lo);
        model.add_constraint(upper_active, solver::RowSense::LessEqual, -a_lo);
        // h <= U d
        model.add_constraint({{h, 1.0}, {d, -a_hi}}, solver::RowSense::LessEqual, 0.0);
        next.push_back(solver::AffineExpr::variable(h));
        next_lo.push_back(0.0);
        next_hi.push_back(a_hi);
      }
      enc.neurons.push_back(neuron);
    }
    prev = std::move(next);
    lo = std::move(next_lo);
    hi = std::move(next_hi);
  }
  enc.outputs = std::move(prev);
  enc.output_lower = std::move(lo);
  enc.output_upper = std::move(hi);
  return enc;
}

ArgmaxEncoding encode_argmax(solver::LinearModel& model, std::span<const solver::AffineExpr> values,
                             std::span<const double> lower, std::span<const double> upper) {
  require(!values.empty(), ErrorKind::Validation, "encode_argmax: no candidates");
  require(lower.size() == values.size() && upper.size() == values.size(), ErrorKind::Dimension,
          "encode_argmax: bounds do not match the candidates");
  double top_hi = -solver::kInf;
  double top_lo = -solver::kInf;
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] <= upper[i], ErrorKind::Validation,
            "encode_argmax: every candidate needs finite bounds");
    top_hi = std::max(top_hi, upper[i]);
    top_lo = std::max(top_lo, lower[i]);
  }
  ArgmaxEncoding enc;
  enc.selected = model.add_variable(top_lo, top_hi);
  std::vector<solver::Term> one;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int beta = model.add_binary();
    enc.selectors.push_back(beta);
    one.push_back({beta, 1.0});
    solver::AffineExpr gap = solver::AffineExpr::variable(enc.selected);
    gap.add(values[i], -1.0);
    model.add_constraint(gap, solver::RowSense::GreaterEqual, 0.0);
    // s - v_i + M_i beta_i <= M_i
    const double big_m = top_hi - lower[i];
    solver::AffineExpr tight = gap;
    tight.add(beta, big_m);
    model.add_constraint(tight, solver::RowSense::LessEqual, big_m);
  }
  model.add_constraint(std::move(one), solver::RowSense::Equal, 1.0);
  return enc;
}

}  // namespace deroffer
