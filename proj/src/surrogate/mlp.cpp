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
#include <sstream>

#include "batch.hpp"
#include "deroffer/error.hpp"

namespace deroffer {

std::size_t MlpParams::parameter_count() const {
  std::size_t total = 0;
  for (int l = 0; l < layers(); ++l) total += weights[l].size() + biases[l].size();
  return total;
}

void MlpParams::validate() const {
  require(widths.size() >= 2, ErrorKind::Validation, "mlp: needs at least an input and an output width");
  for (int w : widths) require(w > 0, ErrorKind::Validation, "mlp: widths must be positive");
  require(weights.size() + 1 == widths.size() && biases.size() == weights.size(), ErrorKind::Validation,
          "mlp: layer count does not match widths");
  for (int l = 0; l < layers(); ++l) {
    if (weights[l].size() != static_cast<std::size_t>(widths[l + 1]) * widths[l] ||
        biases[l].size() != static_cast<std::size_t>(widths[l + 1])) {
      std::ostringstream msg;
      msg << "mlp: layer " << l << " does not chain " << widths[l] << " -> " << widths[l + 1];
      fail(ErrorKind::Validation, msg.str());
    }
    for (double v : weights[l]) require(std::isfinite(v), ErrorKind::Validation, "mlp: non-finite weight");
    for (double v : biases[l]) require(std::isfinite(v), ErrorKind::Validation, "mlp: non-finite bias");
  }
}

std::vector<double> MlpParams::forward(std::span<const double> input) const {
  require(static_cast<int>(input.size()) == inputs(), ErrorKind::Dimension, "mlp: input has wrong length");
  std::vector<double> h(input.begin(), input.end());
  for (int l = 0; l < layers(); ++l) {
    const int rows = widths[l + 1];
    const int cols = widths[l];
    std::vector<double> next(rows);
    for (int r = 0; r < rows; ++r) {
      double acc = biases[l][r];
      const double* w = weights[l].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) acc += w[c] * h[c];
      next[r] = (l + 1 < layers()) ? std::max(acc, 0.0) : acc;
    }
    h = std::move(next);
  }
  return h;
}

MlpParams MlpParams::zeros(std::vector<int> widths) {
  MlpParams mlp;
  mlp.widths = std::move(widths);
  for (std::size_t l = 0; l + 1 < mlp.widths.size(); ++l) {
    mlp.weights.emplace_back(static_cast<std::size_t>(mlp.widths[l + 1]) * mlp.widths[l], 0.0);
    mlp.biases.emplace_back(mlp.widths[l + 1], 0.0);
  }
  mlp.validate();
  return mlp;
}

MlpParams MlpParams::random(std::vector<int> widths, std::mt19937_64& rng) {
  MlpParams mlp = zeros(std::move(widths));
  for (int l = 0; l < mlp.layers(); ++l) {
    const double limit = std::sqrt(6.0 / mlp.widths[l]);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : mlp.weights[l]) w = dist(rng);
  }
  return mlp;
}

namespace detail {

Mat mlp_forward(const MlpParams& mlp, const Mat& input, MlpTrace* trace) {
  require(input.cols() == mlp.inputs(), ErrorKind::Dimension, "mlp: input has wrong width");
  if (trace) {
    trace->acts.clear();
    trace->acts.push_back(input);
  }
  Mat h = input;
  for (int l = 0; l < mlp.layers(); ++l) {
    Eigen::Map<const RowMajorMat> w(mlp.weights[l].data(), mlp.widths[l + 1], mlp.widths[l]);
    Eigen::Map<const Eigen::RowVectorXd> b(mlp.biases[l].data(), mlp.widths[l + 1]);
    Mat z = h * w.transpose();
    z.rowwise() += b;
    if (l + 1 < mlp.layers()) z = z.cwiseMax(0.0);
    h = std::move(z);
    if (trace) trace->acts.push_back(h);
  }
  return h;
}

void mlp_backward(const MlpParams& mlp, const MlpTrace& trace, const Mat& grad_out, MlpParams& grad,
                  Mat* grad_input) {
  Mat delta = grad_out;
  for (int l = mlp.layers() - 1; l >= 0; --l) {
    if (l + 1 < mlp.layers()) {
      // ReLU passes gradient only where the unit was strictly active.
      delta = delta.cwiseProduct((trace.acts[l + 1].array() > 0.0).cast<double>().matrix());
    }
    Eigen::Map<RowMajorMat> gw(grad.weights[l].data(), mlp.widths[l + 1], mlp.widths[l]);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.biases[l].data(), mlp.widths[l + 1]);
    gw.noalias() += delta.transpose() * trace.acts[l];
    gb += delta.colwise().sum();
    if (l > 0 || grad_input) {
      Eigen::Map<const RowMajorMat> w(mlp.weights[l].data(), mlp.widths[l + 1], mlp.widths[l]);
      delta = delta * w;
    }
  }
  if (grad_input) *grad_input = std::move(delta);
}

}  // namespace detail
}  // namespace deroffer
