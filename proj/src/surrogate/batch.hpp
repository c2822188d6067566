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

// Row-batched MLP passes shared by training, evaluation and the gradient
// API. Rows are samples.

#include <Eigen/Dense>
#include <vector>

#include "deroffer/surrogate.hpp"

namespace deroffer::detail {

using Mat = Eigen::MatrixXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// acts[0] is the input, acts[l + 1] the output of layer l (post-ReLU for
/// hidden layers).
struct MlpTrace {
  std::vector<Mat> acts;
};

Mat mlp_forward(const MlpParams& mlp, const Mat& input, MlpTrace* trace = nullptr);

/// Accumulates parameter gradients into `grad` (same shape as `mlp`) and
/// optionally returns the gradient with respect to the input.
void mlp_backward(const MlpParams& mlp, const MlpTrace& trace, const Mat& grad_out, MlpParams& grad,
                  Mat* grad_input = nullptr);

/// Normalized feature matrices of one context.
struct ContextMatrices {
  Mat x;
  Mat xi;
};

ContextMatrices normalized_features(const FeatureContext& context, const Normalization& norm);

}  // namespace deroffer::detail
