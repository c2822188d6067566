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

#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "batch.hpp"
#include "deroffer/error.hpp"

namespace deroffer {
namespace {

using detail::Mat;

std::vector<MlpParams*> parts(SurrogateModel& m) { return {&m.phi_x, &m.phi_xi, &m.phi_value}; }
std::vector<const MlpParams*> parts(const SurrogateModel& m) { return {&m.phi_x, &m.phi_xi, &m.phi_value}; }

struct Gradients {
  MlpParams phi_x, phi_xi, phi_value;

  explicit Gradients(const SurrogateModel& m)
      : phi_x(MlpParams::zeros(m.phi_x.widths)),
        phi_xi(MlpParams::zeros(m.phi_xi.widths)),
        phi_value(MlpParams::zeros(m.phi_value.widths)) {}

  std::vector<double> flat() const {
    std::vector<double> out;
    for (const MlpParams* p : {&phi_x, &phi_xi, &phi_value}) {
      for (int l = 0; l < p->layers(); ++l) {
        out.insert(out.end(), p->weights[l].begin(), p->weights[l].end());
        out.insert(out.end(), p->biases[l].begin(), p->biases[l].end());
      }
    }
    return out;
  }
};

// Gradient and prediction passes over records grouped by context, with the
// normalized feature matrices computed once per context.
class Evaluator {
 public:
  Evaluator(const SurrogateModel& model, const LabeledDataset& ds, double contrast_weight)
      : ds_(ds), group_of_(ds.records.size(), 0) {
    for (const FeatureContext& ctx : ds.contexts) features_.push_back(detail::normalized_features(ctx, model.norm));
    // Consecutive records of one context sharing x form a group.
    int id = 0;
    for (std::size_t i = 1; i < ds.records.size(); ++i) {
      const DatasetRecord& a = ds.records[i - 1];
      const DatasetRecord& b = ds.records[i];
      if (a.context != b.context || a.x != b.x) ++id;
      group_of_[i] = id;
    }
    // The contrast term is scaled by the mean within-group label variance
    // of the training split, so lambda = 1 weighs it like the level term.
    if (contrast_weight > 0.0) {
      std::map<int, std::vector<double>> labels;
      for (std::size_t i = 0; i < ds.records.size(); ++i) {
        if (!ds.records[i].validation) labels[group_of_[i]].push_back(model.norm.normalize_label(ds.records[i].label));
      }
      double ss = 0.0, n = 0.0;
      for (const auto& [g, v] : labels) {
        if (v.size() < 2) continue;
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        for (double y : v) ss += (y - mean) * (y - mean);
        n += static_cast<double>(v.size());
      }
      if (n > 0.0 && ss > 1e-12 * n) contrast_ = contrast_weight * n / ss;
    }
  }

  int group_of(std::size_t record) const { return group_of_[record]; }

  // Sum of squared normalized residuals over `records` (one context), plus
  // the weighted squared residuals centered within each x group. With
  // `grad`, adds d(sum / scale_count)/d(theta).
  double batch(const SurrogateModel& model, int context, std::span<const std::size_t> records, double scale_count,
               Gradients* grad, std::vector<double>* predictions = nullptr) const {
    const detail::ContextMatrices& cm = features_.at(context);
    const Eigen::Index rows = static_cast<Eigen::Index>(records.size());
    const int e = model.embedding_width();
    detail::MlpTrace tx, txi, th;
    const Mat gx = detail::mlp_forward(model.phi_x, cm.x, grad ? &tx : nullptr);
    const Mat gxi = detail::mlp_forward(model.phi_xi, cm.xi, grad ? &txi : nullptr);

    Mat vx(rows, cm.x.rows());
    Mat vxi(rows, cm.xi.rows());
    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const DatasetRecord& rec = ds_.records[records[r]];
      require(rec.context == context, ErrorKind::Internal, "surrogate: batch mixes contexts");
      require(static_cast<Eigen::Index>(rec.x.size()) == cm.x.rows() &&
                  static_cast<Eigen::Index>(rec.xi.size()) == cm.xi.rows(),
              ErrorKind::Dimension, "surrogate: record does not match its context");
      for (Eigen::Index i = 0; i < vx.cols(); ++i) vx(r, i) = rec.x[i] / model.norm.x_value_scale;
      for (Eigen::Index i = 0; i < vxi.cols(); ++i) vxi(r, i) = rec.xi[i] / model.norm.xi_value_scale;
      target(r) = model.norm.normalize_label(rec.label);
    }
    Mat u(rows, 2 * e);
    u.leftCols(e) = vx * gx;
    u.rightCols(e) = vxi * gxi;
    const Mat out = detail::mlp_forward(model.phi_value, u, grad ? &th : nullptr);
    const Eigen::VectorXd residual = out.col(0) - target;
    Eigen::VectorXd centered = Eigen::VectorXd::Zero(rows);
    if (contrast_ > 0.0) {
      std::map<int, std::pair<double, int>> mean;
      for (Eigen::Index r = 0; r < rows; ++r) {
        auto& [sum, n] = mean[group_of_[records[r]]];
        sum += residual(r);
        ++n;
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& [sum, n] = mean[group_of_[records[r]]];
        centered(r) = residual(r) - sum / n;
      }
    }
    if (predictions) {
      for (Eigen::Index r = 0; r < rows; ++r) predictions->push_back(model.norm.denormalize_label(out(r, 0)));
    }
    if (grad) {
      // Centered residuals sum to zero per group, so their own gradient is
      // just 2 c_i.
      const Mat d_out = (residual + contrast_ * centered) * (2.0 / scale_count);
      Mat d_u;
      detail::mlp_backward(model.phi_value, th, d_out, grad->phi_value, &d_u);
      detail::mlp_backward(model.phi_x, tx, vx.transpose() * d_u.leftCols(e), grad->phi_x);
      detail::mlp_backward(model.phi_xi, txi, vxi.transpose() * d_u.rightCols(e), grad->phi_xi);
    }
    return residual.squaredNorm() + contrast_ * centered.squaredNorm();
  }

  // Groups `records` by context, preserving order inside each group.
  std::map<int, std::vector<std::size_t>> group(std::span<const std::size_t> records) const {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t r : records) groups[ds_.records.at(r).context].push_back(r);
    return groups;
  }

 private:
  const LabeledDataset& ds_;
  std::vector<detail::ContextMatrices> features_;
  std::vector<int> group_of_;
  double contrast_ = 0.0;
};

std::vector<std::size_t> split_indices(const LabeledDataset& ds, bool validation) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.records[i].validation == validation) out.push_back(i);
  }
  return out;
}

struct SplitError {
  double mae = 0.0;
  double relative = 0.0;
};

SplitError split_error(const SurrogateModel& model, const Evaluator& eval, const LabeledDataset& ds,
                       std::span<const std::size_t> records) {
  double abs_err = 0.0, abs_label = 0.0;
  for (const auto& [ctx, group] : eval.group(records)) {
    std::vector<double> pred;
    eval.batch(model, ctx, group, 1.0, nullptr, &pred);
    for (std::size_t k = 0; k < group.size(); ++k) {
      abs_err += std::abs(pred[k] - ds.records[group[k]].label);
      abs_label += std::abs(ds.records[group[k]].label);
    }
  }
  const double count = static_cast<double>(records.size());
  SplitError out;
  out.mae = count > 0 ? abs_err / count : 0.0;
  out.relative = abs_label > 0.0 ? abs_err / abs_label : (abs_err > 0.0 ? solver::kInf : 0.0);
  return out;
}

}  // namespace

std::vector<double> flatten_parameters(const SurrogateModel& model) {
  std::vector<double> out;
  out.reserve(model.parameter_count());
  for (const MlpParams* p : parts(model)) {
    for (int l = 0; l < p->layers(); ++l) {
      out.insert(out.end(), p->weights[l].begin(), p->weights[l].end());
      out.insert(out.end(), p->biases[l].begin(), p->biases[l].end());
    }
  }
  return out;
}

void assign_parameters(SurrogateModel& model, std::span<const double> params) {
  require(params.size() == model.parameter_count(), ErrorKind::Dimension, "assign_parameters: wrong length");
  std::size_t at = 0;
  for (MlpParams* p : parts(model)) {
    for (int l = 0; l < p->layers(); ++l) {
      for (double& w : p->weights[l]) w = params[at++];
      for (double& b : p->biases[l]) b = params[at++];
    }
  }
}

double loss_and_gradient(const SurrogateModel& model, const LabeledDataset& ds, std::span<const std::size_t> records,
                         std::vector<double>* gradient, double contrast_weight) {
  require(!records.empty(), ErrorKind::Validation, "loss_and_gradient: no records");
  require(contrast_weight >= 0.0, ErrorKind::Validation, "loss_and_gradient: negative contrast weight");
  model.validate();
  const Evaluator eval(model, ds, contrast_weight);
  Gradients grad(model);
  const double count = static_cast<double>(records.size());
  double sum = 0.0;
  for (const auto& [ctx, group] : eval.group(records)) {
    sum += eval.batch(model, ctx, group, count, gradient ? &grad : nullptr);
  }
  if (gradient) *gradient = grad.flat();
  return sum / count;
}

double relative_error(const SurrogateModel& model, const LabeledDataset& ds, bool validation) {
  const Evaluator eval(model, ds, 0.0);
  const auto records = split_indices(ds, validation);
  require(!records.empty(), ErrorKind::Validation, "relative_error: split is empty");
  return split_error(model, eval, ds, records).relative;
}

TrainResult train(const LabeledDataset& ds, const TrainConfig& config) {
  require(config.epochs > 0 && config.validate_every > 0 && config.batch_size > 0, ErrorKind::Validation,
          "train: epochs, validate_every and batch_size must be positive");
  require(config.learning_rate > 0.0 && config.momentum >= 0.0 && config.momentum < 1.0, ErrorKind::Validation,
          "train: learning rate must be positive and momentum in [0, 1)");
  require(config.contrast_weight >= 0.0, ErrorKind::Validation, "train: negative contrast weight");
  const auto train_idx = split_indices(ds, false);
  const auto valid_idx = split_indices(ds, true);
  require(!train_idx.empty() && !valid_idx.empty(), ErrorKind::Validation,
          "train: both the training and the validation split must be nonempty");
  const auto start = std::chrono::steady_clock::now();

  std::mt19937_64 rng(config.seed);
  SurrogateModel model = initial_model(config.shape, fit_normalization(ds), rng);
  const Evaluator eval(model, ds, config.contrast_weight);
  // Whole x groups per context, so the contrast term sees complete groups.
  std::map<int, std::vector<std::vector<std::size_t>>> by_context;
  for (const auto& [ctx, recs] : eval.group(train_idx)) {
    auto& groups = by_context[ctx];
    for (std::size_t r : recs) {
      if (groups.empty() || eval.group_of(groups.back().front()) != eval.group_of(r)) groups.emplace_back();
      groups.back().push_back(r);
    }
  }

  std::vector<double> theta = flatten_parameters(model);
  std::vector<double> velocity(theta.size(), 0.0);
  TrainResult result;
  double best_mae = solver::kInf;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Batches never straddle contexts, so each step runs the token encoders
    // once per batch.
    std::vector<std::pair<int, std::vector<std::size_t>>> batches;
    for (auto& [ctx, groups] : by_context) {
      std::shuffle(groups.begin(), groups.end(), rng);
      std::vector<std::size_t> current;
      for (const auto& g : groups) {
        current.insert(current.end(), g.begin(), g.end());
        if (current.size() >= static_cast<std::size_t>(config.batch_size)) {
          batches.push_back({ctx, std::move(current)});
          current.clear();
        }
      }
      if (!current.empty()) batches.push_back({ctx, std::move(current)});
    }
    std::shuffle(batches.begin(), batches.end(), rng);

    double epoch_sse = 0.0;
    for (const auto& [ctx, recs] : batches) {
      Gradients grad(model);
      const double sse = eval.batch(model, ctx, recs, static_cast<double>(recs.size()), &grad);
      if (!std::isfinite(sse)) {
        std::ostringstream msg;
        msg << "train: loss is not finite at epoch " << epoch << " (learning rate " << config.learning_rate
            << "); lower the learning rate";
        fail(ErrorKind::Divergence, msg.str());
      }
      epoch_sse += sse;
      const std::vector<double> g = grad.flat();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] - config.learning_rate * g[i];
        theta[i] += velocity[i];
      }
      assign_parameters(model, theta);
    }

    if (epoch % config.validate_every == 0 || epoch == config.epochs) {
      const SplitError err = split_error(model, eval, ds, valid_idx);
      if (!std::isfinite(err.mae)) fail(ErrorKind::Divergence, "train: validation error is not finite");
      result.curve.push_back({epoch, epoch_sse / static_cast<double>(train_idx.size()), err.mae, err.relative});
      if (err.mae < best_mae) {
        best_mae = err.mae;
        result.model = model;
        result.best_epoch = epoch;
        result.validation_relative_error = err.relative;
      }
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace deroffer
