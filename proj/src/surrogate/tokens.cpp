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
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "batch.hpp"
#include "deroffer/error.hpp"

namespace deroffer {
namespace {

constexpr int kFamilyCount = static_cast<int>(RowFamily::Balance) + 1;
constexpr RowFamily kFamilies[kFamilyCount] = {
    RowFamily::Nonnegativity, RowFamily::OfferCapacity, RowFamily::PvAvailability,
    RowFamily::BatteryPower,  RowFamily::BatteryEnergy, RowFamily::StateOfCharge,
    RowFamily::LineFlow,      RowFamily::Voltage,       RowFamily::Balance,
};

void push_hour(std::vector<double>& row, int hour) {
  const double angle = 2.0 * std::numbers::pi * hour / 24.0;
  row.push_back(std::sin(angle));
  row.push_back(std::cos(angle));
}

// Probability-weighted shortfall price per hour.
std::vector<double> expected_shortfall_price(const StochasticProblem& pb, int horizon) {
  std::vector<double> price(horizon, 0.0);
  for (int w = 0; w < pb.scenario_count(); ++w) {
    const CompactProblem& cp = pb.compact[w];
    for (int j = 0; j < cp.m; ++j) {
      if (cp.y_kind[j] == RecourseKind::Shortfall) price[cp.y_hour[j]] += pb.weights[w] * cp.b[j];
    }
  }
  return price;
}

// Per column and family: sum and max of the coefficients (0 when absent).
struct ColumnAggregates {
  std::vector<std::array<double, kFamilyCount>> sum;
  std::vector<std::array<double, kFamilyCount>> max;

  explicit ColumnAggregates(int cols) : sum(cols), max(cols) {
    for (int j = 0; j < cols; ++j) {
      sum[j].fill(0.0);
      max[j].fill(0.0);
    }
  }

  void add(const SparseMatrix& m, const std::vector<RowFamily>& family, double weight) {
    std::vector<std::array<double, kFamilyCount>> local_max(sum.size());
    std::vector<std::array<bool, kFamilyCount>> local_seen(sum.size());
    for (auto& a : local_seen) a.fill(false);
    for (int r = 0; r < m.rows(); ++r) {
      const int f = static_cast<int>(family[r]);
      for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
        const int j = static_cast<int>(it.col());
        sum[j][f] += weight * it.value();
        if (!local_seen[j][f] || it.value() > local_max[j][f]) local_max[j][f] = it.value();
        local_seen[j][f] = true;
      }
    }
    for (std::size_t j = 0; j < sum.size(); ++j) {
      for (int f = 0; f < kFamilyCount; ++f) {
        if (local_seen[j][f]) max[j][f] += weight * local_max[j][f];
      }
    }
  }

  void append(std::vector<double>& row, int j) const {
    for (int f = 0; f < kFamilyCount; ++f) {
      row.push_back(sum[j][f]);
      row.push_back(max[j][f]);
    }
  }
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void check_features(const SurrogateModel& model, TokenKind kind, std::size_t width) {
  const int expected = kind == TokenKind::X ? model.phi_x.inputs() : model.phi_xi.inputs();
  require(static_cast<int>(width) == expected, ErrorKind::Dimension, "surrogate: token schema mismatch");
}

}  // namespace

std::vector<std::string> token_feature_names(TokenKind kind) {
  std::vector<std::string> names;
  if (kind == TokenKind::X) {
    names = {"expected_cost", "expected_shortfall_price"};
  } else {
    names = {"xi_bar", "xi_hat", "expected_shortfall_price"};
  }
  const std::string block = kind == TokenKind::X ? "AE" : "H";
  for (RowFamily f : kFamilies) {
    names.push_back(block + "." + to_string(f) + ".sum");
    names.push_back(block + "." + to_string(f) + ".max");
  }
  names.push_back("hour_sin");
  names.push_back("hour_cos");
  return names;
}

std::string token_schema_hash() {
  std::string text;
  for (TokenKind kind : {TokenKind::X, TokenKind::Xi}) {
    for (const std::string& name : token_feature_names(kind)) text += name + ";";
    text += "|";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

FeatureContext token_features(const StochasticProblem& pb) {
  require(pb.scenario_count() > 0, ErrorKind::Validation, "token_features: no scenarios");
  const CompactProblem& c0 = pb.compact.front();
  const int horizon = c0.p;
  const std::vector<double> shortfall = expected_shortfall_price(pb, horizon);

  ColumnAggregates x_agg(c0.n);
  x_agg.add(c0.A, c0.a_family, 1.0);
  for (int w = 0; w < pb.scenario_count(); ++w) x_agg.add(pb.compact[w].E, pb.compact[w].y_family, pb.weights[w]);
  ColumnAggregates xi_agg(c0.p);
  xi_agg.add(c0.H, c0.y_family, 1.0);

  FeatureContext ctx;
  for (int i = 0; i < c0.n; ++i) {
    std::vector<double> row;
    row.reserve(kXFeatureCount);
    double cost = 0.0;
    for (int w = 0; w < pb.scenario_count(); ++w) cost += pb.weights[w] * pb.compact[w].c[i];
    row.push_back(cost);
    row.push_back(shortfall[c0.x_hour[i]]);
    x_agg.append(row, i);
    push_hour(row, c0.x_hour[i]);
    ctx.x.push_back(std::move(row));
  }
  const BudgetedUncertaintySet& u = pb.uncertainty;
  for (int t = 0; t < c0.p; ++t) {
    std::vector<double> row;
    row.reserve(kXiFeatureCount);
    row.push_back(u.xi_bar()[t]);
    row.push_back(u.xi_hat()[t]);
    row.push_back(shortfall[t]);
    xi_agg.append(row, t);
    push_hour(row, t);
    ctx.xi.push_back(std::move(row));
  }
  return ctx;
}

std::vector<Token> tokenize(const FeatureContext& context, TokenKind kind, std::span<const double> values) {
  const auto& rows = kind == TokenKind::X ? context.x : context.xi;
  require(values.size() == rows.size(), ErrorKind::Dimension, "tokenize: value count does not match the schema");
  std::vector<Token> tokens;
  tokens.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) tokens.push_back({values[i], rows[i]});
  return tokens;
}

std::vector<Token> tokenize_x(const StochasticProblem& problem, std::span<const double> x) {
  return tokenize(token_features(problem), TokenKind::X, x);
}

std::vector<Token> tokenize_xi(const StochasticProblem& problem, std::span<const double> xi) {
  return tokenize(token_features(problem), TokenKind::Xi, xi);
}

void Normalization::validate() const {
  require(x_mean.size() == x_scale.size() && xi_mean.size() == xi_scale.size(), ErrorKind::Validation,
          "normalization: mean and scale lengths differ");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
  };
  require(finite(x_mean) && finite(x_scale) && finite(xi_mean) && finite(xi_scale), ErrorKind::Validation,
          "normalization: non-finite feature statistics");
  for (double s : x_scale) require(s > 0.0, ErrorKind::Validation, "normalization: scales must be positive");
  for (double s : xi_scale) require(s > 0.0, ErrorKind::Validation, "normalization: scales must be positive");
  require(std::isfinite(label_mean) && std::isfinite(label_scale) && label_scale > 0.0 && x_value_scale > 0.0 &&
              xi_value_scale > 0.0 && std::isfinite(x_value_scale) && std::isfinite(xi_value_scale),
          ErrorKind::Validation, "normalization: invalid scalar statistics");
}

void SurrogateModel::validate() const {
  phi_x.validate();
  phi_xi.validate();
  phi_value.validate();
  norm.validate();
  require(phi_x.outputs() == phi_xi.outputs(), ErrorKind::Validation, "surrogate: embedding widths differ");
  require(phi_value.inputs() == 2 * phi_x.outputs(), ErrorKind::Validation,
          "surrogate: value head input must be twice the embedding width");
  require(phi_value.outputs() == 1, ErrorKind::Validation, "surrogate: value head must have one output");
  require(static_cast<int>(norm.x_mean.size()) == phi_x.inputs() &&
              static_cast<int>(norm.xi_mean.size()) == phi_xi.inputs(),
          ErrorKind::Validation, "surrogate: normalization does not match the encoders");
}

std::size_t SurrogateModel::parameter_count() const {
  return phi_x.parameter_count() + phi_xi.parameter_count() + phi_value.parameter_count();
}

SurrogateModel initial_model(const SurrogateShape& shape, const Normalization& norm, std::mt19937_64& rng) {
  require(shape.embedding > 0, ErrorKind::Validation, "surrogate: embedding width must be positive");
  auto chain = [&](int in, const std::vector<int>& hidden, int out) {
    std::vector<int> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  };
  SurrogateModel model;
  model.norm = norm;
  model.schema_hash = token_schema_hash();
  model.phi_x = MlpParams::random(chain(static_cast<int>(norm.x_mean.size()), shape.encoder_hidden, shape.embedding), rng);
  model.phi_xi =
      MlpParams::random(chain(static_cast<int>(norm.xi_mean.size()), shape.encoder_hidden, shape.embedding), rng);
  model.phi_value = MlpParams::random(chain(2 * shape.embedding, shape.head_hidden, 1), rng);
  model.validate();
  return model;
}

std::vector<double> embed(const SurrogateModel& model, std::span<const Token> tokens, TokenKind kind) {
  const bool is_x = kind == TokenKind::X;
  const MlpParams& mlp = is_x ? model.phi_x : model.phi_xi;
  const auto& mean = is_x ? model.norm.x_mean : model.norm.xi_mean;
  const auto& scale = is_x ? model.norm.x_scale : model.norm.xi_scale;
  const double value_scale = is_x ? model.norm.x_value_scale : model.norm.xi_value_scale;
  for (const Token& t : tokens) check_features(model, kind, t.features.size());

  std::vector<std::size_t> order(tokens.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (tokens[a].features != tokens[b].features) return tokens[a].features < tokens[b].features;
    return tokens[a].value < tokens[b].value;
  });

  std::vector<double> pooled(mlp.outputs(), 0.0);
  std::vector<double> normalized(mlp.inputs());
  for (std::size_t i : order) {
    const Token& t = tokens[i];
    for (int f = 0; f < mlp.inputs(); ++f) normalized[f] = (t.features[f] - mean[f]) / scale[f];
    const std::vector<double> h = mlp.forward(normalized);
    const double gate = t.value / value_scale;
    for (int k = 0; k < mlp.outputs(); ++k) pooled[k] += gate * h[k];
  }
  return pooled;
}

double forward_value(const SurrogateModel& model, std::span<const double> x_embedding,
                     std::span<const double> xi_embedding) {
  require(static_cast<int>(x_embedding.size()) == model.embedding_width() &&
              static_cast<int>(xi_embedding.size()) == model.embedding_width(),
          ErrorKind::Dimension, "forward_value: embedding has wrong width");
  std::vector<double> input(x_embedding.begin(), x_embedding.end());
  input.insert(input.end(), xi_embedding.begin(), xi_embedding.end());
  return model.norm.denormalize_label(model.phi_value.forward(input)[0]);
}

double forward_value(const SurrogateModel& model, std::span<const Token> x_tokens, std::span<const Token> xi_tokens) {
  return forward_value(model, embed(model, x_tokens, TokenKind::X), embed(model, xi_tokens, TokenKind::Xi));
}

std::vector<std::vector<double>> embedding_rows(const SurrogateModel& model, const FeatureContext& context,
                                                TokenKind kind) {
  const bool is_x = kind == TokenKind::X;
  const auto& rows = is_x ? context.x : context.xi;
  const MlpParams& mlp = is_x ? model.phi_x : model.phi_xi;
  const auto& mean = is_x ? model.norm.x_mean : model.norm.xi_mean;
  const auto& scale = is_x ? model.norm.x_scale : model.norm.xi_scale;
  const double value_scale = is_x ? model.norm.x_value_scale : model.norm.xi_value_scale;
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  std::vector<double> normalized(mlp.inputs());
  for (const auto& f : rows) {
    check_features(model, kind, f.size());
    for (int k = 0; k < mlp.inputs(); ++k) normalized[k] = (f[k] - mean[k]) / scale[k];
    std::vector<double> h = mlp.forward(normalized);
    for (double& v : h) v /= value_scale;
    out.push_back(std::move(h));
  }
  return out;
}

namespace detail {

ContextMatrices normalized_features(const FeatureContext& context, const Normalization& norm) {
  auto build = [](const std::vector<std::vector<double>>& rows, const std::vector<double>& mean,
                  const std::vector<double>& scale) {
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mean.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i].size() == mean.size(), ErrorKind::Dimension, "surrogate: token schema mismatch");
      for (std::size_t f = 0; f < mean.size(); ++f) m(i, f) = (rows[i][f] - mean[f]) / scale[f];
    }
    return m;
  };
  return {build(context.x, norm.x_mean, norm.x_scale), build(context.xi, norm.xi_mean, norm.xi_scale)};
}

}  // namespace detail
}  // namespace deroffer
