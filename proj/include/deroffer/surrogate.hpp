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

// ReLU surrogate of the expected second-stage cost
//   NN(x, xi) ~ sum_omega rho_omega (c(omega)^T x + Q_omega(x, xi)).
//
// Each first-stage variable and each uncertain hour becomes a token: a value
// plus constant features (cost weights, coefficient aggregates per row
// family, hour of day). A token contributes value * MLP(features) to its
// embedding, so embeddings are sums over tokens and stay linear in x and xi.
// The value head maps concat(Phi_x, Phi_xi) to a normalized label.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "deroffer/ccg.hpp"
#include "deroffer/model.hpp"

namespace deroffer {

struct MlpParams {
  std::vector<int> widths;                   // inputs, hidden..., outputs
  std::vector<std::vector<double>> weights;  // layer l: widths[l+1] x widths[l], row-major
  std::vector<std::vector<double>> biases;

  int layers() const { return static_cast<int>(weights.size()); }
  int inputs() const { return widths.front(); }
  int outputs() const { return widths.back(); }
  std::size_t parameter_count() const;
  /// Throws Error(Validation) on broken chaining or non-finite entries.
  void validate() const;
  /// ReLU on hidden layers, identity on the last.
  std::vector<double> forward(std::span<const double> input) const;

  static MlpParams zeros(std::vector<int> widths);
  /// He-uniform weights, zero biases.
  static MlpParams random(std::vector<int> widths, std::mt19937_64& rng);

  bool operator==(const MlpParams&) const = default;
};

struct Token {
  double value = 0.0;
  std::vector<double> features;

  bool operator==(const Token&) const = default;
};

enum class TokenKind { X, Xi };

/// Raw (unnormalized) token features of one lowered problem.
struct FeatureContext {
  std::vector<std::vector<double>> x;   // one row per first-stage variable
  std::vector<std::vector<double>> xi;  // one row per hour

  bool operator==(const FeatureContext&) const = default;
};

inline constexpr int kXFeatureCount = 22;
inline constexpr int kXiFeatureCount = 23;

/// Names of the feature columns; also hashed into checkpoints.
std::vector<std::string> token_feature_names(TokenKind kind);
std::string token_schema_hash();

FeatureContext token_features(const StochasticProblem& problem);
std::vector<Token> tokenize_x(const StochasticProblem& problem, std::span<const double> x);
std::vector<Token> tokenize_xi(const StochasticProblem& problem, std::span<const double> xi);
std::vector<Token> tokenize(const FeatureContext& context, TokenKind kind, std::span<const double> values);

struct Normalization {
  std::vector<double> x_mean, x_scale;
  std::vector<double> xi_mean, xi_scale;
  double x_value_scale = 1.0;
  double xi_value_scale = 1.0;
  double label_mean = 0.0;
  double label_scale = 1.0;

  double normalize_label(double v) const { return (v - label_mean) / label_scale; }
  double denormalize_label(double v) const { return v * label_scale + label_mean; }
  void validate() const;

  bool operator==(const Normalization&) const = default;
};

struct SurrogateModel {
  MlpParams phi_x;      // token features -> embedding
  MlpParams phi_xi;
  MlpParams phi_value;  // concat(embeddings) -> normalized label
  Normalization norm;
  std::string schema_hash;

  int embedding_width() const { return phi_x.outputs(); }
  void validate() const;
  std::size_t parameter_count() const;

  bool operator==(const SurrogateModel&) const = default;
};

struct SurrogateShape {
  std::vector<int> encoder_hidden = {64};
  int embedding = 8;
  std::vector<int> head_hidden = {8};
};

SurrogateModel initial_model(const SurrogateShape& shape, const Normalization& norm, std::mt19937_64& rng);

/// Sum over tokens of (value / value_scale) * MLP(normalized features),
/// accumulated in canonical token order so any permutation gives bitwise
/// equal results. Throws Error(Dimension) on schema mismatch.
std::vector<double> embed(const SurrogateModel& model, std::span<const Token> tokens, TokenKind kind);

/// Surrogate value in $ (denormalized).
double forward_value(const SurrogateModel& model, std::span<const Token> x_tokens, std::span<const Token> xi_tokens);
double forward_value(const SurrogateModel& model, std::span<const double> x_embedding,
                     std::span<const double> xi_embedding);

/// Row i is the embedding contribution per unit of value of token i, so
/// embedding = sum_i value_i * rows[i]. This is what the MILP encodings use.
std::vector<std::vector<double>> embedding_rows(const SurrogateModel& model, const FeatureContext& context,
                                                TokenKind kind);

struct DatasetRecord {
  int context = 0;
  std::vector<double> x;
  std::vector<double> xi;
  double label = 0.0;  // $, exact
  bool validation = false;
};

struct LabeledDataset {
  std::vector<FeatureContext> contexts;
  std::vector<DatasetRecord> records;

  std::size_t count(bool validation) const;
};

struct DatasetConfig {
  int contexts = 200;
  int x_per_context = 5;
  int xi_per_x = 20;
  std::vector<int> trajectory_counts = {5, 25};  // cycled over contexts
  std::uint64_t seed = 1;
  double spot_check_fraction = 0.01;
  /// Shares of first-stage draws from sample_first_stage_near (around the
  /// context's own master solutions) and sample_first_stage_scaled. The
  /// rest are uniform on X.
  double anchored_fraction = 0.4;
  double scaled_fraction = 0.3;
  SolverConfig solver;
};

/// Trajectories of dataset context `context`; cycles the trajectory counts.
PriceScenarioSet dataset_context_scenarios(const OfferInstance& instance, const DatasetConfig& config, int context);

/// Labels come from recourse LPs. A random share of records is solved again
/// under a permuted pivot order and must agree within 1e-6 (relative).
LabeledDataset generate_dataset(const OfferInstance& instance, const DatasetConfig& config);

/// Uniform point of X = {x >= 0, sum_k x_tk <= q_max_t}.
std::vector<double> sample_first_stage(const OfferInstance& instance, std::mt19937_64& rng);
/// Point of X with a random overall scale, per-hour totals uniform below
/// it and often a single block per hour. Covers the small, sparse offers
/// that uniform draws almost never produce.
std::vector<double> sample_first_stage_scaled(const OfferInstance& instance, std::mt19937_64& rng);
/// Anchor with every entry scaled by U(0, 1.25), hour totals clipped to q_max.
std::vector<double> sample_first_stage_near(const OfferInstance& instance, std::span<const double> anchor,
                                            std::mt19937_64& rng);
/// Half of the draws are vertices, the rest interior points of U.
std::vector<double> sample_uncertainty(const BudgetedUncertaintySet& u, bool vertex, std::mt19937_64& rng);

void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out);

/// Statistics over the training split.
Normalization fit_normalization(const LabeledDataset& dataset);

struct TrainConfig {
  int epochs = 500;
  int validate_every = 10;
  int batch_size = 50;
  double learning_rate = 3e-4;
  double momentum = 0.9;
  /// Weight of the loss on residuals centered within each x group. It is
  /// what teaches the ranking of xi at a fixed x.
  double contrast_weight = 5.0;
  std::uint64_t seed = 1;
  SurrogateShape shape;
};

struct TrainPoint {
  int epoch = 0;
  double train_mse = 0.0;         // normalized labels
  double validation_mae = 0.0;    // $
  double validation_relative = 0.0;
};

struct TrainResult {
  SurrogateModel model;  // best validation checkpoint
  std::vector<TrainPoint> curve;
  int best_epoch = 0;
  double validation_relative_error = 0.0;
  double seconds = 0.0;
};

/// Momentum gradient descent on the MSE of normalized labels plus the
/// within-x contrast term. Keeps the checkpoint with the smallest
/// validation MAE. Throws Error(Divergence) when the loss stops being finite.
TrainResult train(const LabeledDataset& dataset, const TrainConfig& config);

/// mean |prediction - label| / mean |label| over the chosen split.
double relative_error(const SurrogateModel& model, const LabeledDataset& dataset, bool validation = true);

/// Parameters in a fixed order: phi_x, phi_xi, phi_value; per layer the
/// weights then the biases.
std::vector<double> flatten_parameters(const SurrogateModel& model);
void assign_parameters(SurrogateModel& model, std::span<const double> params);

/// Training loss over `records` (normalized labels) and its gradient with
/// respect to flatten_parameters order. Records sharing x are a group for
/// the contrast term.
double loss_and_gradient(const SurrogateModel& model, const LabeledDataset& dataset,
                         std::span<const std::size_t> records, std::vector<double>* gradient,
                         double contrast_weight = 0.0);

inline constexpr int kCheckpointVersion = 1;
std::string serialize_model(const SurrogateModel& model);
SurrogateModel parse_model(const std::string& text);
void save_model(const SurrogateModel& model, const std::filesystem::path& path);
SurrogateModel load_model(const std::filesystem::path& path);

}  // namespace deroffer
