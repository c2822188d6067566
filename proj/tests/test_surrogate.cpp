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
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "deroffer/error.hpp"
#include "deroffer/surrogate.hpp"
#include "explicit_oracle.hpp"
#include "fixtures.hpp"

using namespace deroffer;

namespace {

StochasticProblem small_problem(std::uint64_t seed, int horizon, int gamma, int trajectories) {
  const OfferInstance inst = fixtures::small_instance(seed, horizon, gamma);
  return lower(inst, sample_trajectories(inst.price_chain, horizon, trajectories, seed + 100));
}

DatasetConfig small_config(std::uint64_t seed) {
  DatasetConfig dc;
  dc.contexts = 3;
  dc.x_per_context = 3;
  dc.xi_per_x = 6;
  dc.trajectory_counts = {2, 3};
  dc.seed = seed;
  return dc;
}

// Normalization with identity statistics for a model built by hand.
Normalization unit_norm() {
  Normalization n;
  n.x_mean.assign(kXFeatureCount, 0.0);
  n.x_scale.assign(kXFeatureCount, 1.0);
  n.xi_mean.assign(kXiFeatureCount, 0.0);
  n.xi_scale.assign(kXiFeatureCount, 1.0);
  return n;
}

SurrogateModel random_model(std::uint64_t seed, const Normalization& norm = unit_norm()) {
  std::mt19937_64 rng(seed);
  SurrogateShape shape;
  shape.encoder_hidden = {6};
  shape.embedding = 3;
  shape.head_hidden = {4};
  SurrogateModel m = initial_model(shape, norm, rng);
  // Nonzero biases so no layer is purely homogeneous.
  std::uniform_real_distribution<double> b(-0.3, 0.3);
  for (MlpParams* p : {&m.phi_x, &m.phi_xi, &m.phi_value}) {
    for (auto& layer : p->biases) {
      for (double& v : layer) v = b(rng);
    }
  }
  return m;
}

std::size_t feature_index(TokenKind kind, const std::string& name) {
  const auto names = token_feature_names(kind);
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

TEST_CASE("mlp forward on a hand-computed network") {
  MlpParams mlp;
  mlp.widths = {2, 2, 1};
  mlp.weights = {{1.0, -1.0, 0.5, 0.5}, {2.0, -3.0}};
  mlp.biases = {{0.0, -1.0}, {0.5}};
  mlp.validate();
  CHECK(mlp.parameter_count() == 9);
  // h = (relu(3 - 1), relu(1.5 + 0.5 - 1)) = (2, 1); 4 - 3 + 0.5
  CHECK(mlp.forward(std::vector<double>{3.0, 1.0})[0] == doctest::Approx(1.5).epsilon(1e-15));
  // Both hidden units are off; only the output bias remains.
  CHECK(mlp.forward(std::vector<double>{-1.0, 2.0})[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(mlp.forward(std::vector<double>{1.0}), Error);
}

TEST_CASE("mlp validation rejects broken shapes and values") {
  MlpParams ok = MlpParams::zeros({3, 2, 1});
  CHECK_NOTHROW(ok.validate());
  MlpParams bad = ok;
  bad.weights[0].pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = ok;
  bad.biases[1][0] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = ok;
  bad.widths = {3, 0, 1};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero-weight model returns the denormalized output bias") {
  SurrogateModel m;
  m.norm = unit_norm();
  m.norm.label_mean = 40.0;
  m.norm.label_scale = 5.0;
  m.schema_hash = token_schema_hash();
  m.phi_x = MlpParams::zeros({kXFeatureCount, 4, 2});
  m.phi_xi = MlpParams::zeros({kXiFeatureCount, 4, 2});
  m.phi_value = MlpParams::zeros({4, 3, 1});
  m.phi_value.biases[1][0] = 1.5;
  const StochasticProblem pb = small_problem(3, 3, 1, 2);
  std::mt19937_64 rng(1);
  const auto x = fixtures::random_first_stage(fixtures::small_instance(3, 3, 1), rng);
  const auto xt = tokenize_x(pb, x);
  const auto xit = tokenize_xi(pb, pb.uncertainty.xi_bar());
  CHECK(forward_value(m, xt, xit) == doctest::Approx(40.0 + 5.0 * 1.5).epsilon(1e-15));
}

TEST_CASE("embedding is invariant to token order, bit for bit") {
  const StochasticProblem pb = small_problem(5, 4, 2, 3);
  const SurrogateModel m = random_model(11);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = fixtures::random_first_stage(fixtures::small_instance(5, 4, 2), rng);
    const auto xi = fixtures::random_xi(pb.uncertainty, rng);
    auto xt = tokenize_x(pb, x);
    auto xit = tokenize_xi(pb, xi);
    const auto ex = embed(m, xt, TokenKind::X);
    const auto exi = embed(m, xit, TokenKind::Xi);
    const double v = forward_value(m, xt, xit);
    std::shuffle(xt.begin(), xt.end(), rng);
    std::shuffle(xit.begin(), xit.end(), rng);
    CHECK(embed(m, xt, TokenKind::X) == ex);
    CHECK(embed(m, xit, TokenKind::Xi) == exi);
    CHECK(forward_value(m, xt, xit) == v);
  }
}

TEST_CASE("embedding is linear in token values") {
  const StochasticProblem pb = small_problem(6, 3, 1, 2);
  const SurrogateModel m = random_model(12);
  std::mt19937_64 rng(4);
  const auto x = fixtures::random_first_stage(fixtures::small_instance(6, 3, 1), rng);

  SUBCASE("no tokens pool to zero") {
    const auto e = embed(m, std::vector<Token>{}, TokenKind::X);
    CHECK(e == std::vector<double>(m.embedding_width(), 0.0));
  }
  SUBCASE("a doubled token equals one token of twice the value") {
    const auto tokens = tokenize_x(pb, x);
    std::vector<Token> doubled = tokens;
    doubled.push_back(tokens.front());
    std::vector<Token> merged = tokens;
    merged.front().value *= 2.0;
    const auto a = embed(m, doubled, TokenKind::X);
    const auto b = embed(m, merged, TokenKind::X);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }
  SUBCASE("embedding rows reproduce the pooled embedding") {
    const FeatureContext ctx = token_features(pb);
    const auto rows = embedding_rows(m, ctx, TokenKind::X);
    const auto e = embed(m, tokenize(ctx, TokenKind::X, x), TokenKind::X);
    for (std::size_t k = 0; k < e.size(); ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * rows[i][k];
      CHECK(sum == doctest::Approx(e[k]).epsilon(1e-12));
    }
  }
  SUBCASE("x = 0 leaves only the xi embedding") {
    const std::vector<double> zero(x.size(), 0.0);
    const auto e = embed(m, tokenize_x(pb, zero), TokenKind::X);
    for (double v : e) CHECK(v == 0.0);
  }
}

TEST_CASE("token features match an independent recomputation") {
  const StochasticProblem pb = small_problem(7, 3, 1, 3);
  const FeatureContext ctx = token_features(pb);
  const CompactProblem& c0 = pb.compact.front();
  REQUIRE(ctx.x.size() == static_cast<std::size_t>(c0.n));
  REQUIRE(ctx.xi.size() == static_cast<std::size_t>(c0.p));
  for (const auto& row : ctx.x) CHECK(row.size() == static_cast<std::size_t>(kXFeatureCount));
  for (const auto& row : ctx.xi) CHECK(row.size() == static_cast<std::size_t>(kXiFeatureCount));

  const std::size_t cost = feature_index(TokenKind::X, "expected_cost");
  const std::size_t balance_sum = feature_index(TokenKind::X, "AE.balance.sum");
  const std::size_t balance_max = feature_index(TokenKind::X, "AE.balance.max");
  const std::size_t cap_sum = feature_index(TokenKind::X, "AE.offer_capacity.sum");
  for (int i = 0; i < c0.n; ++i) {
    double c = 0.0, bsum = 0.0, bmax = 0.0, csum = 0.0;
    const Eigen::MatrixXd a0 = Eigen::MatrixXd(c0.A);
    for (int r = 0; r < a0.rows(); ++r) {
      if (c0.a_family[r] == RowFamily::OfferCapacity) csum += a0(r, i);
    }
    for (int w = 0; w < pb.scenario_count(); ++w) {
      const CompactProblem& cp = pb.compact[w];
      c += pb.weights[w] * cp.c[i];
      const Eigen::MatrixXd e = Eigen::MatrixXd(cp.E);
      bool seen = false;
      double top = 0.0;
      for (int r = 0; r < e.rows(); ++r) {
        if (cp.y_family[r] != RowFamily::Balance || e(r, i) == 0.0) continue;
        bsum += pb.weights[w] * e(r, i);
        top = seen ? std::max(top, e(r, i)) : e(r, i);
        seen = true;
      }
      if (seen) bmax += pb.weights[w] * top;
    }
    CHECK(ctx.x[i][cost] == doctest::Approx(c).epsilon(1e-12));
    CHECK(ctx.x[i][balance_sum] == doctest::Approx(bsum).epsilon(1e-12));
    CHECK(ctx.x[i][balance_max] == doctest::Approx(bmax).epsilon(1e-12));
    CHECK(ctx.x[i][cap_sum] == doctest::Approx(csum).epsilon(1e-12));
  }
  const std::size_t bar = feature_index(TokenKind::Xi, "xi_bar");
  const std::size_t hat = feature_index(TokenKind::Xi, "xi_hat");
  const std::size_t sine = feature_index(TokenKind::Xi, "hour_sin");
  for (int t = 0; t < c0.p; ++t) {
    CHECK(ctx.xi[t][bar] == pb.uncertainty.xi_bar()[t]);
    CHECK(ctx.xi[t][hat] == pb.uncertainty.xi_hat()[t]);
    CHECK(ctx.xi[t][sine] == doctest::Approx(std::sin(2.0 * M_PI * t / 24.0)).epsilon(1e-15));
  }
  CHECK(token_schema_hash().size() == 16);
  CHECK_THROWS_AS(tokenize(ctx, TokenKind::X, std::vector<double>(3, 0.0)), Error);
}

TEST_CASE("first-stage samplers stay inside X") {
  const OfferInstance inst = fixtures::small_instance(8, 6, 2);
  const StochasticProblem pb = lower(inst, sample_trajectories(inst.price_chain, 6, 2, 1));
  std::mt19937_64 rng(5);
  const std::vector<double> anchor(inst.offer_count(), 5.0);
  auto inside = [&](const std::vector<double>& x) {
    REQUIRE(static_cast<int>(x.size()) == inst.offer_count());
    std::size_t at = 0;
    for (int t = 0; t < inst.horizon; ++t) {
      double total = 0.0;
      for (std::size_t k = 0; k < inst.price_grid[t].size(); ++k) {
        CHECK(x[at] >= 0.0);
        total += x[at++];
      }
      CHECK(total <= inst.q_max[t] * (1.0 + 1e-12));
    }
  };
  for (int i = 0; i < 200; ++i) {
    inside(sample_first_stage(inst, rng));
    inside(sample_first_stage_scaled(inst, rng));
    inside(sample_first_stage_near(inst, anchor, rng));
  }
  CHECK_THROWS_AS(sample_first_stage_near(inst, std::vector<double>(2, 0.0), rng), Error);
  for (int i = 0; i < 50; ++i) {
    const auto xi = sample_uncertainty(pb.uncertainty, i % 2 == 0, rng);
    CHECK(membership(pb.uncertainty, xi, 1e-9));
  }
}

TEST_CASE("dataset labels equal the explicit recourse oracle") {
  const OfferInstance inst = fixtures::small_instance(9, 3, 1);
  const DatasetConfig dc = small_config(4);
  const LabeledDataset ds = generate_dataset(inst, dc);
  REQUIRE(ds.records.size() == static_cast<std::size_t>(dc.contexts * dc.x_per_context * dc.xi_per_x));
  REQUIRE(ds.contexts.size() == static_cast<std::size_t>(dc.contexts));
  std::vector<StochasticProblem> problems;
  for (int ctx = 0; ctx < dc.contexts; ++ctx) {
    problems.push_back(lower(inst, dataset_context_scenarios(inst, dc, ctx)));
    CHECK(problems.back().scenario_count() == dc.trajectory_counts[ctx % 2]);
    CHECK(token_features(problems.back()) == ds.contexts[ctx]);
  }
  for (const DatasetRecord& rec : ds.records) {
    const StochasticProblem& pb = problems.at(rec.context);
    const double expected = pb.expected_revenue_cost(rec.x) + oracle::explicit_recourse(pb, rec.x, rec.xi);
    CHECK(rec.label == doctest::Approx(expected).epsilon(1e-7));
    CHECK(membership(pb.uncertainty, rec.xi, 1e-9));
  }
}

TEST_CASE("dataset generation is seeded and splits by record hash") {
  const OfferInstance inst = fixtures::small_instance(9, 3, 1);
  DatasetConfig dc = small_config(4);
  dc.contexts = 6;
  dc.x_per_context = 5;
  dc.xi_per_x = 10;
  const LabeledDataset a = generate_dataset(inst, dc);
  const LabeledDataset b = generate_dataset(inst, dc);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x == b.records[i].x);
    CHECK(a.records[i].xi == b.records[i].xi);
    CHECK(a.records[i].label == b.records[i].label);
    CHECK(a.records[i].validation == b.records[i].validation);
  }
  const double share = static_cast<double>(a.count(true)) / static_cast<double>(a.records.size());
  CHECK(share > 0.12);
  CHECK(share < 0.28);
  dc.seed = 5;
  CHECK(generate_dataset(inst, dc).records.front().x != a.records.front().x);
}

TEST_CASE("gamma zero gives one label per first-stage point") {
  const OfferInstance inst = fixtures::small_instance(10, 3, 0);
  const LabeledDataset ds = generate_dataset(inst, small_config(2));
  for (std::size_t i = 1; i < ds.records.size(); ++i) {
    const DatasetRecord& prev = ds.records[i - 1];
    const DatasetRecord& rec = ds.records[i];
    if (prev.context == rec.context && prev.x == rec.x) CHECK(prev.label == rec.label);
  }
}

TEST_CASE("dataset configuration errors") {
  const OfferInstance inst = fixtures::small_instance(9, 3, 1);
  DatasetConfig dc = small_config(1);
  dc.contexts = 0;
  CHECK_THROWS_AS(generate_dataset(inst, dc), Error);
  dc = small_config(1);
  dc.trajectory_counts.clear();
  CHECK_THROWS_AS(generate_dataset(inst, dc), Error);
  dc = small_config(1);
  dc.scaled_fraction = 0.8;
  dc.anchored_fraction = 0.5;
  CHECK_THROWS_AS(generate_dataset(inst, dc), Error);
}

TEST_CASE("dataset csv carries a schema header") {
  const OfferInstance inst = fixtures::small_instance(9, 2, 1);
  DatasetConfig dc = small_config(3);
  dc.contexts = 1;
  dc.x_per_context = 1;
  dc.xi_per_x = 2;
  const LabeledDataset ds = generate_dataset(inst, dc);
  std::ostringstream out;
  write_dataset_csv(ds, out);
  std::istringstream in(out.str());
  std::string first, second, row;
  std::getline(in, first);
  std::getline(in, second);
  const std::size_t n = ds.records.front().x.size();
  CHECK(first == "# deroffer dataset v1 n=" + std::to_string(n) + " p=2 contexts=1 schema=" + token_schema_hash());
  CHECK(second.rfind("context,split,label,x0,", 0) == 0);
  CHECK(second.find(",xi1") != std::string::npos);
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("normalization statistics") {
  const OfferInstance inst = fixtures::small_instance(11, 3, 1);
  const LabeledDataset ds = generate_dataset(inst, small_config(6));
  const Normalization n = fit_normalization(ds);
  CHECK_NOTHROW(n.validate());
  for (double v : {-3.5, 0.0, 17.25, 1e4}) {
    CHECK(n.denormalize_label(n.normalize_label(v)) == doctest::Approx(v).epsilon(1e-12));
  }
  // Training labels come out centered with unit spread.
  double sum = 0.0, sq = 0.0, count = 0.0;
  for (const DatasetRecord& r : ds.records) {
    if (r.validation) continue;
    const double z = n.normalize_label(r.label);
    sum += z;
    sq += z * z;
    count += 1.0;
  }
  CHECK(std::abs(sum / count) < 1e-12);
  CHECK(sq / count == doctest::Approx(1.0).epsilon(1e-9));
  for (double s : n.x_scale) CHECK(s > 0.0);
  CHECK(n.x_mean.size() == static_cast<std::size_t>(kXFeatureCount));
  CHECK(n.xi_mean.size() == static_cast<std::size_t>(kXiFeatureCount));
}

TEST_CASE("analytic gradient matches central differences") {
  const OfferInstance inst = fixtures::small_instance(12, 3, 1);
  const LabeledDataset ds = generate_dataset(inst, small_config(7));
  std::mt19937_64 rng(21);
  SurrogateShape shape;
  shape.encoder_hidden = {6};
  shape.embedding = 3;
  shape.head_hidden = {4};
  SurrogateModel model = initial_model(shape, fit_normalization(ds), rng);
  std::vector<std::size_t> records(ds.records.size());
  std::iota(records.begin(), records.end(), 0);
  const std::vector<double> theta = flatten_parameters(model);
  REQUIRE(theta.size() == model.parameter_count());

  for (double contrast : {0.0, 5.0}) {
    CAPTURE(contrast);
    std::vector<double> grad;
    loss_and_gradient(model, ds, records, &grad, contrast);
    REQUIRE(grad.size() == theta.size());
    std::vector<std::size_t> coords(theta.size());
    std::iota(coords.begin(), coords.end(), 0);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(100);
    int checked = 0;
    for (std::size_t i : coords) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
      std::vector<double> plus = theta, minus = theta;
      plus[i] += h;
      minus[i] -= h;
      SurrogateModel mp = model, mm = model;
      assign_parameters(mp, plus);
      assign_parameters(mm, minus);
      const double fd = (loss_and_gradient(mp, ds, records, nullptr, contrast) -
                         loss_and_gradient(mm, ds, records, nullptr, contrast)) /
                        (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-10});
      CAPTURE(i);
      CHECK(std::abs(fd - grad[i]) / scale <= 1e-4);
      ++checked;
    }
    CHECK(checked == 100);
  }
  CHECK_THROWS_AS(assign_parameters(model, std::vector<double>(3, 0.0)), Error);
}

TEST_CASE("training fits a constant label and is deterministic") {
  const OfferInstance inst = fixtures::small_instance(13, 3, 1);
  LabeledDataset ds = generate_dataset(inst, small_config(8));
  for (DatasetRecord& r : ds.records) r.label = 42.0;
  TrainConfig tc;
  tc.epochs = 300;
  tc.learning_rate = 1e-3;
  tc.shape.encoder_hidden = {8};
  tc.shape.embedding = 4;
  tc.shape.head_hidden = {4};
  const TrainResult a = train(ds, tc);
  CHECK(a.validation_relative_error < 1e-3);
  CHECK(a.curve.size() == 30);
  CHECK(a.curve.back().epoch == 300);
  const TrainResult b = train(ds, tc);
  CHECK(a.model == b.model);
  CHECK(a.best_epoch == b.best_epoch);
  tc.seed = 2;
  CHECK_FALSE(train(ds, tc).model == a.model);
}

TEST_CASE("training reduces the validation error on real labels") {
  const OfferInstance inst = fixtures::small_instance(14, 3, 1);
  DatasetConfig dc = small_config(9);
  dc.contexts = 6;
  const LabeledDataset ds = generate_dataset(inst, dc);
  TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 1e-3;
  tc.batch_size = 20;
  const TrainResult r = train(ds, tc);
  REQUIRE(!r.curve.empty());
  const double best = std::min_element(r.curve.begin(), r.curve.end(), [](const TrainPoint& a, const TrainPoint& b) {
                        return a.validation_mae < b.validation_mae;
                      })->validation_mae;
  CHECK(r.curve.front().validation_mae > best);
  CHECK(relative_error(r.model, ds, true) == doctest::Approx(r.validation_relative_error).epsilon(1e-12));
}

TEST_CASE("training errors") {
  const OfferInstance inst = fixtures::small_instance(13, 3, 1);
  const LabeledDataset ds = generate_dataset(inst, small_config(8));
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(train(ds, tc), Error);
  tc = TrainConfig{};
  tc.momentum = 1.0;
  CHECK_THROWS_AS(train(ds, tc), Error);
  tc = TrainConfig{};
  tc.learning_rate = 1e6;
  tc.epochs = 50;
  try {
    train(ds, tc);
    FAIL("a huge learning rate should diverge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
  }
  LabeledDataset empty = ds;
  for (DatasetRecord& r : empty.records) r.validation = false;
  CHECK_THROWS_AS(train(empty, TrainConfig{}), Error);
}

TEST_CASE("checkpoint round trip and parse errors") {
  const SurrogateModel m = random_model(31);
  const std::string text = serialize_model(m);
  CHECK(parse_model(text) == m);

  auto field_of = [](const std::string& doc) {
    try {
      parse_model(doc);
    } catch (const ParseError& e) {
      return e.field_path();
    }
    return std::string("<no error>");
  };
  CHECK(field_of("{not json") == "");
  auto edit = [&](const std::string& from, const std::string& to) {
    std::string doc = text;
    const auto at = doc.find(from);
    REQUIRE(at != std::string::npos);
    doc.replace(at, from.size(), to);
    return doc;
  };
  CHECK(field_of(edit("\"version\": 1", "\"version\": 9")) == "version");
  CHECK(field_of(edit("\"deroffer-surrogate\"", "\"other\"")) == "format");
  CHECK(field_of(edit("\"schema_hash\": \"", "\"schema_hash\": \"0")) == "schema_hash");
  CHECK(field_of(edit("\"label_scale\"", "\"label_scalar\"")) == "normalization.label_scale");
  CHECK(field_of(edit("\"phi_xi\"", "\"phi_zz\"")) == "phi_xi");

  const auto path = std::filesystem::temp_directory_path() / "deroffer_test_model.json";
  save_model(m, path);
  CHECK(load_model(path) == m);
  std::filesystem::remove(path);
  try {
    load_model(path);
    FAIL("missing file should throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("deroffer train") != std::string::npos);
  }
}
