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

// deroffer command line: gen, train, solve, bench, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deroffer/deroffer.h"

namespace {

struct ConfigDeleter {
  void operator()(deroffer_config* c) const { deroffer_config_destroy(c); }
};
struct ResultDeleter {
  void operator()(deroffer_result* r) const { deroffer_result_destroy(r); }
};
struct ReportDeleter {
  void operator()(deroffer_report* r) const { deroffer_report_destroy(r); }
};
using ConfigPtr = std::unique_ptr<deroffer_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<deroffer_result, ResultDeleter>;
using ReportPtr = std::unique_ptr<deroffer_report, ReportDeleter>;

constexpr int kExitNotConverged = 1;
constexpr int kExitError = 2;

struct CallFailed {
  deroffer_status status;
};

void check(deroffer_status s) {
  if (s != DEROFFER_OK) throw CallFailed{s};
}

struct RunOptions {
  std::string instance = "instance.json";
  std::string output = "out";
  std::string model;
  std::uint64_t seed = 7;
  int gamma = -1;
  double epsilon = 0.005;
  double tolerance = 1e-4;
  std::vector<int> trajectories = {5, 25};
  std::string methods = "monolithic,ccg,nn-ccg";
  long monolithic_cap = 400;
  int max_iterations = 100;
  int candidates = 5;
  int contexts = 200;
  int epochs = 500;
};

void add_run_flags(CLI::App* cmd, RunOptions& o, bool training) {
  cmd->add_option("-i,--instance", o.instance, "instance file from `deroffer gen`")->capture_default_str();
  cmd->add_option("-o,--out", o.output, "output directory")->capture_default_str();
  cmd->add_option("--model", o.model, "surrogate checkpoint (default <out>/model.json)");
  cmd->add_option("--seed", o.seed, "seed for trajectories, data and training")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "uncertainty budget (negative keeps the instance value)");
  cmd->add_option("--epsilon", o.epsilon, "nn-ccg relative stopping tolerance")->capture_default_str();
  cmd->add_option("--tolerance", o.tolerance, "ccg relative gap tolerance")->capture_default_str();
  cmd->add_option("--max-iterations", o.max_iterations)->capture_default_str();
  cmd->add_option("--candidates", o.candidates, "surrogate picks verified per nn-ccg iteration")->capture_default_str();
  cmd->add_option("--monolithic-cap", o.monolithic_cap, "largest deterministic equivalent, in recourse copies")
      ->capture_default_str();
  if (training) {
    cmd->add_option("--contexts", o.contexts, "dataset contexts")->capture_default_str();
    cmd->add_option("--epochs", o.epochs)->capture_default_str();
  }
}

ConfigPtr make_config(const RunOptions& o) {
  deroffer_config* raw = nullptr;
  check(deroffer_config_create(&raw));
  ConfigPtr c(raw);
  check(deroffer_config_set_instance(c.get(), o.instance.c_str()));
  check(deroffer_config_set_output_dir(c.get(), o.output.c_str()));
  check(deroffer_config_set_model(c.get(), o.model.c_str()));
  check(deroffer_config_set_seed(c.get(), o.seed));
  check(deroffer_config_set_gamma(c.get(), o.gamma));
  check(deroffer_config_set_epsilon(c.get(), o.epsilon));
  check(deroffer_config_set_tolerance(c.get(), o.tolerance));
  check(deroffer_config_set_trajectories(c.get(), o.trajectories.data(), o.trajectories.size()));
  check(deroffer_config_set_methods(c.get(), o.methods.c_str()));
  check(deroffer_config_set_monolithic_cap(c.get(), o.monolithic_cap));
  check(deroffer_config_set_max_iterations(c.get(), o.max_iterations));
  check(deroffer_config_set_candidates(c.get(), o.candidates));
  check(deroffer_config_set_dataset_contexts(c.get(), o.contexts));
  check(deroffer_config_set_epochs(c.get(), o.epochs));
  return c;
}

void write_text(const std::filesystem::path& path, const char* text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust day-ahead offers for a distribution feeder with DER"};
  app.require_subcommand(1);
  app.set_version_flag("--version", deroffer_version());

  deroffer_gen_options gen;
  deroffer_gen_options_default(&gen);
  std::string gen_path = "instance.json";
  bool no_battery = false;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic feeder instance");
  gen_cmd->add_option("path", gen_path, "output file")->capture_default_str();
  gen_cmd->add_option("--buses", gen.bus_count)->capture_default_str();
  gen_cmd->add_option("--horizon", gen.horizon)->capture_default_str();
  gen_cmd->add_option("--blocks", gen.blocks, "offer price points per hour")->capture_default_str();
  gen_cmd->add_option("--pv-units", gen.pv_units)->capture_default_str();
  gen_cmd->add_flag("--no-battery", no_battery);
  gen_cmd->add_option("--gamma", gen.gamma)->capture_default_str();
  gen_cmd->add_option("--deviation", gen.deviation_fraction, "PV deviation as a fraction of the forecast")
      ->capture_default_str();
  gen_cmd->add_option("--price-states", gen.price_states)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();

  RunOptions train_opts, solve_opts, bench_opts;
  auto* train_cmd = app.add_subcommand("train", "collect exact labels and train the surrogate");
  add_run_flags(train_cmd, train_opts, true);
  train_cmd->add_option("--trajectories", train_opts.trajectories, "trajectory counts of the dataset contexts")
      ->capture_default_str();

  std::string method;
  int solve_count = 5;
  auto* solve_cmd = app.add_subcommand("solve", "solve with one method");
  add_run_flags(solve_cmd, solve_opts, false);
  solve_cmd->add_option("--method", method, "monolithic, ccg or nn-ccg")
      ->required()
      ->check(CLI::IsMember({"monolithic", "ccg", "nn-ccg"}));
  solve_cmd->add_option("--trajectories", solve_count, "number of price trajectories")->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "run the methods over the trajectory grid");
  add_run_flags(bench_cmd, bench_opts, true);
  bench_cmd->add_option("--trajectories", bench_opts.trajectories)->capture_default_str();
  bench_cmd->add_option("--methods", bench_opts.methods, "comma separated")->capture_default_str();

  std::string report_dir = "out";
  auto* report_cmd = app.add_subcommand("report", "print the table of a finished bench");
  report_cmd->add_option("-o,--out", report_dir, "bench output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      gen.battery = no_battery ? 0 : 1;
      check(deroffer_gen(&gen, gen_path.c_str()));
      std::cout << "wrote " << gen_path << '\n';
      return 0;
    }
    if (train_cmd->parsed()) {
      ConfigPtr config = make_config(train_opts);
      deroffer_train_summary summary{};
      check(deroffer_train(config.get(), &summary));
      const std::string model = train_opts.model.empty() ? train_opts.output + "/model.json" : train_opts.model;
      std::printf("records %zu, data %.2f s, training %.2f s, validation relative error %.4f\nwrote %s\n",
                  summary.records, summary.data_seconds, summary.train_seconds, summary.validation_relative_error,
                  model.c_str());
      return 0;
    }
    if (solve_cmd->parsed()) {
      solve_opts.trajectories = {solve_count};
      ConfigPtr config = make_config(solve_opts);
      deroffer_result* raw = nullptr;
      check(deroffer_solve(config.get(), method.c_str(), &raw));
      ResultPtr result(raw);
      const std::filesystem::path dir = solve_opts.output;
      std::filesystem::create_directories(dir);
      const std::string stem = method + "_" + std::to_string(solve_count);
      write_text(dir / ("run_" + stem + ".json"), deroffer_result_json(result.get()));
      if (*deroffer_result_log(result.get())) write_text(dir / ("log_" + stem + ".csv"), deroffer_result_log(result.get()));
      std::cout << deroffer_result_json(result.get());
      return deroffer_result_status(result.get()) == DEROFFER_RUN_CONVERGED ? 0 : kExitNotConverged;
    }
    if (bench_cmd->parsed()) {
      ConfigPtr config = make_config(bench_opts);
      deroffer_report* raw = nullptr;
      check(deroffer_bench(config.get(), &raw));
      ReportPtr report(raw);
      std::cout << deroffer_report_table(report.get());
      return deroffer_report_all_converged(report.get()) ? 0 : kExitNotConverged;
    }
    if (report_cmd->parsed()) {
      deroffer_report* raw = nullptr;
      check(deroffer_report_load((std::filesystem::path(report_dir) / "report.csv").c_str(), &raw));
      ReportPtr report(raw);
      std::cout << deroffer_report_table(report.get());
      return deroffer_report_all_converged(report.get()) ? 0 : kExitNotConverged;
    }
  } catch (const CallFailed& f) {
    std::cerr << "deroffer: " << deroffer_status_name(f.status) << " error: " << deroffer_last_error() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "deroffer: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
