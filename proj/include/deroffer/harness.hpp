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

// Orchestration behind the command line: training, the three solve methods
// and the benchmark report.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "deroffer/ccg.hpp"
#include "deroffer/model.hpp"
#include "deroffer/nn_milp.hpp"
#include "deroffer/surrogate.hpp"

namespace deroffer {

enum class Method { Monolithic, Ccg, NnCcg };

const char* to_string(Method method) noexcept;
/// "monolithic", "ccg" or "nn-ccg". Throws Error(Configuration) otherwise.
Method parse_method(std::string_view name);

struct RunConfig {
  std::filesystem::path instance;
  std::vector<int> trajectory_counts = {5, 25};
  int gamma = -1;  // negative keeps the instance budget
  double epsilon = 0.005;
  double tolerance = 1e-4;
  std::uint64_t seed = 7;  // price trajectories; dataset and training derive from it
  std::vector<Method> methods = {Method::Monolithic, Method::Ccg, Method::NnCcg};
  std::filesystem::path output_dir = "out";
  std::filesystem::path model;  // empty: train during bench, read output_dir/model.json in solve
  // The deterministic equivalent is skipped above this many recourse copies
  // (vertices times trajectories).
  long monolithic_copy_cap = 400;
  int max_iterations = 100;
  int candidates = 5;  // nn-ccg surrogate picks verified per iteration
  DatasetConfig dataset;
  TrainConfig training;

  /// Throws Error(Configuration).
  void validate() const;
  std::filesystem::path model_path() const;
};

/// Loads the instance and applies the budget override.
OfferInstance load_run_instance(const RunConfig& config);
StochasticProblem run_problem(const OfferInstance& instance, int trajectories, std::uint64_t seed);

enum class RunStatus { Converged, NotConverged, Skipped };
const char* to_string(RunStatus status) noexcept;

struct RunResult {
  Method method = Method::Ccg;
  int trajectories = 0;
  RunStatus status = RunStatus::NotConverged;
  std::string note;  // why a run was skipped or stopped
  double objective = 0.0;  // $; nn-ccg reports its verified value
  double seconds = 0.0;    // wall clock around the solve call
  int iterations = 0;
  std::vector<double> x;
  std::string log;  // per-iteration CSV, empty for monolithic
};

/// Runs one method on one lowered problem. `model` is required for nn-ccg.
RunResult run_method(const StochasticProblem& problem, Method method, const RunConfig& config,
                     const SurrogateModel* model = nullptr);

struct TrainingOutcome {
  SurrogateModel model;
  double data_seconds = 0.0;
  double train_seconds = 0.0;
  double validation_relative_error = 0.0;
  std::size_t records = 0;
};

/// Dataset generation and training on `instance`, seeded from the config.
TrainingOutcome train_for(const OfferInstance& instance, const RunConfig& config);

/// Model for nn-ccg. Throws Error(Io) naming `deroffer train` when absent.
SurrogateModel load_run_model(const RunConfig& config);

struct BenchRow {
  Method method = Method::Ccg;
  int trajectories = 0;
  RunStatus status = RunStatus::NotConverged;
  double objective = 0.0;
  double seconds = 0.0;
  int iterations = 0;
  double gap_percent = 0.0;  // against the reference of the same |Omega|
  std::string reference;     // "monolithic", "ccg" or "" when none ran
  double speedup_monolithic = 0.0;  // 0 when the monolithic run is missing
  double speedup_ccg = 0.0;
  std::string note;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double data_seconds = 0.0;
  double train_seconds = 0.0;
  double total_seconds = 0.0;
  double validation_relative_error = 0.0;

  bool all_converged() const;
};

/// Gap and speedup columns from the raw runs, in method order per |Omega|.
BenchReport assemble_report(const std::vector<RunResult>& runs);

/// Trains (unless `config.model` is set), then runs every method over the
/// trajectory grid, one after another. Writes report.csv, report.txt,
/// model.json and one JSON summary per run into the output directory.
BenchReport run_bench(const RunConfig& config);

void write_report_csv(const BenchReport& report, std::ostream& out);
BenchReport read_report_csv(std::istream& in);
void write_report_table(const BenchReport& report, std::ostream& out);
std::string run_summary_json(const RunResult& run);

}  // namespace deroffer
