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

#include "deroffer/deroffer.h"

#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "deroffer/error.hpp"
#include "deroffer/generator.hpp"
#include "deroffer/harness.hpp"

struct deroffer_config {
  deroffer::RunConfig run;
};

struct deroffer_result {
  deroffer::RunResult run;
  std::string json;
};

struct deroffer_report {
  deroffer::BenchReport report;
  std::string table;
  std::string csv;
};

namespace {

thread_local std::string last_error;

deroffer_status status_of(deroffer::ErrorKind kind) {
  using deroffer::ErrorKind;
  switch (kind) {
    case ErrorKind::Dimension: return DEROFFER_E_DIMENSION;
    case ErrorKind::Structure: return DEROFFER_E_STRUCTURE;
    case ErrorKind::Validation: return DEROFFER_E_VALIDATION;
    case ErrorKind::Parse: return DEROFFER_E_PARSE;
    case ErrorKind::Capacity: return DEROFFER_E_CAPACITY;
    case ErrorKind::Configuration: return DEROFFER_E_CONFIGURATION;
    case ErrorKind::Divergence: return DEROFFER_E_DIVERGENCE;
    case ErrorKind::Io: return DEROFFER_E_IO;
    case ErrorKind::Internal: return DEROFFER_E_INTERNAL;
  }
  return DEROFFER_E_INTERNAL;
}

// Runs `body`, turning exceptions into status codes and the thread's message.
template <typename F>
deroffer_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return DEROFFER_OK;
  } catch (const deroffer::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DEROFFER_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DEROFFER_E_INTERNAL;
  }
}

deroffer_status missing(const char* what) {
  last_error = std::string(what) + " is null";
  return DEROFFER_E_ARGUMENT;
}

deroffer_run_status run_status_of(deroffer::RunStatus s) {
  switch (s) {
    case deroffer::RunStatus::Converged: return DEROFFER_RUN_CONVERGED;
    case deroffer::RunStatus::NotConverged: return DEROFFER_RUN_NOT_CONVERGED;
    case deroffer::RunStatus::Skipped: return DEROFFER_RUN_SKIPPED;
  }
  return DEROFFER_RUN_NOT_CONVERGED;
}

template <typename F>
deroffer_status set(deroffer_config* config, F&& body) {
  if (!config) return missing("config");
  return guarded([&] { body(config->run); });
}

deroffer_report* wrap(deroffer::BenchReport report) {
  auto* out = new deroffer_report{std::move(report), {}, {}};
  std::ostringstream table, csv;
  deroffer::write_report_table(out->report, table);
  deroffer::write_report_csv(out->report, csv);
  out->table = table.str();
  out->csv = csv.str();
  return out;
}

}  // namespace

extern "C" {

const char* deroffer_version(void) { return "0.1.0"; }

const char* deroffer_status_name(deroffer_status status) {
  switch (status) {
    case DEROFFER_OK: return "ok";
    case DEROFFER_E_DIMENSION: return "dimension";
    case DEROFFER_E_STRUCTURE: return "structure";
    case DEROFFER_E_VALIDATION: return "validation";
    case DEROFFER_E_PARSE: return "parse";
    case DEROFFER_E_CAPACITY: return "capacity";
    case DEROFFER_E_CONFIGURATION: return "configuration";
    case DEROFFER_E_DIVERGENCE: return "divergence";
    case DEROFFER_E_IO: return "io";
    case DEROFFER_E_INTERNAL: return "internal";
    case DEROFFER_E_ARGUMENT: return "argument";
  }
  return "unknown";
}

const char* deroffer_last_error(void) { return last_error.c_str(); }

void deroffer_gen_options_default(deroffer_gen_options* options) {
  if (!options) return;
  const deroffer::GeneratorConfig d;
  *options = deroffer_gen_options{d.bus_count,   d.horizon,     d.blocks,    d.pv_units,     d.battery ? 1 : 0, d.gamma,
                                  d.deviation_fraction, d.pv_capacity, d.peak_load, d.price_states, d.seed};
}

deroffer_status deroffer_gen(const deroffer_gen_options* options, const char* path) {
  if (!options) return missing("options");
  if (!path) return missing("path");
  return guarded([&] {
    deroffer::GeneratorConfig g;
    g.bus_count = options->bus_count;
    g.horizon = options->horizon;
    g.blocks = options->blocks;
    g.pv_units = options->pv_units;
    g.battery = options->battery != 0;
    g.gamma = options->gamma;
    g.deviation_fraction = options->deviation_fraction;
    g.pv_capacity = options->pv_capacity;
    g.peak_load = options->peak_load;
    g.price_states = options->price_states;
    g.seed = options->seed;
    deroffer::save_instance(deroffer::generate_instance(g), path);
  });
}

deroffer_status deroffer_config_create(deroffer_config** out) {
  if (!out) return missing("out");
  return guarded([&] { *out = new deroffer_config{}; });
}

void deroffer_config_destroy(deroffer_config* config) { delete config; }

deroffer_status deroffer_config_set_instance(deroffer_config* config, const char* path) {
  if (!path) return missing("path");
  return set(config, [&](deroffer::RunConfig& r) { r.instance = path; });
}

deroffer_status deroffer_config_set_output_dir(deroffer_config* config, const char* path) {
  if (!path) return missing("path");
  return set(config, [&](deroffer::RunConfig& r) { r.output_dir = path; });
}

deroffer_status deroffer_config_set_model(deroffer_config* config, const char* path) {
  if (!path) return missing("path");
  return set(config, [&](deroffer::RunConfig& r) { r.model = path; });
}

deroffer_status deroffer_config_set_seed(deroffer_config* config, uint64_t seed) {
  return set(config, [&](deroffer::RunConfig& r) { r.seed = seed; });
}

deroffer_status deroffer_config_set_gamma(deroffer_config* config, int gamma) {
  return set(config, [&](deroffer::RunConfig& r) { r.gamma = gamma; });
}

deroffer_status deroffer_config_set_epsilon(deroffer_config* config, double epsilon) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(epsilon >= 0.0, deroffer::ErrorKind::Configuration, "epsilon must be >= 0");
    r.epsilon = epsilon;
  });
}

deroffer_status deroffer_config_set_tolerance(deroffer_config* config, double tolerance) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(tolerance > 0.0, deroffer::ErrorKind::Configuration, "tolerance must be > 0");
    r.tolerance = tolerance;
  });
}

deroffer_status deroffer_config_set_trajectories(deroffer_config* config, const int* counts, size_t n) {
  if (!counts && n > 0) return missing("counts");
  return set(config, [&](deroffer::RunConfig& r) {
    std::vector<int> v(counts, counts + n);
    deroffer::require(!v.empty(), deroffer::ErrorKind::Configuration, "at least one trajectory count is needed");
    for (int c : v) deroffer::require(c > 0, deroffer::ErrorKind::Configuration, "trajectory counts must be positive");
    r.trajectory_counts = std::move(v);
  });
}

deroffer_status deroffer_config_set_methods(deroffer_config* config, const char* methods) {
  if (!methods) return missing("methods");
  return set(config, [&](deroffer::RunConfig& r) {
    std::vector<deroffer::Method> parsed;
    std::istringstream in(methods);
    std::string name;
    while (std::getline(in, name, ',')) {
      if (!name.empty()) parsed.push_back(deroffer::parse_method(name));
    }
    deroffer::RunConfig probe = r;
    probe.methods = parsed;
    probe.validate();
    r.methods = std::move(parsed);
  });
}

deroffer_status deroffer_config_set_monolithic_cap(deroffer_config* config, long copies) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(copies >= 0, deroffer::ErrorKind::Configuration, "monolithic cap must be >= 0");
    r.monolithic_copy_cap = copies;
  });
}

deroffer_status deroffer_config_set_max_iterations(deroffer_config* config, int iterations) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(iterations > 0, deroffer::ErrorKind::Configuration, "max iterations must be positive");
    r.max_iterations = iterations;
  });
}

deroffer_status deroffer_config_set_candidates(deroffer_config* config, int candidates) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(candidates > 0, deroffer::ErrorKind::Configuration, "candidates must be positive");
    r.candidates = candidates;
  });
}

deroffer_status deroffer_config_set_dataset_contexts(deroffer_config* config, int contexts) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(contexts > 0, deroffer::ErrorKind::Configuration, "dataset contexts must be positive");
    r.dataset.contexts = contexts;
  });
}

deroffer_status deroffer_config_set_epochs(deroffer_config* config, int epochs) {
  return set(config, [&](deroffer::RunConfig& r) {
    deroffer::require(epochs > 0, deroffer::ErrorKind::Configuration, "epochs must be positive");
    r.training.epochs = epochs;
  });
}

deroffer_status deroffer_train(const deroffer_config* config, deroffer_train_summary* summary) {
  if (!config) return missing("config");
  return guarded([&] {
    const deroffer::RunConfig& r = config->run;
    r.validate();
    const deroffer::OfferInstance instance = deroffer::load_run_instance(r);
    const deroffer::TrainingOutcome out = deroffer::train_for(instance, r);
    const auto path = r.model_path();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    deroffer::save_model(out.model, path);
    if (summary) {
      *summary = deroffer_train_summary{out.data_seconds, out.train_seconds, out.validation_relative_error, out.records};
    }
  });
}

deroffer_status deroffer_solve(const deroffer_config* config, const char* method, deroffer_result** out) {
  if (!config) return missing("config");
  if (!method) return missing("method");
  if (!out) return missing("out");
  return guarded([&] {
    const deroffer::RunConfig& r = config->run;
    r.validate();
    const deroffer::Method m = deroffer::parse_method(method);
    const deroffer::OfferInstance instance = deroffer::load_run_instance(r);
    deroffer::SurrogateModel model;
    if (m == deroffer::Method::NnCcg) model = deroffer::load_run_model(r);
    const deroffer::StochasticProblem problem = deroffer::run_problem(instance, r.trajectory_counts.front(), r.seed);
    auto* result = new deroffer_result{deroffer::run_method(problem, m, r, &model), {}};
    result->json = deroffer::run_summary_json(result->run);
    *out = result;
  });
}

void deroffer_result_destroy(deroffer_result* result) { delete result; }

deroffer_run_status deroffer_result_status(const deroffer_result* result) {
  return result ? run_status_of(result->run.status) : DEROFFER_RUN_NOT_CONVERGED;
}

double deroffer_result_objective(const deroffer_result* result) { return result ? result->run.objective : 0.0; }

double deroffer_result_seconds(const deroffer_result* result) { return result ? result->run.seconds : 0.0; }

int deroffer_result_iterations(const deroffer_result* result) { return result ? result->run.iterations : 0; }

size_t deroffer_result_x(const deroffer_result* result, const double** values) {
  if (!result) return 0;
  if (values) *values = result->run.x.data();
  return result->run.x.size();
}

const char* deroffer_result_log(const deroffer_result* result) { return result ? result->run.log.c_str() : ""; }

const char* deroffer_result_json(const deroffer_result* result) { return result ? result->json.c_str() : ""; }

deroffer_status deroffer_bench(const deroffer_config* config, deroffer_report** out) {
  if (!config) return missing("config");
  if (!out) return missing("out");
  return guarded([&] { *out = wrap(deroffer::run_bench(config->run)); });
}

deroffer_status deroffer_report_load(const char* csv_path, deroffer_report** out) {
  if (!csv_path) return missing("csv_path");
  if (!out) return missing("out");
  return guarded([&] {
    std::ifstream in(csv_path);
    if (!in) deroffer::fail(deroffer::ErrorKind::Io, std::string("cannot open ") + csv_path + " (run `deroffer bench` first)");
    *out = wrap(deroffer::read_report_csv(in));
  });
}

void deroffer_report_destroy(deroffer_report* report) { delete report; }

int deroffer_report_all_converged(const deroffer_report* report) {
  return report && report->report.all_converged() ? 1 : 0;
}

const char* deroffer_report_table(const deroffer_report* report) { return report ? report->table.c_str() : ""; }

const char* deroffer_report_csv(const deroffer_report* report) { return report ? report->csv.c_str() : ""; }

size_t deroffer_report_row_count(const deroffer_report* report) { return report ? report->report.rows.size() : 0; }

deroffer_status deroffer_report_row_at(const deroffer_report* report, size_t index, deroffer_report_row* row) {
  if (!report) return missing("report");
  if (!row) return missing("row");
  if (index >= report->report.rows.size()) {
    last_error = "row index " + std::to_string(index) + " out of range";
    return DEROFFER_E_DIMENSION;
  }
  const deroffer::BenchRow& r = report->report.rows[index];
  *row = deroffer_report_row{deroffer::to_string(r.method), r.trajectories,   run_status_of(r.status),
                             r.objective,                   r.seconds,        r.iterations,
                             r.gap_percent,                 r.reference.c_str(), r.speedup_monolithic,
                             r.speedup_ccg};
  last_error.clear();
  return DEROFFER_OK;
}

}  // extern "C"
