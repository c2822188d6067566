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

#ifndef DEROFFER_DEROFFER_H
#define DEROFFER_DEROFFER_H

/* C interface to the deroffer library. Every call returns a status; on
   failure deroffer_last_error() holds the message for the calling thread.
   Handles are owned by the caller and released with the matching destroy. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DEROFFER_API __declspec(dllexport)
#else
#define DEROFFER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum deroffer_status {
  DEROFFER_OK = 0,
  DEROFFER_E_DIMENSION = 1,
  DEROFFER_E_STRUCTURE = 2,
  DEROFFER_E_VALIDATION = 3,
  DEROFFER_E_PARSE = 4,
  DEROFFER_E_CAPACITY = 5,
  DEROFFER_E_CONFIGURATION = 6,
  DEROFFER_E_DIVERGENCE = 7,
  DEROFFER_E_IO = 8,
  DEROFFER_E_INTERNAL = 9,
  DEROFFER_E_ARGUMENT = 10 /* null handle or pointer */
} deroffer_status;

typedef enum deroffer_run_status {
  DEROFFER_RUN_CONVERGED = 0,
  DEROFFER_RUN_NOT_CONVERGED = 1,
  DEROFFER_RUN_SKIPPED = 2
} deroffer_run_status;

typedef struct deroffer_config deroffer_config;
typedef struct deroffer_result deroffer_result;
typedef struct deroffer_report deroffer_report;

DEROFFER_API const char* deroffer_version(void);
DEROFFER_API const char* deroffer_status_name(deroffer_status status);
/* Message of the last failed call on this thread, "" when none. */
DEROFFER_API const char* deroffer_last_error(void);

/* Instance generation. */
typedef struct deroffer_gen_options {
  int bus_count;
  int horizon;
  int blocks;
  int pv_units;
  int battery; /* 0 or 1 */
  int gamma;
  double deviation_fraction;
  double pv_capacity;
  double peak_load;
  int price_states;
  uint64_t seed;
} deroffer_gen_options;

DEROFFER_API void deroffer_gen_options_default(deroffer_gen_options* options);
DEROFFER_API deroffer_status deroffer_gen(const deroffer_gen_options* options, const char* path);

/* Run configuration. */
DEROFFER_API deroffer_status deroffer_config_create(deroffer_config** out);
DEROFFER_API void deroffer_config_destroy(deroffer_config* config);
DEROFFER_API deroffer_status deroffer_config_set_instance(deroffer_config* config, const char* path);
DEROFFER_API deroffer_status deroffer_config_set_output_dir(deroffer_config* config, const char* path);
/* "" trains inside bench and reads <output_dir>/model.json elsewhere. */
DEROFFER_API deroffer_status deroffer_config_set_model(deroffer_config* config, const char* path);
DEROFFER_API deroffer_status deroffer_config_set_seed(deroffer_config* config, uint64_t seed);
/* Negative keeps the instance budget. */
DEROFFER_API deroffer_status deroffer_config_set_gamma(deroffer_config* config, int gamma);
DEROFFER_API deroffer_status deroffer_config_set_epsilon(deroffer_config* config, double epsilon);
DEROFFER_API deroffer_status deroffer_config_set_tolerance(deroffer_config* config, double tolerance);
DEROFFER_API deroffer_status deroffer_config_set_trajectories(deroffer_config* config, const int* counts, size_t n);
/* Comma separated subset of monolithic, ccg, nn-ccg. */
DEROFFER_API deroffer_status deroffer_config_set_methods(deroffer_config* config, const char* methods);
DEROFFER_API deroffer_status deroffer_config_set_monolithic_cap(deroffer_config* config, long copies);
DEROFFER_API deroffer_status deroffer_config_set_max_iterations(deroffer_config* config, int iterations);
DEROFFER_API deroffer_status deroffer_config_set_candidates(deroffer_config* config, int candidates);
DEROFFER_API deroffer_status deroffer_config_set_dataset_contexts(deroffer_config* config, int contexts);
DEROFFER_API deroffer_status deroffer_config_set_epochs(deroffer_config* config, int epochs);

/* Dataset generation and training; writes the model file. */
typedef struct deroffer_train_summary {
  double data_seconds;
  double train_seconds;
  double validation_relative_error;
  size_t records;
} deroffer_train_summary;

DEROFFER_API deroffer_status deroffer_train(const deroffer_config* config, deroffer_train_summary* summary);

/* One method on the first trajectory count of the config. */
DEROFFER_API deroffer_status deroffer_solve(const deroffer_config* config, const char* method, deroffer_result** out);
DEROFFER_API void deroffer_result_destroy(deroffer_result* result);
DEROFFER_API deroffer_run_status deroffer_result_status(const deroffer_result* result);
DEROFFER_API double deroffer_result_objective(const deroffer_result* result);
DEROFFER_API double deroffer_result_seconds(const deroffer_result* result);
DEROFFER_API int deroffer_result_iterations(const deroffer_result* result);
DEROFFER_API size_t deroffer_result_x(const deroffer_result* result, const double** values);
DEROFFER_API const char* deroffer_result_log(const deroffer_result* result);
DEROFFER_API const char* deroffer_result_json(const deroffer_result* result);

/* Bench over the trajectory grid; writes report.csv, report.txt and run
   summaries into the output directory. */
DEROFFER_API deroffer_status deroffer_bench(const deroffer_config* config, deroffer_report** out);
DEROFFER_API deroffer_status deroffer_report_load(const char* csv_path, deroffer_report** out);
DEROFFER_API void deroffer_report_destroy(deroffer_report* report);
DEROFFER_API int deroffer_report_all_converged(const deroffer_report* report);
DEROFFER_API const char* deroffer_report_table(const deroffer_report* report);
DEROFFER_API const char* deroffer_report_csv(const deroffer_report* report);

typedef struct deroffer_report_row {
  const char* method;
  int trajectories;
  deroffer_run_status status;
  double objective;
  double seconds;
  int iterations;
  double gap_percent;
  const char* reference; /* "" when no reference ran */
  double speedup_monolithic;
  double speedup_ccg;
} deroffer_report_row;

DEROFFER_API size_t deroffer_report_row_count(const deroffer_report* report);
DEROFFER_API deroffer_status deroffer_report_row_at(const deroffer_report* report, size_t index,
                                                    deroffer_report_row* row);

#ifdef __cplusplus
}
#endif

#endif
