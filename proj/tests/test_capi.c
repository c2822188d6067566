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


/* Exercises the C interface from C: generation, solve, bench, report and the
   error paths. Prints one line per failed check; exit code counts them. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "deroffer/deroffer.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: check failed: %s (last error: %s)\n", __FILE__, __LINE__, #cond, \
              deroffer_last_error());                             \
      ++failures;                                                 \
    }                                                             \
  } while (0)

int main(void) {
  char dir[512];
  const char* tmp = getenv("TMPDIR");
  snprintf(dir, sizeof dir, "%s/deroffer_capi_test", tmp ? tmp : "/tmp");
  char instance[600], out[600], csv[640];
  snprintf(instance, sizeof instance, "%s_instance.json", dir);
  snprintf(out, sizeof out, "%s_out", dir);
  snprintf(csv, sizeof csv, "%s/report.csv", out);
  char stale[700];
  snprintf(stale, sizeof stale, "%s/model.json", out);
  remove(stale); /* a model left by an earlier run would hide the missing-model error */

  deroffer_gen_options gen;
  deroffer_gen_options_default(&gen);
  EXPECT(gen.bus_count == 15 && gen.horizon == 24);
  gen.horizon = 4;
  gen.bus_count = 4;
  gen.pv_units = 2;
  gen.blocks = 2;
  gen.gamma = 2;
  gen.seed = 5;
  EXPECT(deroffer_gen(&gen, instance) == DEROFFER_OK);

  deroffer_config* config = NULL;
  EXPECT(deroffer_config_create(&config) == DEROFFER_OK);
  EXPECT(deroffer_config_set_instance(config, instance) == DEROFFER_OK);
  EXPECT(deroffer_config_set_output_dir(config, out) == DEROFFER_OK);
  const int one[] = {2};
  EXPECT(deroffer_config_set_trajectories(config, one, 1) == DEROFFER_OK);

  deroffer_result* ccg = NULL;
  deroffer_result* mono = NULL;
  EXPECT(deroffer_solve(config, "ccg", &ccg) == DEROFFER_OK);
  EXPECT(deroffer_solve(config, "monolithic", &mono) == DEROFFER_OK);
  if (ccg && mono) {
    EXPECT(deroffer_result_status(ccg) == DEROFFER_RUN_CONVERGED);
    EXPECT(fabs(deroffer_result_objective(ccg) - deroffer_result_objective(mono)) <=
           1e-6 * fmax(1.0, fabs(deroffer_result_objective(mono))));
    const double* x = NULL;
    EXPECT(deroffer_result_x(ccg, &x) == 8 && x != NULL);
    EXPECT(strncmp(deroffer_result_log(ccg), "k,LB,UB", 7) == 0);
    EXPECT(strstr(deroffer_result_json(ccg), "\"method\": \"ccg\"") != NULL);
  }
  deroffer_result_destroy(ccg);
  deroffer_result_destroy(mono);

  /* error paths */
  deroffer_result* none = NULL;
  EXPECT(deroffer_solve(config, "nn-ccg", &none) == DEROFFER_E_IO);
  EXPECT(strstr(deroffer_last_error(), "deroffer train") != NULL);
  EXPECT(none == NULL);
  EXPECT(deroffer_solve(config, "simplex", &none) == DEROFFER_E_CONFIGURATION);
  EXPECT(deroffer_solve(NULL, "ccg", &none) == DEROFFER_E_ARGUMENT);
  EXPECT(deroffer_config_set_methods(config, "ccg,ccg") == DEROFFER_E_CONFIGURATION);
  EXPECT(deroffer_config_set_methods(config, "") == DEROFFER_E_CONFIGURATION);
  EXPECT(deroffer_config_set_tolerance(config, -1.0) == DEROFFER_E_CONFIGURATION);
  EXPECT(deroffer_config_set_trajectories(config, one, 0) == DEROFFER_E_CONFIGURATION);
  deroffer_report* missing = NULL;
  EXPECT(deroffer_report_load("/nonexistent/report.csv", &missing) == DEROFFER_E_IO);
  EXPECT(strcmp(deroffer_status_name(DEROFFER_E_PARSE), "parse") == 0);

  /* train, then a short bench and the report reader */
  const int grid[] = {2, 3};
  EXPECT(deroffer_config_set_trajectories(config, grid, 2) == DEROFFER_OK);
  EXPECT(deroffer_config_set_dataset_contexts(config, 4) == DEROFFER_OK);
  EXPECT(deroffer_config_set_epochs(config, 10) == DEROFFER_OK);
  deroffer_train_summary summary;
  EXPECT(deroffer_train(config, &summary) == DEROFFER_OK);
  EXPECT(summary.records > 0);
  EXPECT(deroffer_last_error()[0] == '\0');

  deroffer_report* report = NULL;
  EXPECT(deroffer_bench(config, &report) == DEROFFER_OK);
  if (report) {
    EXPECT(deroffer_report_row_count(report) == 6);
    EXPECT(deroffer_report_all_converged(report) == 1);
    deroffer_report_row row;
    EXPECT(deroffer_report_row_at(report, 1, &row) == DEROFFER_OK);
    EXPECT(strcmp(row.method, "ccg") == 0 && row.trajectories == 2);
    EXPECT(strcmp(row.reference, "monolithic") == 0);
    EXPECT(fabs(row.gap_percent) <= 1e-4);
    EXPECT(deroffer_report_row_at(report, 6, &row) == DEROFFER_E_DIMENSION);
    EXPECT(strstr(deroffer_report_table(report), "Gap (%)") != NULL);

    deroffer_report* loaded = NULL;
    EXPECT(deroffer_report_load(csv, &loaded) == DEROFFER_OK);
    if (loaded) {
      EXPECT(strcmp(deroffer_report_csv(loaded), deroffer_report_csv(report)) == 0);
      deroffer_report_destroy(loaded);
    }
  }
  deroffer_report_destroy(report);
  deroffer_config_destroy(config);

  if (failures == 0) printf("all C API checks passed\n");
  return failures == 0 ? 0 : 1;
}
