// Copyright 2026 The dmda Authors.
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

#ifndef DMDA_DMDA_H_
#define DMDA_DMDA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DMDA_API __declspec(dllexport)
#else
#define DMDA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dmda_status {
  DMDA_OK = 0,
  DMDA_ERR_INVALID_ARGUMENT = 1,
  DMDA_ERR_SHAPE = 2,
  DMDA_ERR_IO = 3,
  DMDA_ERR_STATE = 4,
  DMDA_ERR_INTERNAL = 5,
  DMDA_ERR_PARTIAL = 6, /* some matrix cells failed or report is incomplete */
} dmda_status;

typedef struct dmda_experiment dmda_experiment;
typedef struct dmda_froc dmda_froc;

DMDA_API const char* dmda_version(void);

/* Message for the last failing call on this thread; "" if none. */
DMDA_API const char* dmda_last_error(void);

DMDA_API dmda_status dmda_experiment_load(const char* config_path, dmda_experiment** out);
DMDA_API void dmda_experiment_free(dmda_experiment* exp);

/* Writes the 16 hex digit config hash plus terminator into buf. */
DMDA_API dmda_status dmda_experiment_config_hash(const dmda_experiment* exp, char* buf,
                                                 size_t len);
DMDA_API dmda_status dmda_experiment_output_dir(const dmda_experiment* exp, char* buf,
                                                size_t len);

DMDA_API dmda_status dmda_gen_data(dmda_experiment* exp, int force);

/* Cell counts are optional outputs. Returns DMDA_ERR_PARTIAL when any cell failed. */
DMDA_API dmda_status dmda_run_matrix(dmda_experiment* exp, int jobs, size_t* n_cells,
                                     size_t* n_failed);

/* out_dir may be NULL for <output_dir>/report. Returns DMDA_ERR_PARTIAL
   when runs are missing; the tables are still written. */
DMDA_API dmda_status dmda_report(dmda_experiment* exp, const char* out_dir);

DMDA_API dmda_status dmda_train_source(dmda_experiment* exp, uint64_t seed);
DMDA_API dmda_status dmda_adapt(dmda_experiment* exp, const char* method, uint64_t seed);

/* Evaluates a trained cell on the target test split; *out may be NULL. */
DMDA_API dmda_status dmda_evaluate(dmda_experiment* exp, const char* method, uint64_t seed,
                                   dmda_froc** out);

DMDA_API dmda_status dmda_froc_load(const char* csv_path, dmda_froc** out);
DMDA_API void dmda_froc_free(dmda_froc* curve);
DMDA_API size_t dmda_froc_size(const dmda_froc* curve);
DMDA_API dmda_status dmda_froc_point(const dmda_froc* curve, size_t index, double* threshold,
                                     double* fp_per_image, double* sensitivity);
DMDA_API dmda_status dmda_froc_sensitivity_at(const dmda_froc* curve, const double* fp_levels,
                                              size_t n_levels, double* out);

#ifdef __cplusplus
}
#endif

#endif /* DMDA_DMDA_H_ */
