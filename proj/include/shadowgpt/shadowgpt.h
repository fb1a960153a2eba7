// Copyright 2026 The ShadowGPT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHADOWGPT_SHADOWGPT_H
#define SHADOWGPT_SHADOWGPT_H

/* C interface to the shadowgpt library.
 *
 * Every function returns an sg_status. On failure, sg_last_error() returns a
 * one-line description valid until the next call on the same thread. Handles
 * are opaque; release them with the matching *_free function. Strings
 * returned through char** outputs are owned by the caller and released with
 * sg_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(SHADOWGPT_BUILDING) && defined(__GNUC__)
#define SG_API __attribute__((visibility("default")))
#else
#define SG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    SG_OK = 0,
    SG_ERR_CONFIG = 2,  /* invalid parameters or configuration */
    SG_ERR_NUMERIC = 3, /* eigensolver failure, divergence, non-finite values */
    SG_ERR_IO = 4,      /* missing, unreadable or corrupt files */
} sg_status;

typedef enum {
    SG_FAMILY_TFIM = 0,
    SG_FAMILY_CLUSTER_ISING = 1,
} sg_family;

typedef struct sg_config sg_config;
typedef struct sg_ground_state sg_ground_state;
typedef struct sg_model sg_model;

SG_API const char *sg_version(void);
SG_API const char *sg_last_error(void);
SG_API void sg_string_free(char *s);

/* Run configuration (JSON with comments). */
SG_API sg_status sg_config_load(const char *path, sg_config **out);
SG_API sg_status sg_config_parse(const char *text, sg_config **out);
SG_API sg_status sg_config_default(sg_family family, sg_config **out);
SG_API sg_status sg_config_set_seed(sg_config *config, uint64_t seed);
SG_API sg_status sg_config_set_output_dir(sg_config *config, const char *dir);
SG_API sg_status sg_config_set_threads(sg_config *config, int threads);
/* Fully expanded configuration as JSON. */
SG_API sg_status sg_config_to_json(const sg_config *config, char **json);
SG_API void sg_config_free(sg_config *config);

/* Run stages. summary receives a human-readable report (may be NULL).
 * checkpoint may be NULL for the run's best checkpoint. point/point_len
 * select a single parameter point for predict and oracle (oracle accepts
 * NULL for the whole plan). */
SG_API sg_status sg_run_gen_data(const sg_config *config, int dry_run, char **summary);
SG_API sg_status sg_run_train(const sg_config *config, int resume, int dry_run, char **summary);
SG_API sg_status sg_run_evaluate(const sg_config *config, const char *checkpoint, int dry_run, char **summary);
SG_API sg_status sg_run_predict(const sg_config *config, const char *checkpoint, const double *point, size_t point_len,
                         int dry_run, char **summary);
SG_API sg_status sg_run_oracle(const sg_config *config, const double *point, size_t point_len, int dry_run,
                        char **summary);

/* Exact ground space of one Hamiltonian. */
SG_API sg_status sg_ground_state_solve(sg_family family, const double *params, size_t n_params, int n_qubits,
                                sg_ground_state **out);
SG_API sg_status sg_ground_state_energy(const sg_ground_state *gs, double *energy);
SG_API sg_status sg_ground_state_degeneracy(const sg_ground_state *gs, size_t *degeneracy);
/* pauli is text like "Z0 Z1". */
SG_API sg_status sg_ground_state_expect(const sg_ground_state *gs, const char *pauli, double *value);
SG_API sg_status sg_ground_state_renyi2(const sg_ground_state *gs, const int *sites, size_t n_sites, double *value);
SG_API void sg_ground_state_free(sg_ground_state *gs);

/* Trained model. */
SG_API sg_status sg_model_load(const char *checkpoint_path, sg_model **out);
SG_API sg_status sg_model_info(const sg_model *model, int *n_qubits, int *param_dim, int *precision_bits);
/* basis is N characters from "XYZ"; outcomes receives N values of +1 or -1. */
SG_API sg_status sg_model_sample(const sg_model *model, const double *params, const char *basis, uint64_t seed,
                          int8_t *outcomes);
SG_API void sg_model_free(sg_model *model);

#ifdef __cplusplus
}
#endif

#endif /* SHADOWGPT_SHADOWGPT_H */
