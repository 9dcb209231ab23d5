#ifndef MPMAB_H
#define MPMAB_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpmabStatus {
  MPMAB_STATUS_OK = 0,
  MPMAB_STATUS_NULL_POINTER = 1,
  MPMAB_STATUS_INVALID_ARGUMENT = 2,
  MPMAB_STATUS_INVALID_ENVIRONMENT = 3,
  MPMAB_STATUS_INFEASIBLE = 4,
  MPMAB_STATUS_UNKNOWN_NAME = 5,
  MPMAB_STATUS_CONFIG = 6,
  MPMAB_STATUS_IO = 7,
  MPMAB_STATUS_BUFFER_TOO_SMALL = 8,
  MPMAB_STATUS_UNSUPPORTED = 9,
  MPMAB_STATUS_PANIC = 10,
} MpmabStatus;

/**
 * Ground-truth environment.
 */
typedef struct MpmabEnv MpmabEnv;

/**
 * Aggregated regret traces of one experiment.
 */
typedef struct MpmabResult MpmabResult;

/**
 * One policy interacting with its own copy of an environment.
 */
typedef struct MpmabSimulation MpmabSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mpmab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mpmab_version(void);

/**
 * Built-in scenario by name (`bernoulli9`, `gaussian9`, `bs20`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MpmabStatus mpmab_env_builtin(const char *name, struct MpmabEnv **out);

/**
 * Environment from arm arrays of length `num_arms`. `variances` may be null
 * for an all-Bernoulli environment; otherwise a positive entry makes that arm
 * Gaussian and a non-positive entry keeps it Bernoulli.
 *
 * # Safety
 * Array pointers must reference `num_arms` readable elements; `out` must be
 * valid.
 */
enum MpmabStatus mpmab_env_new(const double *means,
                               const uint32_t *capacities,
                               const double *variances,
                               size_t num_arms,
                               uint32_t plays,
                               struct MpmabEnv **out);

/**
 * # Safety
 * `env` must come from this library and not be used afterwards. Null is a
 * no-op.
 */
void mpmab_env_free(struct MpmabEnv *env);

/**
 * # Safety
 * `env` must be a live handle; out pointers must be valid.
 */
enum MpmabStatus mpmab_env_shape(const struct MpmabEnv *env, size_t *num_arms, uint32_t *plays);

/**
 * Writes the optimal allocation into `counts` (length `len` at least the arm
 * count) and its expected reward into `reward`.
 *
 * # Safety
 * `env` must be live; `counts` must hold `len` writable entries.
 */
enum MpmabStatus mpmab_env_optimal_action(const struct MpmabEnv *env,
                                          uint32_t *counts,
                                          size_t len,
                                          double *reward);

/**
 * Expected reward `f(a)` of an allocation.
 *
 * # Safety
 * `env` must be live; `counts` must hold `len` readable entries.
 */
enum MpmabStatus mpmab_env_expected_reward(const struct MpmabEnv *env,
                                           const uint32_t *counts,
                                           size_t len,
                                           double *out);

/**
 * Runs the experiment described by a TOML document.
 *
 * # Safety
 * `config_toml` must be NUL-terminated; `out` must be valid.
 */
enum MpmabStatus mpmab_run_config(const char *config_toml, struct MpmabResult **out);

/**
 * # Safety
 * `result` must come from this library and not be used afterwards. Null is
 * a no-op.
 */
void mpmab_result_free(struct MpmabResult *result);

/**
 * Number of policies that produced a trace.
 *
 * # Safety
 * `result` must be live; `out` valid.
 */
enum MpmabStatus mpmab_result_num_traces(const struct MpmabResult *result, size_t *out);

/**
 * Number of policies that could not run.
 *
 * # Safety
 * `result` must be live; `out` valid.
 */
enum MpmabStatus mpmab_result_num_failures(const struct MpmabResult *result, size_t *out);

/**
 * Label of trace `index`; the string lives as long as the result handle.
 *
 * # Safety
 * `result` must be live; `out` valid.
 */
enum MpmabStatus mpmab_result_label(const struct MpmabResult *result,
                                    size_t index,
                                    const char **out);

/**
 * Length of trace `index`.
 *
 * # Safety
 * `result` must be live; `out` valid.
 */
enum MpmabStatus mpmab_result_trace_len(const struct MpmabResult *result,
                                        size_t index,
                                        size_t *out);

/**
 * Copies trace `index` into four caller buffers of length `len`.
 *
 * # Safety
 * `result` must be live; every buffer must hold `len` writable entries.
 */
enum MpmabStatus mpmab_result_trace(const struct MpmabResult *result,
                                    size_t index,
                                    uint64_t *t,
                                    double *mean_regret,
                                    double *std_regret,
                                    double *optimal_freq,
                                    size_t len);

/**
 * Writes the CSV at `path` and the JSON sidecar next to it.
 *
 * # Safety
 * `result` must be live; `path` NUL-terminated.
 */
enum MpmabStatus mpmab_result_write(const struct MpmabResult *result, const char *path);

/**
 * Starts a single-replication simulation of policy `policy_name` on a copy
 * of `env`, seeded like replication `rep` of an experiment with base seed
 * `seed`.
 *
 * # Safety
 * `env` must be live; `policy_name` NUL-terminated; `out` valid.
 */
enum MpmabStatus mpmab_simulation_new(const struct MpmabEnv *env,
                                      const char *policy_name,
                                      uint64_t horizon,
                                      uint64_t seed,
                                      uint64_t rep,
                                      struct MpmabSimulation **out);

/**
 * Advances one slot: the policy acts, the environment answers, the policy
 * learns. Writes the action into `counts` and the cumulative pseudo-regret
 * into `regret`.
 *
 * # Safety
 * `sim` must be live; `counts` must hold `len` writable entries; `regret`
 * valid.
 */
enum MpmabStatus mpmab_simulation_step(struct MpmabSimulation *sim,
                                       uint32_t *counts,
                                       size_t len,
                                       double *regret);

/**
 * # Safety
 * `sim` must come from this library and not be used afterwards. Null is a
 * no-op.
 */
void mpmab_simulation_free(struct MpmabSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPMAB_H */
