#ifndef GITTINS_H
#define GITTINS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GittinsStatus {
  GITTINS_STATUS_OK = 0,
  GITTINS_STATUS_NULL_POINTER = 1,
  GITTINS_STATUS_INVALID_INPUT = 2,
  GITTINS_STATUS_INVALID_CONFIG = 3,
  GITTINS_STATUS_SHAPE_MISMATCH = 4,
  GITTINS_STATUS_PARSE = 5,
  GITTINS_STATUS_IO = 6,
  GITTINS_STATUS_EMPTY_SELECTION = 7,
  GITTINS_STATUS_OUT_OF_RANGE = 8,
  GITTINS_STATUS_PANIC = 9,
} GittinsStatus;

typedef enum GittinsAlgorithm {
  GITTINS_ALGORITHM_QGI = 0,
  GITTINS_ALGORITHM_RESTART = 1,
  GITTINS_ALGORITHM_QWI = 2,
} GittinsAlgorithm;

typedef struct GittinsArm GittinsArm;

typedef struct GittinsLearner GittinsLearner;

typedef struct GittinsSolution GittinsSolution;

/**
 * Cumulative update counts returned by [`gittins_learner_update`].
 */
typedef struct GittinsCounters {
  uint64_t q_updates;
  uint64_t index_updates;
  uint64_t steps;
} GittinsCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on this thread.
 */
const char *gittins_last_error(void);

/**
 * Builds an arm from an `n * n` row-major transition matrix and `n` rewards.
 *
 * # Safety
 * `transition` must point to `n * n` doubles, `reward` to `n` doubles and
 * `out` to writable storage for one pointer.
 */
enum GittinsStatus gittins_arm_new(size_t n,
                                   const double *transition,
                                   const double *reward,
                                   struct GittinsArm **out);

/**
 * The five-state toy arm.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum GittinsStatus gittins_arm_toy(struct GittinsArm **out);

/**
 * # Safety
 * `arm` must be null or a handle from `gittins_arm_new`/`gittins_arm_toy`
 * that has not been freed.
 */
void gittins_arm_free(struct GittinsArm *arm);

/**
 * Exact indices and retirement thresholds of `arm`.
 *
 * # Safety
 * `arm` must be a live arm handle and `out` writable storage for one pointer.
 */
enum GittinsStatus gittins_solve(const struct GittinsArm *arm,
                                 double gamma,
                                 double tol,
                                 struct GittinsSolution **out);

/**
 * # Safety
 * `sol` must be a live solution handle and `out` writable.
 */
enum GittinsStatus gittins_solution_num_states(const struct GittinsSolution *sol, size_t *out);

/**
 * Copies the per-state indices into `out`, which holds `len` doubles.
 *
 * # Safety
 * `sol` must be a live solution handle and `out` must point to `len` doubles.
 */
enum GittinsStatus gittins_solution_indices(const struct GittinsSolution *sol,
                                            double *out,
                                            size_t len);

/**
 * Copies the per-state retirement thresholds into `out`.
 *
 * # Safety
 * As for [`gittins_solution_indices`].
 */
enum GittinsStatus gittins_solution_retirement(const struct GittinsSolution *sol,
                                               double *out,
                                               size_t len);

/**
 * # Safety
 * `sol` must be null or a live solution handle.
 */
void gittins_solution_free(struct GittinsSolution *sol);

/**
 * Whether the two-timescale schedule passes the validator over `horizon` steps.
 *
 * # Safety
 * `passed` must be writable.
 */
enum GittinsStatus gittins_validate_two_timescale(double x,
                                                  double y,
                                                  uint64_t theta,
                                                  uint64_t kappa,
                                                  uint64_t phi,
                                                  uint64_t horizon,
                                                  bool *passed);

/**
 * A fresh learner with `tables` tables of `num_states` states.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum GittinsStatus gittins_learner_new(enum GittinsAlgorithm algo,
                                       size_t num_states,
                                       size_t tables,
                                       struct GittinsLearner **out);

/**
 * Applies one observed pull. QWI also takes the `num_passive` passive arms
 * as parallel `(table, state)` arrays; other algorithms ignore them.
 * Cumulative counters are written to `counters` when it is not null.
 *
 * # Safety
 * `learner` must be a live handle; `passive_tables` and `passive_states`
 * must each point to `num_passive` values (or be null when it is zero).
 */
enum GittinsStatus gittins_learner_update(struct GittinsLearner *learner,
                                          size_t table,
                                          size_t state,
                                          double reward,
                                          size_t next_state,
                                          const size_t *passive_tables,
                                          const size_t *passive_states,
                                          size_t num_passive,
                                          double alpha,
                                          double beta,
                                          double gamma,
                                          struct GittinsCounters *counters);

/**
 * Current index estimate for `(table, state)`.
 *
 * # Safety
 * `learner` must be a live handle and `out` writable.
 */
enum GittinsStatus gittins_learner_index(const struct GittinsLearner *learner,
                                         size_t table,
                                         size_t state,
                                         double gamma,
                                         double *out);

/**
 * # Safety
 * `learner` must be a live handle and `out` writable.
 */
enum GittinsStatus gittins_learner_tracked_entries(const struct GittinsLearner *learner,
                                                   size_t *out);

/**
 * # Safety
 * `learner` must be null or a live learner handle.
 */
void gittins_learner_free(struct GittinsLearner *learner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GITTINS_H */
