#ifndef PABA_H
#define PABA_H

/* Generated by cbindgen from the paba-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Allocation scheme selector, matching the simulator's four schemes.
 */
typedef enum PabaScheme {
  /**
   * Proportional blocks, equal bandwidth.
   */
  PABA_SCHEME_BASELINE = 0,
  /**
   * Optimal blocks under equal bandwidth.
   */
  PABA_SCHEME_BANDWIDTH_AWARE_PARAMS = 1,
  /**
   * Optimal bandwidth under proportional blocks.
   */
  PABA_SCHEME_PARAM_AWARE_BANDWIDTH = 2,
  /**
   * Blocks and bandwidth optimized together.
   */
  PABA_SCHEME_JOINT = 3,
} PabaScheme;

/**
 * Result of every fallible call. Non-`OK` statuses leave a human-readable
 * explanation in `paba_last_error_message`.
 */
typedef enum PabaStatus {
  PABA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PABA_STATUS_NULL_POINTER = 1,
  /**
   * An argument violated a documented precondition.
   */
  PABA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The problem has no feasible allocation under the given inputs.
   */
  PABA_STATUS_INFEASIBLE = 3,
  /**
   * An iterative solver exhausted its budget before converging.
   */
  PABA_STATUS_SOLVER_FAILURE = 4,
  /**
   * An internal invariant was violated; the library caught the panic.
   */
  PABA_STATUS_PANIC = 5,
} PabaStatus;

/**
 * Opaque solved-allocation handle.
 */
typedef struct PabaAllocation PabaAllocation;

/**
 * Opaque problem builder handle.
 */
typedef struct PabaProblem PabaProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on the calling thread. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *paba_last_error_message(void);

/**
 * Creates a problem from the system-level scalars. Returns null (with the
 * error message set) when a scalar is out of range. Free the handle with
 * `paba_problem_free`.
 */
struct PabaProblem *paba_problem_new(double bandwidth_hz,
                                     double ap_tx_power_w,
                                     double worker_tx_power_w,
                                     double noise_variance_w,
                                     double bits_per_param,
                                     double bits_per_gradient,
                                     uint64_t total_params,
                                     double server_update_time_s,
                                     double ops_per_param_sample);

/**
 * Appends an empty group and returns its index, or -1 on a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle from `paba_problem_new`.
 */
int64_t paba_problem_add_group(struct PabaProblem *problem);

/**
 * Appends a worker (compute capacity, data load, and channel power gains)
 * to an existing group.
 *
 * # Safety
 * `problem` must be null or a live handle from `paba_problem_new`.
 */
enum PabaStatus paba_problem_add_worker(struct PabaProblem *problem,
                                        size_t group,
                                        double cpu_freq_hz,
                                        uint64_t data_samples,
                                        double downlink_gain,
                                        double uplink_gain);

/**
 * Overrides the solver's numerical controls (defaults apply otherwise).
 *
 * # Safety
 * `problem` must be null or a live handle from `paba_problem_new`.
 */
enum PabaStatus paba_problem_set_tolerances(struct PabaProblem *problem,
                                            double bisect_tol_rel,
                                            double kkt_tol,
                                            uint64_t max_iters);

/**
 * Solves the problem under the given scheme. On `OK`, `*out` owns a new
 * allocation handle; on failure `*out` is null.
 *
 * # Safety
 * `problem` must be null or a live handle from `paba_problem_new`; `out`
 * must be null or valid for writing one pointer.
 */
enum PabaStatus paba_solve(const struct PabaProblem *problem,
                           enum PabaScheme scheme,
                           struct PabaAllocation **out);

/**
 * Number of groups in a solved allocation; 0 on a null handle.
 *
 * # Safety
 * `alloc` must be null or a live handle from `paba_solve`.
 */
size_t paba_allocation_num_groups(const struct PabaAllocation *alloc);

/**
 * Number of workers in one group; 0 on a null handle or bad index.
 *
 * # Safety
 * `alloc` must be null or a live handle from `paba_solve`.
 */
size_t paba_allocation_num_workers(const struct PabaAllocation *alloc, size_t group);

/**
 * Block length (parameters) assigned to one group.
 *
 * # Safety
 * `alloc` must be null or a live handle from `paba_solve`; `out` must be
 * null or valid for writes.
 */
enum PabaStatus paba_allocation_block_len(const struct PabaAllocation *alloc,
                                          size_t group,
                                          uint64_t *out);

/**
 * Uplink bandwidth fraction assigned to one worker.
 *
 * # Safety
 * `alloc` must be null or a live handle from `paba_solve`; `out` must be
 * null or valid for writes.
 */
enum PabaStatus paba_allocation_bw_ratio(const struct PabaAllocation *alloc,
                                         size_t group,
                                         size_t worker,
                                         double *out);

/**
 * Round latency of the allocation in seconds; NaN on a null handle.
 *
 * # Safety
 * `alloc` must be null or a live handle from `paba_solve`.
 */
double paba_allocation_round_latency_s(const struct PabaAllocation *alloc);

/**
 * Frees a problem handle; null is a no-op.
 *
 * # Safety
 * `problem` must be null or a handle from `paba_problem_new` that has not
 * been freed already.
 */
void paba_problem_free(struct PabaProblem *problem);

/**
 * Frees an allocation handle; null is a no-op.
 *
 * # Safety
 * `alloc` must be null or a handle from `paba_solve` that has not been
 * freed already.
 */
void paba_allocation_free(struct PabaAllocation *alloc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PABA_H */
