#ifndef GAUSSCHAN_H
#define GAUSSCHAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum GcStatus {
  GC_STATUS_OK = 0,
  GC_STATUS_NULL_POINTER = 1,
  GC_STATUS_INVALID_INPUT = 2,
  GC_STATUS_INTERNAL = 3,
  GC_STATUS_PANIC = 4,
} GcStatus;

/**
 * Opaque covariance-matrix handle.
 */
typedef struct GcCovariance GcCovariance;

/**
 * Channel quantities of one covariance matrix. Unavailable values are NaN.
 */
typedef struct GcReport {
  double lambda;
  double lambda_ta;
  double witness;
  double log_negativity;
  double q_lower_bound;
  double fidelity;
  double purity;
  double key_rate;
  /**
   * 1 if the input satisfies the uncertainty principle.
   */
  int32_t physical;
  /**
   * 1 if the witness optimization reached its tolerance.
   */
  int32_t witness_converged;
} GcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a covariance matrix from 16 row-major doubles.
 *
 * # Safety
 * `values` must point to 16 doubles; `out` must be writable.
 */
enum GcStatus gc_covariance_new(const double *values, struct GcCovariance **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `cm` must come from this library and not be used afterwards.
 */
void gc_covariance_free(struct GcCovariance *cm);

/**
 * Copies the matrix into 16 row-major doubles.
 *
 * # Safety
 * `out` must have room for 16 doubles.
 */
enum GcStatus gc_covariance_get(const struct GcCovariance *cm, double *out);

/**
 * Smallest eigenvalue of the uncertainty-principle matrix.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GcStatus gc_state_condition(const struct GcCovariance *cm, double *out);

/**
 * Evaluates every channel quantity.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GcStatus gc_analyze(const struct GcCovariance *cm, struct GcReport *out);

/**
 * Adds the smallest identity multiple that makes the matrix physical.
 *
 * # Safety
 * Pointers must be valid; `delta` may be null.
 */
enum GcStatus gc_covariance_repair(const struct GcCovariance *cm,
                                   struct GcCovariance **out,
                                   double *delta);

/**
 * Checks complete positivity of the channel (X, Y). `margin` is the
 * smallest eigenvalue of the positivity condition and may be null.
 *
 * # Safety
 * `x` and `y` must point to 16 doubles each.
 */
enum GcStatus gc_channel_is_cp(const double *x,
                               const double *y,
                               int32_t *completely_positive,
                               double *margin);

/**
 * Applies the channel (X, Y) to a covariance matrix.
 *
 * # Safety
 * `x` and `y` must point to 16 doubles each; other pointers must be valid.
 */
enum GcStatus gc_channel_apply(const double *x,
                               const double *y,
                               const struct GcCovariance *cm,
                               struct GcCovariance **out);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *gc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSCHAN_H */
