#ifndef QDISCORD_H
#define QDISCORD_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QdStatus {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_DIMENSION_MISMATCH = 2,
  QD_STATUS_NOT_HERMITIAN = 3,
  QD_STATUS_NOT_PSD = 4,
  QD_STATUS_INVALID_TRACE = 5,
  QD_STATUS_RANK_DEFICIENT = 6,
  QD_STATUS_INVALID_PARAMETER = 7,
  QD_STATUS_INVARIANT = 8,
  QD_STATUS_PARSE = 9,
  QD_STATUS_INTERNAL = 10,
} QdStatus;

/**
 * Opaque bipartite density matrix.
 */
typedef struct QdState QdState;

/**
 * Linear-entropy classical correlation and the axis of its projective measurement.
 */
typedef struct QdCorrelation {
  double i2;
  double lambda_max;
  double axis[3];
} QdCorrelation;

/**
 * Discord bound; `q_numerical` and `delta` are NaN unless the numerical optimizer ran.
 */
typedef struct QdDiscord {
  double mutual_info;
  double i2;
  double q_upper_bound;
  double q_numerical;
  double delta;
} QdDiscord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a state of dimensions `d_a x d_b` from row-major real and imaginary parts,
 * each of length `(d_a d_b)^2`.
 *
 * # Safety
 * `re` and `im` must point to `(d_a * d_b)^2` readable doubles and `out` must be writable.
 */
enum QdStatus qd_state_new(size_t d_a,
                           size_t d_b,
                           const double *re,
                           const double *im,
                           struct QdState **out);

/**
 * Parses a state spec or a density matrix from NUL-terminated JSON. States with more than
 * two subsystems are split as (all but the last, last).
 *
 * # Safety
 * `json` must be a valid C string and `out` must be writable.
 */
enum QdStatus qd_state_from_json(const char *json, struct QdState **out);

/**
 * # Safety
 * `state` must be null or a handle from this library that has not been freed.
 */
void qd_state_free(struct QdState *state);

/**
 * Total Hilbert-space dimension, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t qd_state_dim(const struct QdState *state);

/**
 * `cutoff <= 0` selects the default relative eigenvalue cutoff.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum QdStatus qd_classical_correlation(const struct QdState *state,
                                       double cutoff,
                                       struct QdCorrelation *out);

/**
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum QdStatus qd_discord_bound(const struct QdState *state, double cutoff, struct QdDiscord *out);

/**
 * Bound plus numerical minimization on an `n_theta x n_phi` grid refined to `tol`.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum QdStatus qd_discord_numerical(const struct QdState *state,
                                   size_t n_theta,
                                   size_t n_phi,
                                   double tol,
                                   struct QdDiscord *out);

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *qd_last_error(void);

/**
 * Library version as a static C string.
 */
const char *qd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDISCORD_H */
