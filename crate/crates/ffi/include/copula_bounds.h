/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef COPULA_BOUNDS_H
#define COPULA_BOUNDS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_INPUT = 2,
  CB_STATUS_INVALID_PRESCRIPTION = 3,
  CB_STATUS_PARSE = 4,
  CB_STATUS_NUMERICAL = 5,
  CB_STATUS_PANIC = 6,
} CbStatus;

typedef enum CbScale {
  CB_SCALE_COPULA = 0,
  CB_SCALE_SURVIVAL = 1,
} CbScale;

typedef enum CbSide {
  CB_SIDE_LOWER = 0,
  CB_SIDE_UPPER = 1,
} CbSide;

/**
 * Opaque prescription with its two bound functions.
 */
typedef struct CbPrescription CbPrescription;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a prescription from `count` points stored row-major in `points`
 * (`count * dim` values) and their prescribed `values`.
 *
 * # Safety
 * `points` and `values` must be valid for the given lengths and `out` must
 * be writable.
 */
enum CbStatus cb_prescription_new(size_t dim,
                                  enum CbScale scale,
                                  const double *points,
                                  const double *values,
                                  size_t count,
                                  struct CbPrescription **out);

/**
 * Parses a prescription from CSV text (`d,side` header, then rows).
 *
 * # Safety
 * `csv` must be a NUL-terminated string and `out` writable.
 */
enum CbStatus cb_prescription_from_csv(const char *csv, struct CbPrescription **out);

/**
 * Releases a prescription; null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void cb_prescription_free(struct CbPrescription *p);

/**
 * Dimension of the prescription, or 0 for null.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t cb_prescription_dim(const struct CbPrescription *p);

/**
 * Evaluates both bounds at `u`.
 *
 * # Safety
 * `u` must hold `len` values; `lower` and `upper` must be writable.
 */
enum CbStatus cb_bounds_eval(const struct CbPrescription *p,
                             const double *u,
                             size_t len,
                             double *lower,
                             double *upper);

/**
 * Volume of one bound over the box `[lo, hi]`.
 *
 * # Safety
 * `lo` and `hi` must hold `len` values; `out` must be writable.
 */
enum CbStatus cb_box_volume(const struct CbPrescription *p,
                            enum CbSide which,
                            const double *lo,
                            const double *hi,
                            size_t len,
                            double *out);

/**
 * Searches for a negative-volume witness inside the gaps
 * `(s_l, s_l + eps_l)` on coordinates `indices`. On success `found` is 1
 * and `u_out` (3 values) and `volume` describe the witness; otherwise
 * `found` is 0.
 *
 * # Safety
 * `indices`, `s`, `eps` and `u_out` must hold 3 values; `found` and
 * `volume` must be writable.
 */
enum CbStatus cb_certify(const struct CbPrescription *p,
                         enum CbSide which,
                         const size_t *indices,
                         const double *s,
                         const double *eps,
                         int32_t *found,
                         double *u_out,
                         double *volume);

/**
 * `P(Z_1 <= h, Z_2 <= k)` for standard normals with correlation `rho`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CbStatus cb_bivariate_normal_cdf(double h, double k, double rho, double *out);

/**
 * `P(Z_1 <= h, Z_2 <= k, Z_3 <= l)`; `corr` holds `r12, r13, r23`.
 *
 * # Safety
 * `corr` must hold 3 values and `out` must be writable.
 */
enum CbStatus cb_trivariate_normal_cdf(double h,
                                       double k,
                                       double l,
                                       const double *corr,
                                       double *out);

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *cb_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPULA_BOUNDS_H */
