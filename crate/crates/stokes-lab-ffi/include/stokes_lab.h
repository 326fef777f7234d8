#ifndef STOKES_LAB_H
#define STOKES_LAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the nonzero values match the CLI exit codes where they overlap.
 */
typedef enum StokesStatus {
  STOKES_STATUS_OK = 0,
  STOKES_STATUS_NULL_POINTER = 1,
  STOKES_STATUS_CONFIG = 2,
  STOKES_STATUS_MATH_DOMAIN = 3,
  STOKES_STATUS_VERIFICATION = 4,
  STOKES_STATUS_BUFFER_TOO_SMALL = 5,
  STOKES_STATUS_PANIC = 6,
} StokesStatus;

/**
 * Square complex matrix owned by the library.
 */
typedef struct StokesMatrix StokesMatrix;

typedef struct StokesComplex {
  double re;
  double im;
} StokesComplex;

/**
 * Diagnostics of a numeric Stokes extraction.
 */
typedef struct StokesNumericInfo {
  double anchor_radius;
  double ode_tol;
  /**
   * max |S(R) − S(1.4R)| over S₊ and S₋.
   */
  double disc_err;
  double anchor_err;
  size_t truncation_order;
} StokesNumericInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *stokes_last_error(void);

/**
 * Closed-form S₊ of the classical system for the row-major n×n matrix `a`.
 *
 * # Safety
 * `a` must point to n·n values and `out` must be writable.
 */
enum StokesStatus stokes_classical_plus(const struct StokesComplex *a,
                                        size_t n,
                                        struct StokesMatrix **out);

/**
 * Numeric S₊ of the classical system; `radius <= 0` picks the automatic radius.
 *
 * # Safety
 * As [`stokes_classical_plus`]; `info` may be null.
 */
enum StokesStatus stokes_classical_numeric(const struct StokesComplex *a,
                                           size_t n,
                                           double radius,
                                           struct StokesMatrix **out,
                                           struct StokesNumericInfo *info);

/**
 * Closed-form S_{h+} on L(λ) as an (n·dim)×(n·dim) matrix, index k·dim + p.
 *
 * # Safety
 * `weight` must point to `len` values and `out` must be writable.
 */
enum StokesStatus stokes_quantum_plus(const int64_t *weight,
                                      size_t len,
                                      double h,
                                      struct StokesMatrix **out);

/**
 * Numeric S_{h+} on L(λ); `radius <= 0` picks the automatic radius.
 *
 * # Safety
 * As [`stokes_quantum_plus`]; `info` may be null.
 */
enum StokesStatus stokes_quantum_numeric(const int64_t *weight,
                                         size_t len,
                                         double h,
                                         double radius,
                                         struct StokesMatrix **out,
                                         struct StokesNumericInfo *info);

/**
 * Run the representation identity suite; `passed` receives 1 if every check holds.
 *
 * # Safety
 * `weight` must point to `len` values; `passed` and `count` must be writable.
 */
enum StokesStatus stokes_rep_check(const int64_t *weight,
                                   size_t len,
                                   int32_t *passed,
                                   size_t *count);

/**
 * Γ(z).
 *
 * # Safety
 * `out` must be writable.
 */
enum StokesStatus stokes_gamma(struct StokesComplex z, struct StokesComplex *out);

/**
 * Side length of a matrix handle (0 for null).
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t stokes_matrix_dim(const struct StokesMatrix *m);

/**
 * Copy the entries row-major into `buf`, which holds `len` values.
 *
 * # Safety
 * `m` must be a live handle and `buf` must have room for `len` values.
 */
enum StokesStatus stokes_matrix_copy(const struct StokesMatrix *m,
                                     struct StokesComplex *buf,
                                     size_t len);

/**
 * Largest entry modulus of `a − b`; used by callers to compare closed and numeric results.
 *
 * # Safety
 * Both must be live handles and `out` writable.
 */
enum StokesStatus stokes_matrix_max_diff(const struct StokesMatrix *a,
                                         const struct StokesMatrix *b,
                                         double *out);

/**
 * Release a handle; null is ignored.
 *
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void stokes_matrix_free(struct StokesMatrix *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOKES_LAB_H */
