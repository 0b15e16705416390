#ifndef PERMIX_H
#define PERMIX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PermixStatus {
  PERMIX_STATUS_OK = 0,
  PERMIX_STATUS_NULL_POINTER = 1,
  PERMIX_STATUS_INVALID_UTF8 = 2,
  PERMIX_STATUS_PARSE = 3,
  PERMIX_STATUS_INVALID = 4,
  PERMIX_STATUS_DIMENSION = 5,
  PERMIX_STATUS_ZERO_MARGINAL = 6,
  PERMIX_STATUS_CAP = 7,
  PERMIX_STATUS_ILL_CONDITIONED = 8,
  PERMIX_STATUS_PANIC = 9,
} PermixStatus;

// Opaque list of component distributions on a common finite alphabet.
typedef struct PermixComponents PermixComponents;

// Upper bounds, spectral lower bound and (when computable) the exact value.
// Unavailable entries are `NaN`; infinite bounds are `INFINITY`.
typedef struct PermixBounds {
  double exact_chi2;
  double ub1;
  double ub2;
  double ub3;
  double lower_spectral;
} PermixBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library; static, do not free.
const char *permix_version(void);

// Copy of the last error message on this thread, or null when the last call
// succeeded. Free with [`permix_string_free`].
char *permix_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library that was not freed yet.
void permix_string_free(char *s);

// Parses `{"alphabet_size": K, "components": [[...], ...]}` into a new handle.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` valid for writing a
// pointer. On success `*out` owns a handle to release with
// [`permix_components_free`]; on failure `*out` is set to null.
enum PermixStatus permix_components_from_json(const char *json, struct PermixComponents **out);

// # Safety
// `h` must be null or a handle from [`permix_components_from_json`] that was
// not freed yet.
void permix_components_free(struct PermixComponents *h);

// Number of components and alphabet size.
//
// # Safety
// `h` must be a live handle; `n` and `k` must be valid for writes.
enum PermixStatus permix_components_shape(const struct PermixComponents *h, size_t *n, size_t *k);

// Exact chi-square between the permutation mixture and the i.i.d. mixture,
// through the permanent of the mixture matrix.
//
// # Safety
// `h` must be a live handle and `out` valid for a write.
enum PermixStatus permix_chi2_exact(const struct PermixComponents *h, double *out);

// Same quantity by enumerating all `K^n` sequences; fails with `Cap` when too large.
//
// # Safety
// `h` must be a live handle and `out` valid for a write.
enum PermixStatus permix_chi2_bruteforce(const struct PermixComponents *h, double *out);

// Chi-square mutual information of the uniform prior over the components.
//
// # Safety
// `h` must be a live handle and `out` valid for a write.
enum PermixStatus permix_instance_capacity(const struct PermixComponents *h, double *out);

// Bounds evaluated with the instance's own capacity, singularity and diameter.
//
// # Safety
// `h` must be a live handle and `out` valid for a write.
enum PermixStatus permix_bounds_evaluate(const struct PermixComponents *h,
                                         struct PermixBounds *out);

// Upper bounds from scalar functionals alone; `exact_chi2` and
// `lower_spectral` are set to `NaN`.
//
// # Safety
// `out` must be valid for a write.
enum PermixStatus permix_main_bounds(size_t n,
                                     double c,
                                     double delta,
                                     double d,
                                     struct PermixBounds *out);

// Permanent of the row-major `n x n` matrix at `data`.
//
// # Safety
// `data` must point to `n * n` readable doubles and `out` be valid for a write.
enum PermixStatus permix_permanent(const double *data, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERMIX_H */
