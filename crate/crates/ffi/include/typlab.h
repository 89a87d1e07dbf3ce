#ifndef TYPLAB_H
#define TYPLAB_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TyplabStatus {
  TYPLAB_STATUS_OK = 0,
  TYPLAB_STATUS_NULL_POINTER = 1,
  TYPLAB_STATUS_INVALID_UTF8 = 2,
  TYPLAB_STATUS_INVALID_SPEC = 3,
  TYPLAB_STATUS_PARAM_OUT_OF_RANGE = 4,
  TYPLAB_STATUS_DOMAIN_VIOLATION = 5,
  TYPLAB_STATUS_INVALID_ARGUMENT = 6,
  TYPLAB_STATUS_BUFFER_TOO_SMALL = 7,
  TYPLAB_STATUS_NO_CONVERGENCE = 8,
  TYPLAB_STATUS_ANALYSIS_FAILED = 9,
  TYPLAB_STATUS_PANIC = 10,
} TyplabStatus;

/**
 * A piecewise-constant invariant density.
 */
typedef struct TyplabDensity TyplabDensity;

/**
 * A validated family.
 */
typedef struct TyplabFamily TyplabFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *typlab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *typlab_version(void);

/**
 * Builds a family from a JSON description or a preset name
 * (`"beta"`, `"markov"`, `"skewtent"`).
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TyplabStatus typlab_family_new(const char *spec, struct TyplabFamily **out);

/**
 * # Safety
 * `family` must be null or a handle from [`typlab_family_new`], freed once.
 */
void typlab_family_free(struct TyplabFamily *family);

/**
 * # Safety
 * Pointers must be valid.
 */
enum TyplabStatus typlab_family_param_interval(const struct TyplabFamily *family,
                                               double *lo,
                                               double *hi);

/**
 * `T_a(x)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TyplabStatus typlab_family_evaluate(const struct TyplabFamily *family,
                                         double a,
                                         double x,
                                         double *y);

/**
 * Orbit `x_0..x_n` from `x0` and its parameter derivatives from `dx0`.
 * Both buffers need `n + 1` entries; `param_derivs` may be null.
 *
 * # Safety
 * `points` must hold `len` doubles, as must `param_derivs` when non-null.
 */
enum TyplabStatus typlab_family_orbit(const struct TyplabFamily *family,
                                      double a,
                                      double x0,
                                      double dx0,
                                      size_t n,
                                      double *points,
                                      double *param_derivs,
                                      size_t len);

/**
 * `Λ₀`, the first `j0` with `|D_a T^j0(0)| > Λ₀` (-1 if none up to
 * `j_max`) and that derivative, for a skew tent family.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TyplabStatus typlab_transversality(const struct TyplabFamily *family,
                                        double a0,
                                        size_t j_max,
                                        double *lambda0,
                                        int64_t *j0,
                                        double *deriv);

/**
 * Ulam estimate of the invariant density at `a`.
 *
 * # Safety
 * `family` must be a live handle and `out` a valid pointer.
 */
enum TyplabStatus typlab_density_new(const struct TyplabFamily *family,
                                     double a,
                                     size_t bins,
                                     double tol,
                                     size_t max_iter,
                                     struct TyplabDensity **out);

/**
 * # Safety
 * `density` must be null or a handle from [`typlab_density_new`], freed once.
 */
void typlab_density_free(struct TyplabDensity *density);

/**
 * Number of bins, 0 for a null handle.
 *
 * # Safety
 * `density` must be null or a live handle.
 */
size_t typlab_density_bins(const struct TyplabDensity *density);

/**
 * Copies the per-bin values and the domain endpoints.
 *
 * # Safety
 * `values` must hold `len` doubles; `lo` and `hi` must be valid.
 */
enum TyplabStatus typlab_density_values(const struct TyplabDensity *density,
                                        double *values,
                                        size_t len,
                                        double *lo,
                                        double *hi);

/**
 * Kolmogorov distance between `samples` and the density.
 *
 * # Safety
 * `samples` must hold `len` doubles and `out` must be valid.
 */
enum TyplabStatus typlab_kolmogorov_distance(const struct TyplabDensity *density,
                                             const double *samples,
                                             size_t len,
                                             double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TYPLAB_H */
