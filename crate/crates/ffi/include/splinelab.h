#ifndef SPLINELAB_H
#define SPLINELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible function.
 */
typedef enum SplStatus {
  SPL_STATUS_OK = 0,
  SPL_STATUS_NULL_POINTER = 1,
  SPL_STATUS_INVALID_ARGUMENT = 2,
  SPL_STATUS_INVALID_KNOTS = 3,
  SPL_STATUS_OUT_OF_RANGE = 4,
  SPL_STATUS_DIMENSION_MISMATCH = 5,
  SPL_STATUS_NUMERICAL = 6,
  SPL_STATUS_CAP_EXCEEDED = 7,
  SPL_STATUS_PRECONDITION_VIOLATED = 8,
  SPL_STATUS_BUFFER_TOO_SMALL = 9,
  SPL_STATUS_PANIC = 10,
} SplStatus;

/*
 A Bohr decomposition of the unit square.
 */
typedef struct SplBohr SplBohr;

/*
 A knot vector with its order.
 */
typedef struct SplKnots SplKnots;

/*
 Coefficients of a tensor-product spline.
 */
typedef struct SplSpline SplSpline;

/*
 Scalar callback `f(x, d, user)` evaluated at a point of `[0,1]^d`.
 */
typedef double (*SplField)(const double *x, size_t d, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next failing call on the same thread.
 */
const char *spl_last_error_message(void);

/*
 Clears the last error of this thread.
 */
void spl_clear_error(void);

/*
 Library version as a static nul-terminated string.
 */
const char *spl_version(void);

/*
 Builds a knot vector of order `k` from the full sequence `knots[0..len]`.

 # Safety
 `knots` must point to `len` doubles and `out` must be writable.
 */
enum SplStatus spl_knots_new(const double *knots, size_t len, size_t k, struct SplKnots **out);

/*
 Uniform open knot vector with `cells` cells and order `k`.

 # Safety
 `out` must be writable.
 */
enum SplStatus spl_knots_uniform(size_t cells, size_t k, struct SplKnots **out);

/*
 Releases a knot vector; null is ignored.

 # Safety
 `kv` must come from `spl_knots_new` or `spl_knots_uniform` and not be used afterwards.
 */
void spl_knots_free(struct SplKnots *kv);

/*
 Number of basis functions, or 0 for a null handle.

 # Safety
 `kv` must be a live handle or null.
 */
size_t spl_knots_basis_count(const struct SplKnots *kv);

/*
 Evaluates the `k` active B-splines at `x` into `values[0..k]` and writes
 the index of the first one to `first`.

 # Safety
 `values` must hold `len` doubles and `first` must be writable.
 */
enum SplStatus spl_knots_eval_basis(const struct SplKnots *kv,
                                    double x,
                                    double *values,
                                    size_t len,
                                    size_t *first);

/*
 Fits `max |G⁻¹_ij| ≈ K γ^r` over `r = |i - j|` for the Gram matrix of `kv`.

 # Safety
 `gamma_hat` and `k_hat` must be writable.
 */
enum SplStatus spl_gram_decay(const struct SplKnots *kv, double *gamma_hat, double *k_hat);

/*
 Lebesgue constant of the projection on the mesh `axes[0..d]`, sampled
 with `density` points per cell and axis.

 # Safety
 `axes` must hold `d` live handles and `out` must be writable.
 */
enum SplStatus spl_lebesgue_constant(const struct SplKnots *const *axes,
                                     size_t d,
                                     size_t density,
                                     double *out);

/*
 Projects a named test function (`const`, `x`, `xy`, `x2`, `sin2pi`,
 `runge`, `abs`) onto the spline space of `axes[0..d]`.

 # Safety
 `axes` must hold `d` live handles, `name` must be a nul-terminated
 string and `out` must be writable.
 */
enum SplStatus spl_project_named(const struct SplKnots *const *axes,
                                 size_t d,
                                 const char *name,
                                 struct SplSpline **out);

/*
 Projects the callback `f` onto the spline space of `axes[0..d]`.
 `f` may be called concurrently from several threads.

 # Safety
 `axes` must hold `d` live handles, `f` must be safe to call with `user`
 from any thread, and `out` must be writable.
 */
enum SplStatus spl_project_fn(const struct SplKnots *const *axes,
                              size_t d,
                              SplField f,
                              void *user,
                              struct SplSpline **out);

/*
 Releases a spline; null is ignored.

 # Safety
 `s` must come from a projection call and not be used afterwards.
 */
void spl_spline_free(struct SplSpline *s);

/*
 Number of coefficients, or 0 for a null handle.

 # Safety
 `s` must be a live handle or null.
 */
size_t spl_spline_coeff_count(const struct SplSpline *s);

/*
 Copies the coefficients in row-major order (last axis fastest).

 # Safety
 `buf` must hold `len` doubles.
 */
enum SplStatus spl_spline_coeffs(const struct SplSpline *s, double *buf, size_t len);

/*
 Evaluates the spline at `point[0..d]`.

 # Safety
 `point` must hold `d` doubles and `out` must be writable.
 */
enum SplStatus spl_spline_eval(const struct SplSpline *s,
                               const double *point,
                               size_t d,
                               double *out);

/*
 Remez constant `c_k` used by the pointwise laboratory.

 # Safety
 `out` must be writable.
 */
enum SplStatus spl_remez_constant(size_t k, double *out);

/*
 Bohr decomposition of the unit square for amplitude `alpha`.

 # Safety
 `out` must be writable.
 */
enum SplStatus spl_bohr_new(double alpha, struct SplBohr **out);

/*
 Releases a decomposition; null is ignored.

 # Safety
 `b` must come from `spl_bohr_new` and not be used afterwards.
 */
void spl_bohr_free(struct SplBohr *b);

/*
 Number of group generations, or 0 for a null handle.

 # Safety
 `b` must be a live handle or null.
 */
size_t spl_bohr_generations(const struct SplBohr *b);

/*
 `∫ ψ` over the unit square.

 # Safety
 `out` must be writable.
 */
enum SplStatus spl_bohr_mass(const struct SplBohr *b, double *out);

/*
 `ψ(x, y)`.

 # Safety
 `out` must be writable.
 */
enum SplStatus spl_bohr_eval(const struct SplBohr *b, double x, double y, double *out);

/*
 Checks the properties of `ψ` exactly; `budget` rectangles are checked
 exhaustively and `samples` random ones beyond it.

 # Safety
 `all_pass` must be writable.
 */
enum SplStatus spl_bohr_verify(const struct SplBohr *b,
                               uint64_t budget,
                               size_t samples,
                               uint64_t seed,
                               bool *all_pass);

/*
 Writes the JSON description (rectangles listed up to `cap`) into `buf`
 with a terminating nul. `needed` receives the required size including
 the nul; pass a null `buf` to query it.

 # Safety
 `buf` must hold `len` bytes or be null; `needed` must be writable or null.
 */
enum SplStatus spl_bohr_to_json(const struct SplBohr *b,
                                size_t cap,
                                char *buf,
                                size_t len,
                                size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLINELAB_H */
