#ifndef FORGETTING_LAB_H
#define FORGETTING_LAB_H

/* Generated by cbindgen from forgetting-lab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum FlStatus {
  FlStatus_Ok = 0,
  FlStatus_InvalidArgument = 1,
  FlStatus_NumericalFailure = 2,
  FlStatus_NullPointer = 3,
  FlStatus_BudgetExceeded = 4,
} FlStatus;

/**
 * Opaque memoization context for the moment engine. Not thread-safe:
 * use one handle per thread.
 */
typedef struct FlMomentCache FlMomentCache;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static version string; do not free.
 */
const char *fl_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by one of the `*_str`
 * functions below (or null), and must not be used afterwards.
 */
void fl_string_free(char *s);

/**
 * Leading-order worst-case expected forgetting at `(alpha, beta)`.
 *
 * # Safety
 * `out` must point to a writable `double`.
 */
enum FlStatus fl_asymptotic_worst_case(double alpha, double beta, double *out);

/**
 * Highly overparameterized limit `alpha^2 (1 - alpha)^2`.
 *
 * # Safety
 * `out` must point to a writable `double`.
 */
enum FlStatus fl_extremal_overparam(double alpha, double *out);

/**
 * Exact worst-case expected forgetting as a double.
 *
 * # Safety
 * `out` must point to a writable `double`.
 */
enum FlStatus fl_exact_worst_case(uint64_t p, uint64_t d, uint64_t m, double *out);

/**
 * Exact worst-case expected forgetting as a reduced fraction
 * `"num/den"`; null on invalid parameters. Free with [`fl_string_free`].
 */
char *fl_exact_worst_case_str(uint64_t p, uint64_t d, uint64_t m);

/**
 * Fresh moment-engine cache.
 */
struct FlMomentCache *fl_moment_cache_new(void);

/**
 * Release a cache created by [`fl_moment_cache_new`].
 *
 * # Safety
 * `cache` must come from [`fl_moment_cache_new`] and not be used again.
 */
void fl_moment_cache_free(struct FlMomentCache *cache);

/**
 * Exact expectation of the monomial described by a row-major `rows x cols`
 * exponent matrix, as a double.
 *
 * # Safety
 * `cache` must be a live handle from [`fl_moment_cache_new`], `entries`
 * must point to `rows * cols` readable `uint32_t`, and `out` to a
 * writable `double`.
 */
enum FlStatus fl_monomial_expectation(struct FlMomentCache *cache,
                                      const uint32_t *entries,
                                      uintptr_t rows,
                                      uintptr_t cols,
                                      uint64_t p,
                                      double *out);

/**
 * Exact expectation as a reduced fraction `"num/den"`; null on error.
 * Free with [`fl_string_free`].
 *
 * # Safety
 * As [`fl_monomial_expectation`].
 */
char *fl_monomial_expectation_str(struct FlMomentCache *cache,
                                  const uint32_t *entries,
                                  uintptr_t rows,
                                  uintptr_t cols,
                                  uint64_t p);

/**
 * Monte Carlo estimate of the (normalized) expected forgetting on a
 * bound-saturating instance with `n = d` and a random unit teacher.
 *
 * # Safety
 * `out_mean` and `out_stderr` must point to writable `double`s.
 */
enum FlStatus fl_mc_worst_case_forgetting(uint64_t p,
                                          uint64_t d,
                                          uint64_t m,
                                          uint64_t trials,
                                          uint64_t seed,
                                          bool normalize,
                                          double *out_mean,
                                          double *out_stderr);

/**
 * Haar-distributed orthogonal matrix, written row-major into `out`
 * (`dim * dim` doubles). Deterministic in `seed`.
 *
 * # Safety
 * `out` must point to `dim * dim` writable `double`s.
 */
enum FlStatus fl_haar_sample(uintptr_t dim, uint64_t seed, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORGETTING_LAB_H */
