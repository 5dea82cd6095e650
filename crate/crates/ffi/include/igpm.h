#ifndef IGPM_H
#define IGPM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IgpmVariant {
  IGPM_VARIANT_GPM1 = 0,
  IGPM_VARIANT_GPM2 = 1,
  IGPM_VARIANT_IGPM1 = 2,
  IGPM_VARIANT_IGPM2 = 3,
} IgpmVariant;

typedef enum IgpmStatus {
  IGPM_STATUS_OK = 0,
  IGPM_STATUS_NULL_POINTER = 1,
  IGPM_STATUS_INVALID_ARGUMENT = 2,
  IGPM_STATUS_DIMENSION_MISMATCH = 3,
  IGPM_STATUS_DEGENERATE_DIRECTION = 4,
  IGPM_STATUS_INTERNAL = 5,
  IGPM_STATUS_PANIC = 6,
} IgpmStatus;

/**
 * Opaque least-squares problem over the ℓ1 ball.
 */
typedef struct IgpmProblem IgpmProblem;

/**
 * Opaque solve result.
 */
typedef struct IgpmResult IgpmResult;

/**
 * Solver parameters. Fill with [`igpm_options_default`] and adjust.
 */
typedef struct IgpmOptions {
  enum IgpmVariant variant;
  double gamma;
  double omega0;
  /**
   * Stepsize; for fixed-step variants a value ≤ 0 selects `0.8 / λ̂`.
   */
  double beta;
  double eta;
  double theta;
  double alpha0;
  double eps;
  size_t max_outer;
} IgpmOptions;

/**
 * Aggregate statistics of a finished solve.
 */
typedef struct IgpmSummary {
  bool converged;
  size_t outer_iterations;
  size_t inner_iterations;
  size_t backtracks;
  double objective;
  double final_residual;
} IgpmSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Never null; empty when
 * no call has failed. Valid until the next failing call on this thread.
 */
const char *igpm_last_error(void);

struct IgpmOptions igpm_options_default(enum IgpmVariant variant);

/**
 * Draws a sparse-recovery instance with a dense Gaussian matrix.
 * `tau ≤ 0` selects `τ = s`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum IgpmStatus igpm_problem_generate(size_t n,
                                      size_t m,
                                      size_t s,
                                      uint64_t seed,
                                      double tau,
                                      struct IgpmProblem **out);

/**
 * Builds a problem from a row-major `m × n` matrix and a length-`m`
 * right-hand side.
 *
 * # Safety
 * `a` must point to `m * n` doubles, `b` to `m` doubles, and `out` to
 * writable storage for one handle.
 */
enum IgpmStatus igpm_problem_from_dense(size_t m,
                                        size_t n,
                                        const double *a,
                                        const double *b,
                                        double tau,
                                        struct IgpmProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from this library that was not yet freed.
 */
void igpm_problem_free(struct IgpmProblem *p);

/**
 * Number of unknowns of `p`, or 0 if `p` is null.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t igpm_problem_dim(const struct IgpmProblem *p);

/**
 * Ball radius of `p`, or NaN if `p` is null.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
double igpm_problem_tau(const struct IgpmProblem *p);

/**
 * Copies the generating signal into `x` (length `len` = dimension).
 *
 * # Safety
 * `p` must be a live problem handle and `x` must point to `len` writable
 * doubles.
 */
enum IgpmStatus igpm_problem_signal(const struct IgpmProblem *p, double *x, size_t len);

/**
 * Solves `p` from `x₀ = 0`. A run that hits `max_outer` still succeeds;
 * check `converged` in the summary.
 *
 * # Safety
 * `p` and `opts` must be live pointers and `out` writable storage for one
 * handle.
 */
enum IgpmStatus igpm_solve(const struct IgpmProblem *p,
                           const struct IgpmOptions *opts,
                           struct IgpmResult **out);

/**
 * # Safety
 * `r` must be null or a live result handle.
 */
void igpm_result_free(struct IgpmResult *r);

/**
 * # Safety
 * `r` must be a live result handle and `out` writable.
 */
enum IgpmStatus igpm_result_summary(const struct IgpmResult *r, struct IgpmSummary *out);

/**
 * Copies the solution into `x` (length `len` = dimension).
 *
 * # Safety
 * `r` must be a live result handle and `x` must point to `len` writable
 * doubles.
 */
enum IgpmStatus igpm_result_x(const struct IgpmResult *r, double *x, size_t len);

/**
 * Projects `v` onto `{‖z‖₁ ≤ τ}`. With `gamma < 1` the inexact solver may
 * stop early. `inner` (nullable) receives the inner iteration count.
 *
 * # Safety
 * `v` and `z` must point to `n` doubles (`z` writable); `inner` must be
 * null or writable.
 */
enum IgpmStatus igpm_project_l1(const double *v,
                                size_t n,
                                double tau,
                                double gamma,
                                double *z,
                                size_t *inner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IGPM_H */
