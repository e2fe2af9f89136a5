#ifndef TCRISK_H
#define TCRISK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum TcrStatus {
  TCR_STATUS_OK = 0,
  TCR_STATUS_NULL_POINTER = 1,
  TCR_STATUS_INVALID_ARGUMENT = 2,
  TCR_STATUS_LEVEL_BELOW_TAIL = 3,
  TCR_STATUS_INFINITE_MEAN = 4,
  TCR_STATUS_NO_CONVERGENCE = 5,
  TCR_STATUS_NUMERICAL = 6,
  TCR_STATUS_DATA = 7,
  TCR_STATUS_PANIC = 99,
} TcrStatus;

/**
 * Selector for [`tcr_risk_measure`], passed as its integer value.
 */
typedef enum TcrMeasure {
  /**
   * One-day VaR `σ_{t+1} F_Z⁻¹(α)`; ignores `m`.
   */
  TCR_MEASURE_ONE_DAY_VAR = 0,
  /**
   * One-day AVaR `σ_{t+1} κ̄(α)`; ignores `m`.
   */
  TCR_MEASURE_ONE_DAY_AVAR = 1,
  /**
   * Time-consistent VaR of the loss `m` days ahead.
   */
  TCR_MEASURE_TC_VAR = 2,
  /**
   * Sum of `TcVar` over horizons `1..=m`.
   */
  TCR_MEASURE_TC_VAR_AGGREGATE = 3,
  TCR_MEASURE_AVAR_UPPER = 4,
  TCR_MEASURE_AVAR_LOWER = 5,
  /**
   * Time-consistent AVaR of the squared loss.
   */
  TCR_MEASURE_AVAR_SQUARED = 6,
  TCR_MEASURE_AVAR_UPPER_AGGREGATE = 7,
  /**
   * Sum of lower bounds. Not a bound on the aggregate.
   */
  TCR_MEASURE_AVAR_LOWER_AGGREGATE_WEAK = 8,
} TcrMeasure;

/**
 * Opaque noise law.
 */
typedef struct TcrNoise TcrNoise;

typedef struct TcrGarchParams {
  double a0;
  double a1;
  double b;
} TcrGarchParams;

typedef struct TcrGarchFit {
  struct TcrGarchParams params;
  /**
   * Sandwich standard errors of `(a0, a1, b)`; NaN when unavailable.
   */
  double stderrs[3];
  double loglik;
  /**
   * `σ_{t+1}` after filtering the input with the fitted parameters.
   */
  double sigma_next;
  size_t n_obs;
  bool converged;
} TcrGarchFit;

typedef struct TcrGpdFit {
  double xi;
  double beta;
  /**
   * NaN when the observed information is singular.
   */
  double xi_stderr;
  double beta_stderr;
  double loglik;
  size_t n;
  bool converged;
} TcrGpdFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call on the same thread.
 */
const char *tcr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tcr_version(void);

/**
 * Standard normal noise.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum TcrStatus tcr_noise_normal(struct TcrNoise **out);

/**
 * Symmetric noise whose tails above `u` follow a GPD(`xi`, `beta`) with
 * `P(Z ≤ u) = fu`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum TcrStatus tcr_noise_spliced_tail(double u,
                                      double fu,
                                      double xi,
                                      double beta,
                                      struct TcrNoise **out);

/**
 * Spliced noise with the symmetrized empirical body of `residuals`.
 *
 * # Safety
 * `residuals` must point to `n` readable doubles; `out` must be valid for a
 * pointer write.
 */
enum TcrStatus tcr_noise_spliced(const double *residuals,
                                 size_t n,
                                 double u,
                                 double fu,
                                 double xi,
                                 double beta,
                                 struct TcrNoise **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `noise` must come from a `tcr_noise_*` constructor and not be freed twice.
 */
void tcr_noise_free(struct TcrNoise *noise);

/**
 * `F_Z⁻¹(alpha)`.
 *
 * # Safety
 * `noise` must be a live handle; `out` valid for a write.
 */
enum TcrStatus tcr_noise_quantile(const struct TcrNoise *noise, double alpha, double *out);

/**
 * `F_{Z²}⁻¹(alpha)`.
 *
 * # Safety
 * `noise` must be a live handle; `out` valid for a write.
 */
enum TcrStatus tcr_noise_sq_quantile(const struct TcrNoise *noise, double alpha, double *out);

/**
 * `κ̄(alpha)`, the AVaR of `Z`.
 *
 * # Safety
 * `noise` must be a live handle; `out` valid for a write.
 */
enum TcrStatus tcr_noise_kappa(const struct TcrNoise *noise, double alpha, double *out);

/**
 * `κ̄₂(alpha)`, the AVaR of `Z²`.
 *
 * # Safety
 * `noise` must be a live handle; `out` valid for a write.
 */
enum TcrStatus tcr_noise_kappa2(const struct TcrNoise *noise, double alpha, double *out);

/**
 * Evaluates one closed-form measure (a `TcrMeasure` value) at level `alpha`
 * and horizon `m`.
 *
 * # Safety
 * `params` and `noise` must be valid; `out` valid for a write.
 */
enum TcrStatus tcr_risk_measure(uint32_t measure,
                                const struct TcrGarchParams *params,
                                double sigma_next,
                                const struct TcrNoise *noise,
                                double alpha,
                                size_t m,
                                double *out);

/**
 * Monte Carlo estimate of the time-consistent AVaR `m` days ahead.
 * Deterministic in `(seed, alpha, m)`.
 *
 * # Safety
 * `params` and `noise` must be valid; `estimate` and `stderr` valid for writes.
 */
enum TcrStatus tcr_tc_avar_mc(const struct TcrGarchParams *params,
                              double sigma_next,
                              const struct TcrNoise *noise,
                              double alpha,
                              size_t m,
                              size_t n_draws,
                              uint64_t seed,
                              double *estimate,
                              double *stderr);

/**
 * Runs the volatility filter over `n` losses started at the unconditional
 * variance. `sigmas` and `residuals` may each be null or point to `n`
 * writable doubles.
 *
 * # Safety
 * Pointer arguments must satisfy the lengths above.
 */
enum TcrStatus tcr_garch_filter(const double *losses,
                                size_t n,
                                const struct TcrGarchParams *params,
                                double *sigmas,
                                double *residuals,
                                double *sigma_next);

/**
 * Quasi maximum likelihood fit of GARCH(1,1) to `n` losses.
 *
 * On `TCR_STATUS_NO_CONVERGENCE` nothing is written. A fit that stops at the
 * iteration limit is still written with `converged = false`.
 *
 * # Safety
 * `losses` must point to `n` readable doubles; `out` valid for a write.
 */
enum TcrStatus tcr_fit_garch(const double *losses, size_t n, struct TcrGarchFit *out);

/**
 * Maximum likelihood GPD fit to `n` positive threshold excesses.
 *
 * # Safety
 * `excesses` must point to `n` readable doubles; `out` valid for a write.
 */
enum TcrStatus tcr_fit_gpd(const double *excesses, size_t n, struct TcrGpdFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TCRISK_H */
