#ifndef FVLAB_H
#define FVLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FvStatus {
  FV_STATUS_OK = 0,
  FV_STATUS_NULL_POINTER = 1,
  FV_STATUS_INVALID_ARGUMENT = 2,
  FV_STATUS_NON_CONVERGENCE = 3,
  FV_STATUS_BUFFER_TOO_SMALL = 4,
  FV_STATUS_PANIC = 5,
  FV_STATUS_INTERNAL = 6,
} FvStatus;

/**
 * Opaque truncated QSD.
 */
typedef struct FvQsdOracle FvQsdOracle;

/**
 * Opaque Fleming-Viot replica.
 */
typedef struct FvSimulator FvSimulator;

typedef struct FvSchedule {
  size_t n_walks;
  double big_a;
  double t_horizon;
  double l_threshold;
  double kappa;
  double delta0;
} FvSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *fvlab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fvlab_version(void);

/**
 * `Lambda(lam) = log(p e^lam + q e^-lam) + lam v`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FvStatus fvlab_lambda(double p, double lam, double *out);

/**
 * Rate function `I(x)`; `+inf` above `v + 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FvStatus fvlab_rate_i(double p, double x, double *out);

/**
 * `1 - exp(-I(x))`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FvStatus fvlab_rate_i_tilde(double p, double x, double *out);

/**
 * `P(Poisson(t) >= e t + chi)` and `exp(-t - chi)`.
 *
 * # Safety
 * `exact` and `bound` must be valid for writes.
 */
enum FvStatus fvlab_poisson_tail_upper(double t, double chi, double *exact, double *bound);

/**
 * `P(Poisson(t) <= t / e - chi)` and `exp(-(1 - 2/e) t - chi)`.
 *
 * # Safety
 * `exact` and `bound` must be valid for writes.
 */
enum FvStatus fvlab_poisson_tail_lower(double t, double chi, double *exact, double *bound);

/**
 * Schedule with the smallest `A` putting every kappa term above `margin`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FvStatus fvlab_schedule_minimal(double p,
                                     size_t n_walks,
                                     double margin,
                                     struct FvSchedule *out);

/**
 * Schedule for an explicit `A`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FvStatus fvlab_schedule_with_big_a(double p,
                                        size_t n_walks,
                                        double big_a,
                                        struct FvSchedule *out);

/**
 * New simulator from `n` positions (all `>= 1`, `n >= 2`).
 *
 * # Safety
 * `positions` must point to `n` readable values; `out` must be valid for
 * writes.
 */
enum FvStatus fvlab_simulator_new(double p,
                                  const int64_t *positions,
                                  size_t n,
                                  uint64_t seed,
                                  uint64_t stream_id,
                                  struct FvSimulator **out);

/**
 * Release a simulator. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`fvlab_simulator_new`] and not be used afterwards.
 */
void fvlab_simulator_free(struct FvSimulator *sim);

/**
 * Run for `duration` time units; `events` (optional) receives the number
 * of events.
 *
 * # Safety
 * `sim` must be a live handle; `events` is null or valid for writes.
 */
enum FvStatus fvlab_simulator_advance(struct FvSimulator *sim, double duration, uint64_t *events);

/**
 * Total simulated time.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid for writes.
 */
enum FvStatus fvlab_simulator_time(const struct FvSimulator *sim, double *out);

/**
 * Rightmost position.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid for writes.
 */
enum FvStatus fvlab_simulator_max(const struct FvSimulator *sim, int64_t *out);

/**
 * Number of walks.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid for writes.
 */
enum FvStatus fvlab_simulator_n(const struct FvSimulator *sim, size_t *out);

/**
 * Copy positions into `buf`, which must hold at least `n` values.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must be valid for `len` writes.
 */
enum FvStatus fvlab_simulator_positions(const struct FvSimulator *sim, int64_t *buf, size_t len);

/**
 * Truncated QSD with doubling from `truncation` until stable within
 * `10 tol`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FvStatus fvlab_qsd_compute(double p, size_t truncation, double tol, struct FvQsdOracle **out);

/**
 * Final truncation, i.e. the number of sites carried.
 *
 * # Safety
 * `oracle` must be a live handle; `out` must be valid for writes.
 */
enum FvStatus fvlab_qsd_len(const struct FvQsdOracle *oracle, size_t *out);

/**
 * Mass of `site`; zero off the support.
 *
 * # Safety
 * `oracle` must be a live handle; `out` must be valid for writes.
 */
enum FvStatus fvlab_qsd_mass(const struct FvQsdOracle *oracle, int64_t site, double *out);

/**
 * `1 - rho` for the principal eigenvalue `rho`.
 *
 * # Safety
 * `oracle` must be a live handle; `out` must be valid for writes.
 */
enum FvStatus fvlab_qsd_decay_rate(const struct FvQsdOracle *oracle, double *out);

/**
 * Release an oracle. Null is ignored.
 *
 * # Safety
 * `oracle` must come from [`fvlab_qsd_compute`] and not be used afterwards.
 */
void fvlab_qsd_free(struct FvQsdOracle *oracle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FVLAB_H */
