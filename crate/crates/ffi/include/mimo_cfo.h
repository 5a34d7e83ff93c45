#ifndef MIMO_CFO_H
#define MIMO_CFO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MimoCfoStatus {
  MIMO_CFO_STATUS_OK = 0,
  /**
   * Null pointer or undersized output buffer.
   */
  MIMO_CFO_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The scenario or inputs violate a model constraint.
   */
  MIMO_CFO_STATUS_VALIDATION = 2,
  /**
   * A numerical failure (singular bound, undefined estimate, ...).
   */
  MIMO_CFO_STATUS_NUMERICAL = 3,
  /**
   * Internal panic; the handle should be discarded.
   */
  MIMO_CFO_STATUS_PANIC = 4,
} MimoCfoStatus;

/**
 * Opaque scenario handle.
 */
typedef struct MimoCfoSystem MimoCfoSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *mimo_cfo_last_error(void);

/**
 * Create a scenario with a uniform power-delay profile. `omega` holds one
 * CFO per user (radians per channel use), or a single value shared by all.
 *
 * # Safety
 * `omega` must point to `omega_len` doubles; `out` must be writable.
 */
enum MimoCfoStatus mimo_cfo_system_new(uintptr_t antennas,
                                       uintptr_t users,
                                       uintptr_t taps,
                                       uintptr_t training_len,
                                       double pilot_power,
                                       double noise_var,
                                       const double *omega,
                                       uintptr_t omega_len,
                                       struct MimoCfoSystem **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `sys` must come from [`mimo_cfo_system_new`] and not be used afterwards.
 */
void mimo_cfo_system_free(struct MimoCfoSystem *sys);

/**
 * Number of pilot-blocks B = N / (K L).
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum MimoCfoStatus mimo_cfo_system_blocks(const struct MimoCfoSystem *sys, uintptr_t *out);

/**
 * Estimate every user's CFO from received samples: `rx` holds M*N complex
 * values as interleaved (re, im) pairs, antenna-major. `omega_hat` receives
 * K values; `macs` (optional) the multiply-accumulate count.
 *
 * # Safety
 * `rx` must point to `rx_len` doubles and `omega_hat` to `omega_hat_len`.
 */
enum MimoCfoStatus mimo_cfo_estimate(const struct MimoCfoSystem *sys,
                                     const double *rx,
                                     uintptr_t rx_len,
                                     double *omega_hat,
                                     uintptr_t omega_hat_len,
                                     uint64_t *macs);

/**
 * Simulate trial `trial` under master seed `seed` (Rayleigh channel, noise at
 * the handle's noise variance) and estimate every user's CFO.
 *
 * # Safety
 * `omega_hat` must point to `omega_hat_len` writable doubles.
 */
enum MimoCfoStatus mimo_cfo_simulate_estimate(const struct MimoCfoSystem *sys,
                                              uint64_t seed,
                                              uint64_t trial,
                                              double *omega_hat,
                                              uintptr_t omega_hat_len,
                                              uint64_t *macs);

/**
 * K x K CRLB matrix (row-major) at the channel drawn for `trial` under `seed`.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
enum MimoCfoStatus mimo_cfo_crlb(const struct MimoCfoSystem *sys,
                                 uint64_t seed,
                                 uint64_t trial,
                                 double *out,
                                 uintptr_t out_len);

/**
 * Closed-form MSE at received SNR `gamma` (linear) and gain factor `gain`.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum MimoCfoStatus mimo_cfo_theoretical_mse(const struct MimoCfoSystem *sys,
                                            double gamma,
                                            double gain,
                                            double *out);

/**
 * SNR (linear) above which the closed-form MSE is accurate.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum MimoCfoStatus mimo_cfo_gamma_threshold(const struct MimoCfoSystem *sys,
                                            double gain,
                                            double *out);

/**
 * SNR (linear) at which the closed-form MSE equals `epsilon`.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum MimoCfoStatus mimo_cfo_required_snr(const struct MimoCfoSystem *sys,
                                         double epsilon,
                                         double gain,
                                         double *out);

/**
 * In-phase and quadrature noise variances of the correlation statistic.
 *
 * # Safety
 * `sys` must be a live handle; `var_i` and `var_q` must be writable.
 */
enum MimoCfoStatus mimo_cfo_noise_variance(const struct MimoCfoSystem *sys,
                                           double gamma,
                                           double gain,
                                           double omega,
                                           double *var_i,
                                           double *var_q);

/**
 * Largest K with |omega K L| < pi for CFO fraction `kappa` of carrier
 * `carrier_hz` and delay spread `delay_spread_s`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MimoCfoStatus mimo_cfo_max_users(double kappa,
                                      double carrier_hz,
                                      double delay_spread_s,
                                      uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIMO_CFO_H */
