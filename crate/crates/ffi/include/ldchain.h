#ifndef LDCHAIN_H
#define LDCHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LdKappaMethod {
  LD_KAPPA_METHOD_QUADRATURE = 0,
  LD_KAPPA_METHOD_CLOSED_FORM = 1,
  LD_KAPPA_METHOD_DISCRETE_SUM = 2,
} LdKappaMethod;

typedef enum LdStatus {
  LD_STATUS_OK = 0,
  LD_STATUS_NULL_POINTER = 1,
  LD_STATUS_INVALID_ARGUMENT = 2,
  LD_STATUS_NUMERICAL = 3,
  LD_STATUS_IO = 4,
  LD_STATUS_PANIC = 5,
} LdStatus;

/**
 * Opaque chain configuration.
 */
typedef struct LdChain LdChain;

/**
 * Opaque simulation result.
 */
typedef struct LdStats LdStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *ld_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ld_version(void);

/**
 * Uniform harmonic chain. `periodic` selects ring (non-zero) or fixed walls (zero).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LdStatus ld_chain_new_harmonic(size_t n,
                                    int32_t periodic,
                                    double omega0,
                                    double omega,
                                    double gamma,
                                    double temperature,
                                    double tau,
                                    struct LdChain **out);

/**
 * Chain from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LdStatus ld_chain_from_json(const char *json, struct LdChain **out);

/**
 * Releases a chain handle. NULL is ignored.
 *
 * # Safety
 * `chain` must come from this library and not be used afterwards.
 */
void ld_chain_free(struct LdChain *chain);

/**
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum LdStatus ld_chain_sites(const struct LdChain *chain, size_t *out);

/**
 * Total energy at `(q, p)`, each of length `len == N`.
 *
 * # Safety
 * Buffers must hold `len` doubles; `out` must be writable.
 */
enum LdStatus ld_hamiltonian(const struct LdChain *chain,
                             const double *q,
                             const double *p,
                             size_t len,
                             double *out);

/**
 * Mean current `J = (1/N) sum_i j_i` at `(q, p)`.
 *
 * # Safety
 * Buffers must hold `len` doubles; `out` must be writable.
 */
enum LdStatus ld_mean_current(const struct LdChain *chain,
                              const double *q,
                              const double *p,
                              size_t len,
                              double *out);

/**
 * SCGF of `N lambda int J` from the Gaussian variational calculus
 * (uniform harmonic ring only).
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum LdStatus ld_scgf_gaussian(const struct LdChain *chain, double lambda, double *out);

/**
 * SCGF of `N lambda int J` from the tilted-generator Riccati equation
 * (any harmonic chain).
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum LdStatus ld_scgf_riccati(const struct LdChain *chain, double lambda, double *out);

/**
 * Conductivity of the harmonic ring. `n` is only read by `DiscreteSum`.
 *
 * # Safety
 * `out` must be writable.
 */
enum LdStatus ld_kappa(double omega0,
                       double omega,
                       double gamma,
                       enum LdKappaMethod method,
                       size_t n,
                       double *out);

/**
 * Langevin run from rest with the default splitting scheme and burn-in.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum LdStatus ld_simulate(const struct LdChain *chain,
                          double dt,
                          double t_sample,
                          uint64_t seed,
                          size_t n_replicas,
                          struct LdStats **out);

/**
 * Time-averaged mean current and its standard error.
 *
 * # Safety
 * `stats` must be a live handle; both outputs writable.
 */
enum LdStatus ld_stats_mean_current(const struct LdStats *stats, double *mean, double *std_error);

/**
 * Copies the kinetic temperatures into `buf` (`len` must equal N).
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum LdStatus ld_stats_kinetic_temps(const struct LdStats *stats, double *buf, size_t len);

/**
 * Releases a statistics handle. NULL is ignored.
 *
 * # Safety
 * `stats` must come from this library and not be used afterwards.
 */
void ld_stats_free(struct LdStats *stats);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* LDCHAIN_H */
