#ifndef SPECVAR_H
#define SPECVAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpecvarStatus {
  SPECVAR_STATUS_OK = 0,
  SPECVAR_STATUS_NULL_POINTER = 1,
  SPECVAR_STATUS_INVALID_UTF8 = 2,
  SPECVAR_STATUS_CONFIG = 3,
  SPECVAR_STATUS_DIVERGENT = 4,
  SPECVAR_STATUS_INVALID_INTEGRAND = 5,
  SPECVAR_STATUS_DOMAIN_MISMATCH = 6,
  SPECVAR_STATUS_EMPTY_MEASURE = 7,
  SPECVAR_STATUS_INVALID_MEASURE = 8,
  SPECVAR_STATUS_INVALID_REGION = 9,
  SPECVAR_STATUS_METHOD_DISAGREEMENT = 10,
  SPECVAR_STATUS_INCONCLUSIVE = 11,
  SPECVAR_STATUS_SIGMA_INFINITE = 12,
  SPECVAR_STATUS_PRECONDITION_FAILED = 13,
  SPECVAR_STATUS_OUT_OF_RANGE = 14,
  SPECVAR_STATUS_THETA_INFINITE = 15,
  SPECVAR_STATUS_BRACKET_FAILURE = 16,
  SPECVAR_STATUS_STEP_LIMIT = 17,
  SPECVAR_STATUS_IO = 18,
  SPECVAR_STATUS_PANIC = 19,
} SpecvarStatus;

// Route for [`specvar_variance`].
typedef enum SpecvarVarianceMethod {
  SPECVAR_VARIANCE_METHOD_COVARIANCE_SUM = 0,
  SPECVAR_VARIANCE_METHOD_KERNEL = 1,
  SPECVAR_VARIANCE_METHOD_MARTINGALE = 2,
  SPECVAR_VARIANCE_METHOD_ALL = 3,
} SpecvarVarianceMethod;

typedef enum SpecvarVerdict {
  SPECVAR_VERDICT_LINEAR = 0,
  SPECVAR_VERDICT_REGULAR = 1,
  SPECVAR_VERDICT_SLOWLY_VARYING_MULTIPLE = 2,
  SPECVAR_VERDICT_DEGENERATE = 3,
} SpecvarVerdict;

// Opaque chain model.
typedef struct SpecvarChain SpecvarChain;

// Opaque spectral measure.
typedef struct SpecvarMeasure SpecvarMeasure;

typedef struct SpecvarGrowth {
  enum SpecvarVerdict verdict;
  double alpha_hat;
  double alpha_limit;
  // `K` for a linear verdict, `alpha` for a regular one, otherwise NaN.
  double parameter;
} SpecvarGrowth;

typedef struct SpecvarClt {
  double b;
  double ks;
  double mean;
  // Variance of the normalized sums.
  double variance;
  double spectral_variance;
  double b2_over_var;
} SpecvarClt;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *specvar_last_error(void);

// Library version as a static NUL-terminated string.
const char *specvar_version(void);

// Build a measure from its JSON document.
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum SpecvarStatus specvar_measure_from_json(const char *json, struct SpecvarMeasure **out);

// # Safety
// `m` must come from [`specvar_measure_from_json`] and not be freed twice.
void specvar_measure_free(struct SpecvarMeasure *m);

// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_total_mass(const struct SpecvarMeasure *m, double *out);

// `cov(X_0, X_n)`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_covariance(const struct SpecvarMeasure *m, uint64_t n, double *out);

// Limit of `var(S_n)/n`; infinity when it diverges.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_sigma_squared(const struct SpecvarMeasure *m, double *out);

// `var(S_n)`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_variance(const struct SpecvarMeasure *m,
                                    uint64_t n,
                                    enum SpecvarVarianceMethod method,
                                    double *out);

// Spectral distribution of the angles `[0, x]`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_spectral_cdf(const struct SpecvarMeasure *m, double x, double *out);

// Growth class of `var(S_n)` on a dyadic grid up to `n_max`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_classify_growth(const struct SpecvarMeasure *m,
                                           uint64_t n_max,
                                           struct SpecvarGrowth *out);

// `var(S_T)` for a half-plane measure.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_cts_variance(const struct SpecvarMeasure *m, double t, double *out);

// Walk-on-spheres estimate of the normalized boundary mass within `x` of
// the real axis, with its standard error.
//
// # Safety
// `m` must be a live handle; `value` and `stderr_out` must be writable.
enum SpecvarStatus specvar_harmonic_estimate(const struct SpecvarMeasure *m,
                                             double x,
                                             uint64_t paths,
                                             double epsilon,
                                             uint64_t seed,
                                             double *value,
                                             double *stderr_out);

// Build a chain model from `{"family": ..., "params": {...}}`.
//
// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum SpecvarStatus specvar_chain_from_json(const char *json, struct SpecvarChain **out);

// # Safety
// `c` must come from [`specvar_chain_from_json`] and not be freed twice.
void specvar_chain_free(struct SpecvarChain *c);

// Mean holding time of the chain.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_chain_theta(const struct SpecvarChain *c, double *out);

// CLT experiment summary; the per-replication sums are not returned.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
enum SpecvarStatus specvar_chain_clt(const struct SpecvarChain *c,
                                     uint64_t n,
                                     size_t replications,
                                     uint64_t seed,
                                     struct SpecvarClt *out);

// Run one experiment as the command-line tool would, writing
// `summary.json` and CSV files into `out_dir`. `exit_code` receives the
// tool's exit status (0 ok, 3 failed check); errors are returned as a status.
//
// # Safety
// String arguments must be NUL-terminated; `exit_code` must be writable.
enum SpecvarStatus specvar_run_config(const char *command,
                                      const char *config_json,
                                      const char *out_dir,
                                      int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECVAR_H */
