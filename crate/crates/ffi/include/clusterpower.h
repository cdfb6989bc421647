#ifndef CLUSTERPOWER_H
#define CLUSTERPOWER_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CP_TEST_KS 0

#define CP_TEST_CHI2_COUNTS 1

#define CP_TEST_CHI2_INTER_N_EVENT 2

#define CP_ONSET_REJECT 0

#define CP_ONSET_DEFER 1

#define CP_CALIBRATION_ANALYTIC 0

#define CP_CALIBRATION_MONTE_CARLO 1

/**
 * Bins of the p-value histogram in [`CpPowerResult`].
 */
#define CP_PVALUE_BINS 20

/**
 * Status codes returned by every fallible function.
 */
typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_INVALID_ARGUMENT = 1,
  CP_STATUS_NULL_POINTER = 2,
  /**
   * The catalog has too few events for the test.
   */
  CP_STATUS_UNTESTABLE = 3,
  CP_STATUS_ALL_UNTESTABLE = 4,
  CP_STATUS_IO = 5,
  CP_STATUS_PARSE = 6,
  CP_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  CP_STATUS_INTERNAL = 8,
} CpStatus;

/**
 * Opaque event catalog.
 */
typedef struct CpCatalog CpCatalog;

typedef struct CpTestOutcome {
  /**
   * One of the `CP_TEST_*` values.
   */
  uint32_t test;
  double statistic;
  double p_value;
  double null_rate;
  /**
   * Nonzero when the null rate was estimated from the catalog.
   */
  uint32_t null_rate_estimated;
  size_t n_events;
  /**
   * One of the `CP_CALIBRATION_*` values.
   */
  uint32_t calibration;
  /**
   * Degrees of freedom of the analytic law, or -1.
   */
  int64_t dof;
} CpTestOutcome;

typedef struct CpPowerRequest {
  /**
   * One of the `CP_TEST_*` values; each test uses its default settings.
   */
  uint32_t test;
  /**
   * Nonzero simulates a Poisson process at `poisson_rate` instead.
   */
  uint32_t poisson;
  double poisson_rate;
  double clusters_per_century;
  double events_per_decade;
  double cluster_years;
  double window_years;
  /**
   * One of the `CP_ONSET_*` values.
   */
  uint32_t onset_rule;
  size_t n_trials;
  double alpha;
  uint64_t seed;
  /**
   * Fixed null rate; NaN uses the ensemble mean.
   */
  double null_rate;
  /**
   * One of the `CP_CALIBRATION_*` values.
   */
  uint32_t calibration;
  size_t calibration_trials;
  /**
   * Worker threads; 0 uses the default pool.
   */
  size_t workers;
} CpPowerRequest;

typedef struct CpPowerResult {
  double power;
  double std_error;
  size_t n_effective;
  size_t n_untestable;
  double ensemble_mean_rate;
  /**
   * Counts of p-values in 5%-wide bins.
   */
  uint64_t histogram[CP_PVALUE_BINS];
} CpPowerResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. Valid until the next call
 * on the same thread.
 */
const char *cp_last_error(void);

/**
 * Library version as a static string.
 */
const char *cp_version(void);

/**
 * Builds a catalog from `n` strictly increasing times in `[0, window_years)`.
 *
 * # Safety
 * `times` must point to `n` doubles (or be null with `n == 0`); `out` must be
 * a valid pointer.
 */
enum CpStatus cp_catalog_new(const double *times,
                             size_t n,
                             double window_years,
                             struct CpCatalog **out);

/**
 * Simulates one catalog of the clustered process.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_catalog_simulate_clustered(double clusters_per_century,
                                            double events_per_decade,
                                            double cluster_years,
                                            double window_years,
                                            uint32_t onset,
                                            uint64_t seed,
                                            struct CpCatalog **out);

/**
 * Simulates one homogeneous Poisson catalog.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_catalog_simulate_poisson(double rate,
                                          double window_years,
                                          uint64_t seed,
                                          struct CpCatalog **out);

/**
 * Reads a catalog file. A NaN `cutoff` keeps every row.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum CpStatus cp_catalog_read_csv(const char *path, double cutoff, struct CpCatalog **out);

/**
 * Releases a catalog. Null is ignored.
 *
 * # Safety
 * `catalog` must come from a `cp_catalog_*` constructor and not be used
 * afterwards.
 */
void cp_catalog_free(struct CpCatalog *catalog);

/**
 * Number of events; 0 for null.
 *
 * # Safety
 * `catalog` must be null or a live handle.
 */
size_t cp_catalog_len(const struct CpCatalog *catalog);

/**
 * Window length in years; NaN for null.
 *
 * # Safety
 * `catalog` must be null or a live handle.
 */
double cp_catalog_window_years(const struct CpCatalog *catalog);

/**
 * Copies the event times into `buffer`, which holds `capacity` doubles.
 *
 * # Safety
 * `catalog` must be a live handle and `buffer` must hold `capacity` doubles.
 */
enum CpStatus cp_catalog_times(const struct CpCatalog *catalog, double *buffer, size_t capacity);

/**
 * Tests one catalog with the test's default settings. A NaN `null_rate`
 * uses the catalog's own rate where the test allows it.
 *
 * # Safety
 * `catalog` must be a live handle; `out` must be a valid pointer.
 */
enum CpStatus cp_test_catalog(const struct CpCatalog *catalog,
                              uint32_t test,
                              double null_rate,
                              uint32_t calibration,
                              size_t calibration_trials,
                              uint64_t seed,
                              struct CpTestOutcome *out);

/**
 * Request with the library defaults: the 3-by-4 clustered process, test
 * (a), 10 000 trials, alpha 0.05, Monte Carlo calibration.
 */
struct CpPowerRequest cp_power_request_default(void);

/**
 * Runs a power study.
 *
 * # Safety
 * `request` and `out` must be valid pointers.
 */
enum CpStatus cp_power_study(const struct CpPowerRequest *request, struct CpPowerResult *out);

/**
 * Asymptotic two-sided KS p-value for statistic `d` on `n` points.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_ks_pvalue(double d, size_t n, double *out);

/**
 * Upper tail of the chi-square law with `dof` degrees of freedom.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_chi2_pvalue(double x, size_t dof, double *out);

/**
 * CDF of the Erlang law of the given shape and rate.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_erlang_cdf(uint32_t shape, double rate, double t, double *out);

/**
 * Poisson probability of exactly `k` events at mean `mean`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_poisson_pmf(double mean, uint64_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLUSTERPOWER_H */
