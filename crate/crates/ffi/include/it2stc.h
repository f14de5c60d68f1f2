#ifndef IT2STC_H
#define IT2STC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum It2stcStatus {
  IT2STC_STATUS_OK = 0,
  IT2STC_STATUS_NULL_POINTER = 1,
  /**
   * Invalid configuration or parameter.
   */
  IT2STC_STATUS_CONFIG = 2,
  /**
   * Simulation diverged, a value went non-finite, or no rule fired.
   */
  IT2STC_STATUS_DIVERGENCE = 3,
  IT2STC_STATUS_IO = 4,
  IT2STC_STATUS_OUT_OF_RANGE = 5,
  IT2STC_STATUS_INVALID_UTF8 = 6,
  IT2STC_STATUS_PANIC = 7,
} It2stcStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct It2stcExperiment It2stcExperiment;

/**
 * Opaque result of one simulation.
 */
typedef struct It2stcRun It2stcRun;

/**
 * Steady-state metrics. Times are NaN when the band is never entered for good.
 */
typedef struct It2stcMetrics {
  double rmse_e1;
  double rmse_e2;
  double tv_u;
  double settle_time;
  double s_band_time;
} It2stcMetrics;

/**
 * One recorded step, same fields as a CSV row.
 */
typedef struct It2stcSample {
  double t;
  double x1;
  double x2;
  double x1_meas;
  double x2_meas;
  double yd;
  double yd_dot;
  double e1;
  double e2;
  double s;
  double u;
  double norm_thf;
  double norm_th1;
  double norm_th2;
} It2stcSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *it2stc_last_error_message(void);

/**
 * Creates an experiment from a built-in preset (`duffing-track`, `duffing-free`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum It2stcStatus it2stc_experiment_from_preset(const char *name, struct It2stcExperiment **out);

/**
 * Creates an experiment from TOML configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum It2stcStatus it2stc_experiment_from_toml(const char *text, struct It2stcExperiment **out);

/**
 * # Safety
 * `exp` must come from an `it2stc_experiment_from_*` call.
 */
enum It2stcStatus it2stc_experiment_set_seed(struct It2stcExperiment *exp, uint64_t seed);

/**
 * Sets the measurement SNR in dB; NaN disables noise.
 *
 * # Safety
 * `exp` must come from an `it2stc_experiment_from_*` call.
 */
enum It2stcStatus it2stc_experiment_set_snr_db(struct It2stcExperiment *exp, double snr_db);

/**
 * # Safety
 * `exp` must come from an `it2stc_experiment_from_*` call.
 */
enum It2stcStatus it2stc_experiment_set_t_end(struct It2stcExperiment *exp, double t_end);

/**
 * # Safety
 * `exp` must be null or come from an `it2stc_experiment_from_*` call, and
 * must not be used afterwards.
 */
void it2stc_experiment_free(struct It2stcExperiment *exp);

/**
 * Runs the experiment with its configured controller.
 *
 * # Safety
 * `exp` must be a live experiment handle; `out` must be writable.
 */
enum It2stcStatus it2stc_experiment_run(const struct It2stcExperiment *exp, struct It2stcRun **out);

/**
 * # Safety
 * `run` must be a live run handle; `len` must be writable.
 */
enum It2stcStatus it2stc_run_len(const struct It2stcRun *run, size_t *len);

/**
 * # Safety
 * `run` must be a live run handle; `out` must be writable.
 */
enum It2stcStatus it2stc_run_metrics(const struct It2stcRun *run, struct It2stcMetrics *out);

/**
 * Copies sample `index` of a second-order run.
 *
 * # Safety
 * `run` must be a live run handle; `out` must be writable.
 */
enum It2stcStatus it2stc_run_sample(const struct It2stcRun *run,
                                    size_t index,
                                    struct It2stcSample *out);

/**
 * Writes the trajectory as wide CSV.
 *
 * # Safety
 * `run` must be a live run handle; `path` a NUL-terminated string.
 */
enum It2stcStatus it2stc_run_write_csv(const struct It2stcRun *run, const char *path);

/**
 * # Safety
 * `run` must be null or a live run handle, and must not be used afterwards.
 */
void it2stc_run_free(struct It2stcRun *run);

/**
 * Lower and upper membership of `x` in the Gaussian set with uncertain mean
 * `[m1, m2]` and spread `sigma`.
 *
 * # Safety
 * `lower` and `upper` must be writable.
 */
enum It2stcStatus it2stc_mf_bounds(double m1,
                                   double m2,
                                   double sigma,
                                   double x,
                                   double *lower,
                                   double *upper);

/**
 * Karnik-Mendel type reduction of `m` rules with firing intervals
 * `[lo[i], hi[i]]` and crisp consequents `w[i]`.
 *
 * # Safety
 * `lo`, `hi` and `w` must point to `m` readable doubles; `y_l` and `y_r`
 * must be writable.
 */
enum It2stcStatus it2stc_km_reduce(const double *lo,
                                   const double *hi,
                                   const double *w,
                                   size_t m,
                                   double *y_l,
                                   double *y_r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IT2STC_H */
