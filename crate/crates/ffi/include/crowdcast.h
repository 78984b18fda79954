#ifndef CROWDCAST_H
#define CROWDCAST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_UTF8 = 2,
  CC_STATUS_PARSE = 3,
  CC_STATUS_INVALID_ARGUMENT = 4,
  CC_STATUS_INSUFFICIENT_DATA = 5,
  /**
   * The quantity is undefined for this input (e.g. AUC with one class).
   */
  CC_STATUS_UNDEFINED = 6,
  CC_STATUS_NUMERIC = 7,
  CC_STATUS_BUFFER_TOO_SMALL = 8,
  CC_STATUS_PANIC = 9,
  CC_STATUS_INTERNAL = 10,
} CcStatus;

/**
 * Fitted model handle.
 */
typedef struct CcModel CcModel;

/**
 * Hourly series handle.
 */
typedef struct CcSeries CcSeries;

typedef struct CcParams {
  double alpha;
  double beta;
  double gamma;
  double phi;
  /**
   * In-sample sum of squared one-step errors.
   */
  double sse;
  bool converged;
} CcParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *cc_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cc_string_free(char *s);

/**
 * Parses `timestamp,value` CSV text into a series. `target` is `arrivals`
 * or `occupancy`.
 *
 * # Safety
 * `csv` and `target` must be NUL-terminated strings; `out` must be writable.
 */
enum CcStatus cc_series_from_csv(const char *csv, const char *target, struct CcSeries **out);

/**
 * Number of hourly slots, gaps included.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum CcStatus cc_series_len(const struct CcSeries *series, size_t *out);

/**
 * Writes the series as CSV text. Free the result with [`cc_string_free`].
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum CcStatus cc_series_to_csv(const struct CcSeries *series, char **out);

/**
 * # Safety
 * `series` must come from this library and not be freed twice. Null is ignored.
 */
void cc_series_free(struct CcSeries *series);

/**
 * Crowding threshold: the `quantile` of the observed values, rounded to an
 * integer.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum CcStatus cc_quartile_threshold(const struct CcSeries *series, double quantile, uint32_t *out);

/**
 * Fits a Holt-Winters model (`AHWM`, `MHWM` or `HWDM`) with daily
 * seasonality to the whole series.
 *
 * # Safety
 * `series` must be a live handle, `model_id` a NUL-terminated string and
 * `out` writable.
 */
enum CcStatus cc_model_fit(const struct CcSeries *series,
                           const char *model_id,
                           struct CcModel **out);

/**
 * Writes `horizon` point forecasts into `buf`, which holds `buf_len` values.
 *
 * # Safety
 * `model` must be a live handle and `buf` valid for `buf_len` writes.
 */
enum CcStatus cc_model_forecast(const struct CcModel *model,
                                size_t horizon,
                                double *buf,
                                size_t buf_len);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CcStatus cc_model_params(const struct CcModel *model, struct CcParams *out);

/**
 * # Safety
 * `model` must come from this library and not be freed twice. Null is ignored.
 */
void cc_model_free(struct CcModel *model);

/**
 * Area under the ROC curve for `n` scores with 0/1 labels. Returns
 * `Undefined` when only one class is present.
 *
 * # Safety
 * `scores` and `labels` must be valid for `n` reads; `out` must be writable.
 */
enum CcStatus cc_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Simulates `days` of hourly arrivals and occupancy with the built-in ED
 * profile.
 *
 * # Safety
 * `arrivals` and `occupancy` must be writable.
 */
enum CcStatus cc_simulate_default(uint32_t days,
                                  uint64_t seed,
                                  struct CcSeries **arrivals,
                                  struct CcSeries **occupancy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDCAST_H */
