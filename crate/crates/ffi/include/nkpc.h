#ifndef NKPC_H
#define NKPC_H

#pragma once

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Accuracy metric selector for [`nkpc_metric`].
 */
typedef enum {
  NKPC_METRIC_RMSE = 0,
  NKPC_METRIC_MDRAE = 1,
  NKPC_METRIC_SMAPE = 2,
  NKPC_METRIC_THEIL_U = 3,
} NkpcMetric;

/**
 * Result code of every fallible call.
 */
typedef enum {
  NKPC_STATUS_OK = 0,
  NKPC_STATUS_NULL_POINTER = 1,
  NKPC_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration, argument or input data.
   */
  NKPC_STATUS_INVALID_INPUT = 3,
  /**
   * A model or statistic could not be computed on the given data.
   */
  NKPC_STATUS_COMPUTATION = 4,
  NKPC_STATUS_IO = 5,
  NKPC_STATUS_OUT_OF_RANGE = 6,
  NKPC_STATUS_PANIC = 7,
} NkpcStatus;

/**
 * Quarterly dataset.
 */
typedef struct NkpcDataset NkpcDataset;

/**
 * Forecast ledger produced by a backtest.
 */
typedef struct NkpcLedger NkpcLedger;

/**
 * One forecast, as read from a ledger.
 */
typedef struct {
  int32_t origin_year;
  uint8_t origin_quarter;
  uint32_t horizon;
  double prediction;
  double actual;
  uint32_t train_n;
} NkpcRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *nkpc_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *nkpc_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void nkpc_string_free(char *s);

/**
 * Draws `n` quarters from the synthetic data generator with default parameters.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
NkpcStatus nkpc_dataset_synth(uint64_t seed, size_t n, NkpcDataset **out);

/**
 * Reads a CSV with a `date` column of `YYYYQn` labels; every other column is data.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
NkpcStatus nkpc_dataset_from_csv(const char *path, NkpcDataset **out);

/**
 * Number of quarters, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t nkpc_dataset_len(const NkpcDataset *ds);

/**
 * The dataset as CSV text.
 *
 * # Safety
 * `ds` must be a live dataset handle and `out` a valid pointer.
 */
NkpcStatus nkpc_dataset_to_csv(const NkpcDataset *ds, char **out);

/**
 * # Safety
 * `ds` must be null or a live dataset handle; it is invalid afterwards.
 */
void nkpc_dataset_free(NkpcDataset *ds);

/**
 * Runs the expanding-window horse race on `ds`.
 *
 * `config_toml` holds a run configuration in TOML (null for defaults); only
 * its seed, `backtest`, `forest` and `gbt` sections are used.
 *
 * # Safety
 * `ds` must be a live dataset handle, `config_toml` null or a nul-terminated
 * string, and `out` a valid pointer.
 */
NkpcStatus nkpc_backtest(const NkpcDataset *ds, const char *config_toml, NkpcLedger **out);

/**
 * Number of forecast records, or 0 for a null handle.
 *
 * # Safety
 * `ledger` must be null or a live ledger handle.
 */
size_t nkpc_ledger_len(const NkpcLedger *ledger);

/**
 * Number of fits that failed and were skipped, or 0 for a null handle.
 *
 * # Safety
 * `ledger` must be null or a live ledger handle.
 */
size_t nkpc_ledger_failures(const NkpcLedger *ledger);

/**
 * Copies record `i` into `out`; model and spec names are written to
 * `model_out` / `spec_out` when those are non-null.
 *
 * # Safety
 * `ledger` must be a live ledger handle; `out` a valid pointer.
 */
NkpcStatus nkpc_ledger_record(const NkpcLedger *ledger,
                              size_t i,
                              NkpcRecord *out,
                              char **model_out,
                              char **spec_out);

/**
 * The ledger as CSV text.
 *
 * # Safety
 * `ledger` must be a live ledger handle and `out` a valid pointer.
 */
NkpcStatus nkpc_ledger_to_csv(const NkpcLedger *ledger, char **out);

/**
 * # Safety
 * `ledger` must be null or a live ledger handle; it is invalid afterwards.
 */
void nkpc_ledger_free(NkpcLedger *ledger);

/**
 * Scores `n` forecasts against their outcomes.
 *
 * # Safety
 * `actual` and `pred` must point to `n` doubles; `out` must be valid.
 */
NkpcStatus nkpc_metric(NkpcMetric metric,
                       const double *actual,
                       const double *pred,
                       size_t n,
                       double *out);

/**
 * Hodrick–Prescott trend and cycle of `n` observations.
 *
 * # Safety
 * `y`, `trend_out` and `cycle_out` must each point to `n` doubles.
 */
NkpcStatus nkpc_hp_filter(const double *y,
                          size_t n,
                          double lambda,
                          double *trend_out,
                          double *cycle_out);

/**
 * Conformal quantile of the last `min(kappa, n)` scores; `+inf` when the
 * window is too short for level `1 − alpha`.
 *
 * # Safety
 * `scores` must point to `n` doubles and `out` must be valid.
 */
NkpcStatus nkpc_windowed_quantile(const double *scores,
                                  size_t n,
                                  size_t kappa,
                                  double alpha,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NKPC_H */
