#ifndef WPURSUIT_H
#define WPURSUIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Values 3 to 9 match the command-line exit codes.
typedef enum WpStatus {
  WP_STATUS_OK = 0,
  WP_STATUS_NULL_POINTER = 1,
  WP_STATUS_INVALID_ARGUMENT = 2,
  WP_STATUS_INVALID_CONFIG = 3,
  WP_STATUS_IO = 4,
  WP_STATUS_PARSE = 5,
  WP_STATUS_DIMENSION_MISMATCH = 6,
  WP_STATUS_DOMAIN = 7,
  WP_STATUS_NUMERICAL = 8,
  WP_STATUS_UNSUPPORTED = 9,
  WP_STATUS_PANIC = 10,
} WpStatus;

// Sample matrix.
typedef struct WpData WpData;

// Planted model with its ground truth.
typedef struct WpModel WpModel;

// Result of sequential recovery.
typedef struct WpReport WpReport;

// Ground-truth separation constants of a planted model.
typedef struct WpTruth {
  double d_psi;
  double d_min_u;
  double d_w;
  // Infinite when `d_psi = d_min_u`.
  double snr;
} WpTruth;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *wp_version(void);

// Message of the last failed call on this thread, or an empty string.
// Valid until the next call into the library from the same thread.
const char *wp_last_error_message(void);

// Copies an `n × p` row-major matrix into a new handle.
//
// # Safety
// `values` must point to `n * p` readable doubles; `out` must be writable.
enum WpStatus wp_data_new(const double *values, uintptr_t n, uintptr_t p, struct WpData **out);

// # Safety
// `data` must be null or a handle from this library not yet freed.
void wp_data_free(struct WpData *data);

// # Safety
// `data` must be a live handle; `n` and `p` must be writable.
enum WpStatus wp_data_dims(const struct WpData *data, uintptr_t *n, uintptr_t *p);

// Copies the matrix row-major into `out`, which holds `n * p` doubles.
//
// # Safety
// `data` must be a live handle; `out` must have room for `n * p` doubles.
enum WpStatus wp_data_values(const struct WpData *data, double *out);

// Centred, symmetrically whitened copy of `data`.
//
// # Safety
// `data` must be a live handle; `out` must be writable.
enum WpStatus wp_data_whiten(const struct WpData *data, struct WpData **out);

// W2 distance between the empirical law of `values` (any order) and the
// standard Gaussian.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum WpStatus wp_w2_to_std_normal(const double *values, uintptr_t len, double *out);

// Objective along the unit vector `u` of length `p`.
//
// # Safety
// `data` must be a live handle; `u` must hold `p` doubles; `out` writable.
enum WpStatus wp_objective(const struct WpData *data, const double *u, uintptr_t p, double *out);

// Unconstrained maximizer of the objective. `options` is TOML with optional
// `seed` and `[optimizer]` keys, or null for defaults. `direction` receives
// `p` doubles.
//
// # Safety
// `data` must be a live handle; `options` null or NUL-terminated;
// `direction` must have room for `p` doubles; `value` writable.
enum WpStatus wp_maximize(const struct WpData *data,
                          const char *options,
                          double *direction,
                          double *value);

// Sequential recovery. `options` is TOML with optional `seed`,
// `[optimizer]` and `[stopping]` tables, or null for defaults. The data
// are used as given; whiten first if needed.
//
// # Safety
// `data` must be a live handle; `options` null or NUL-terminated; `out`
// writable.
enum WpStatus wp_recover(const struct WpData *data, const char *options, struct WpReport **out);

// # Safety
// `report` must be null or a handle from this library not yet freed.
void wp_report_free(struct WpReport *report);

// Number of retained directions.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum WpStatus wp_report_k_hat(const struct WpReport *report, uintptr_t *out);

// Number of extracted directions, including a final rejected one.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum WpStatus wp_report_len(const struct WpReport *report, uintptr_t *out);

// Threshold in force when recovery stopped.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum WpStatus wp_report_threshold(const struct WpReport *report, double *out);

// Direction `j` (zero-based) into `out` (`p` doubles) and its distance.
//
// # Safety
// `report` must be a live handle; `out` must have room for `p` doubles;
// `distance` writable.
enum WpStatus wp_report_direction(const struct WpReport *report,
                                  uintptr_t j,
                                  double *out,
                                  double *distance);

// Planted model from a TOML specification (`p`, `k`, `[signal]`,
// optional `[basis]` and `[complement]`); ground truth is computed with
// default settings.
//
// # Safety
// `spec` must be NUL-terminated; `out` writable.
enum WpStatus wp_model_new(const char *spec, struct WpModel **out);

// # Safety
// `model` must be null or a handle from this library not yet freed.
void wp_model_free(struct WpModel *model);

// # Safety
// `model` must be a live handle; `out` writable.
enum WpStatus wp_model_truth(const struct WpModel *model, struct WpTruth *out);

// Draws `n` samples; deterministic given `seed`.
//
// # Safety
// `model` must be a live handle; `out` writable.
enum WpStatus wp_model_sample(const struct WpModel *model,
                              uintptr_t n,
                              uint64_t seed,
                              struct WpData **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WPURSUIT_H */
