#ifndef MICROGRID_MFC_H
#define MICROGRID_MFC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfcStatus {
  MFC_STATUS_OK = 0,
  MFC_STATUS_NULL_POINTER = 1,
  MFC_STATUS_INVALID_ARGUMENT = 2,
  MFC_STATUS_INVALID_MEASUREMENT = 3,
  MFC_STATUS_DIVERGED = 4,
  MFC_STATUS_CONFIG = 5,
  MFC_STATUS_UNKNOWN_SCENARIO = 6,
  MFC_STATUS_NO_SUCH_CHANNEL = 7,
  MFC_STATUS_BUFFER_TOO_SMALL = 8,
  MFC_STATUS_IO = 9,
  MFC_STATUS_PANIC = 10,
} MfcStatus;

// i-PI controller instance.
typedef struct MfcIpi MfcIpi;

// Sliding-window mean.
typedef struct MfcMovingAverage MfcMovingAverage;

// A scenario definition (built-in or loaded from TOML).
typedef struct MfcScenario MfcScenario;

// Recorded channels of one run.
typedef struct MfcTrace MfcTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread; empty after success.
// Valid until the next call into this library on the same thread.
const char *mfc_last_error(void);

// Library version as a static string.
const char *mfc_version(void);

// Creates an i-PI controller. `order` is 1 or 2.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum MfcStatus mfc_ipi_new(double alpha,
                           uint8_t order,
                           double tc,
                           double kp,
                           double ki,
                           double u_min,
                           double u_max,
                           struct MfcIpi **out);

// One sampling instant: feeds `y` and `y_ref`, writes the held command.
//
// # Safety
// `ctl` must come from [`mfc_ipi_new`]; `u_out` must be writable.
enum MfcStatus mfc_ipi_step(struct MfcIpi *ctl, double y, double y_ref, double *u_out);

// # Safety
// `ctl` must come from [`mfc_ipi_new`] and not be used afterwards. Null is ignored.
void mfc_ipi_free(struct MfcIpi *ctl);

// # Safety
// `out` must be writable.
enum MfcStatus mfc_moving_average_new(size_t window, struct MfcMovingAverage **out);

// Pushes a sample and writes the mean of the samples in the window.
//
// # Safety
// `ma` must come from [`mfc_moving_average_new`]; `mean_out` must be writable.
enum MfcStatus mfc_moving_average_push(struct MfcMovingAverage *ma,
                                       double sample,
                                       double *mean_out);

// # Safety
// `ma` must come from [`mfc_moving_average_new`] and not be used afterwards.
void mfc_moving_average_free(struct MfcMovingAverage *ma);

// Looks up a built-in scenario by name.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum MfcStatus mfc_scenario_builtin(const char *name, struct MfcScenario **out);

// Parses a scenario from TOML text.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum MfcStatus mfc_scenario_from_toml(const char *toml, struct MfcScenario **out);

// Applies a dotted-path override such as `loops.0.gains.kp` = `50`.
//
// # Safety
// `scenario` must be a live handle; `key` and `value` NUL-terminated strings.
enum MfcStatus mfc_scenario_set(struct MfcScenario *scenario, const char *key, const char *value);

// Simulates the scenario. On success `*out` owns the recorded trace.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum MfcStatus mfc_scenario_run(struct MfcScenario *scenario, struct MfcTrace **out);

// # Safety
// `scenario` must be a live handle and not be used afterwards.
void mfc_scenario_free(struct MfcScenario *scenario);

// Number of recorded instants.
//
// # Safety
// `trace` must be a live handle; `len_out` writable.
enum MfcStatus mfc_trace_len(const struct MfcTrace *trace, size_t *len_out);

// Number of channels, excluding time.
//
// # Safety
// `trace` must be a live handle; `count_out` writable.
enum MfcStatus mfc_trace_channel_count(const struct MfcTrace *trace, size_t *count_out);

// Name of channel `index`; the string lives as long as the trace.
//
// # Safety
// `trace` must be a live handle; `name_out` writable.
enum MfcStatus mfc_trace_channel_name(const struct MfcTrace *trace,
                                      size_t index,
                                      const char **name_out);

// Copies the time column into `buf` (capacity `cap`). `len_out`, if not
// null, receives the required length even when the buffer is too small.
//
// # Safety
// `trace` must be a live handle; `buf` must hold `cap` doubles.
enum MfcStatus mfc_trace_time(const struct MfcTrace *trace,
                              double *buf,
                              size_t cap,
                              size_t *len_out);

// Copies the named channel into `buf`; see [`mfc_trace_time`].
//
// # Safety
// `trace` must be a live handle; `name` NUL-terminated; `buf` must hold `cap` doubles.
enum MfcStatus mfc_trace_channel(const struct MfcTrace *trace,
                                 const char *name,
                                 double *buf,
                                 size_t cap,
                                 size_t *len_out);

// Writes the trace as CSV (header `t,<channels>`).
//
// # Safety
// `trace` must be a live handle; `path` NUL-terminated.
enum MfcStatus mfc_trace_write_csv(const struct MfcTrace *trace, const char *path);

// # Safety
// `trace` must be a live handle and not be used afterwards.
void mfc_trace_free(struct MfcTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MICROGRID_MFC_H */
