#ifndef SPC_H
#define SPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpcStatus {
  SPC_STATUS_OK = 0,
  SPC_STATUS_NULL_POINTER = 1,
  SPC_STATUS_INVALID_ARGUMENT = 2,
  SPC_STATUS_ALL_ZERO_IN_BAND = 3,
  SPC_STATUS_BAND_OUT_OF_RANGE = 4,
  SPC_STATUS_IO = 5,
  SPC_STATUS_PARSE = 6,
  SPC_STATUS_PANIC = 7,
} SpcStatus;

typedef enum SpcNormalize {
  SPC_NORMALIZE_BAND = 0,
  SPC_NORMALIZE_FULL = 1,
} SpcNormalize;

/**
 * Opaque index result with its threshold curve.
 */
typedef struct SpcResult SpcResult;

/**
 * Opaque sampled waveform.
 */
typedef struct SpcWaveform SpcWaveform;

/**
 * Every parameter that changes the index. There are no defaults.
 */
typedef struct SpcParamsC {
  double f_min;
  double f_max;
  double thr_min;
  double thr_step;
  double thr_max;
  bool dc_correct;
  bool zero_pad;
  enum SpcNormalize normalize;
} SpcParamsC;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy `len` samples into a new waveform.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum SpcStatus spc_waveform_new(const double *samples,
                                size_t len,
                                double sample_rate,
                                struct SpcWaveform **out);

/**
 * Read a two-column (time, voltage) or single-column CSV file.
 * Pass `sample_rate <= 0` to take the rate from the time column.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SpcStatus spc_waveform_read_csv(const char *path,
                                     double sample_rate,
                                     struct SpcWaveform **out);

/**
 * Read a headerless or fixed-header binary file; `layout` is e.g. `"i16le"`.
 *
 * # Safety
 * `path` and `layout` must be NUL-terminated strings; `out` must be writable.
 */
enum SpcStatus spc_waveform_read_binary(const char *path,
                                        const char *layout,
                                        double sample_rate,
                                        double scale,
                                        size_t header_bytes,
                                        struct SpcWaveform **out);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
size_t spc_waveform_len(const struct SpcWaveform *w);

/**
 * Sample rate in Hz, 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
double spc_waveform_sample_rate(const struct SpcWaveform *w);

/**
 * # Safety
 * `w` must be null or a handle not yet freed.
 */
void spc_waveform_free(struct SpcWaveform *w);

/**
 * Compute the index of `w`.
 *
 * # Safety
 * `w` and `params` must be live pointers; `out` must be writable.
 */
enum SpcStatus spc_compute(const struct SpcWaveform *w,
                           const struct SpcParamsC *params,
                           struct SpcResult **out);

/**
 * Index value, NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double spc_result_value(const struct SpcResult *r);

/**
 * Number of thresholds in the curve.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t spc_result_len(const struct SpcResult *r);

/**
 * Copy up to `capacity` curve points. Either output pointer may be null.
 *
 * # Safety
 * Non-null outputs must have room for `capacity` elements.
 */
enum SpcStatus spc_result_curve(const struct SpcResult *r,
                                double *thresholds,
                                uint32_t *counts,
                                size_t capacity);

/**
 * # Safety
 * `r` must be null or a handle not yet freed.
 */
void spc_result_free(struct SpcResult *r);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *spc_last_error(void);

/**
 * Library version, static string.
 */
const char *spc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPC_H */
