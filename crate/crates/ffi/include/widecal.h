#ifndef WIDECAL_H
#define WIDECAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call. Values 1 to 3 match the command-line exit codes.
 */
typedef enum WidecalStatus {
  WIDECAL_STATUS_OK = 0,
  /*
   Invalid configuration, tag or record.
   */
  WIDECAL_STATUS_CONFIG = 1,
  /*
   File system or image codec failure.
   */
  WIDECAL_STATUS_IO = 2,
  /*
   Numerical failure: outside a model's domain, no convergence, solver breakdown.
   */
  WIDECAL_STATUS_NUMERIC = 3,
  /*
   A null pointer or invalid UTF-8 was passed in.
   */
  WIDECAL_STATUS_INVALID_ARGUMENT = 4,
  /*
   An internal panic was caught at the boundary.
   */
  WIDECAL_STATUS_INTERNAL = 5,
} WidecalStatus;

typedef enum WidecalModelKind {
  WIDECAL_MODEL_KIND_PINHOLE = 0,
  WIDECAL_MODEL_KIND_DOUBLE_SPHERE = 1,
  WIDECAL_MODEL_KIND_KANNALA_BRANDT = 2,
  WIDECAL_MODEL_KIND_OMNI_RADTAN = 3,
} WidecalModelKind;

/*
 Opaque calibration outcome together with the board it was computed for.
 */
typedef struct WidecalCalibration WidecalCalibration;

/*
 Opaque camera model.
 */
typedef struct WidecalCamera WidecalCamera;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. Valid until the next failing
 call on the same thread; do not free.
 */
const char *widecal_last_error(void);

/*
 Library version as a static nul-terminated string.
 */
const char *widecal_version(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void widecal_string_free(char *s);

/*
 Creates a camera from its parameter array, in the library's documented order.

 # Safety
 `params` must point to `n_params` doubles and `out` to writable storage.
 */
enum WidecalStatus widecal_camera_new(enum WidecalModelKind kind,
                                      const double *params,
                                      size_t n_params,
                                      uint32_t width,
                                      uint32_t height,
                                      struct WidecalCamera **out);

/*
 Creates a camera from its JSON record
 `{"model": ..., "params": [...], "image_size": [w, h]}`.

 # Safety
 `json` must be a nul-terminated string and `out` writable.
 */
enum WidecalStatus widecal_camera_from_json(const char *json, struct WidecalCamera **out);

/*
 Serializes a camera to its JSON record; free the result with [`widecal_string_free`].

 # Safety
 `camera` must be a live handle and `out` writable.
 */
enum WidecalStatus widecal_camera_to_json(const struct WidecalCamera *camera, char **out);

/*
 Copies the parameter vector into `out`, which holds `capacity` doubles, and stores
 the parameter count in `n_out`. Fails with `InvalidArgument` when `capacity` is too
 small; `n_out` is still set.

 # Safety
 `camera` must be a live handle, `out` must hold `capacity` doubles and `n_out` must be
 writable.
 */
enum WidecalStatus widecal_camera_params(const struct WidecalCamera *camera,
                                         double *out,
                                         size_t capacity,
                                         size_t *n_out);

/*
 Projects a camera-frame point `xyz[3]` to `pixel[2]`.

 # Safety
 `camera` must be a live handle, `xyz` must hold 3 doubles and `pixel` 2.
 */
enum WidecalStatus widecal_camera_project(const struct WidecalCamera *camera,
                                          const double *xyz,
                                          double *pixel);

/*
 Unprojects `pixel[2]` to a unit bearing `bearing[3]`.

 # Safety
 `camera` must be a live handle, `pixel` must hold 2 doubles and `bearing` 3.
 */
enum WidecalStatus widecal_camera_unproject(const struct WidecalCamera *camera,
                                            const double *pixel,
                                            double *bearing);

/*
 Releases a camera. Null is ignored.

 # Safety
 `camera` must come from this library and not have been freed.
 */
void widecal_camera_free(struct WidecalCamera *camera);

/*
 Loads a YAML run configuration and runs the full calibration pipeline on it. No
 files are written; see [`widecal_calibration_write`].

 # Safety
 `config_path` must be a nul-terminated string and `out` writable.
 */
enum WidecalStatus widecal_calibrate(const char *config_path, struct WidecalCalibration **out);

/*
 Final RMS reprojection error in pixels, or NaN for a null handle.

 # Safety
 `cal` must be null or a live handle.
 */
double widecal_calibration_rms(const struct WidecalCalibration *cal);

/*
 Number of features in the final solve, or 0 for a null handle.

 # Safety
 `cal` must be null or a live handle.
 */
size_t widecal_calibration_feature_count(const struct WidecalCalibration *cal);

/*
 A new camera handle holding the calibrated model.

 # Safety
 `cal` must be a live handle and `out` writable.
 */
enum WidecalStatus widecal_calibration_camera(const struct WidecalCalibration *cal,
                                              struct WidecalCamera **out);

/*
 Writes `result.json`, `coverage.csv`, `trace.json` and `detections.jsonl` into `dir`.

 # Safety
 `cal` must be a live handle and `dir` a nul-terminated string.
 */
enum WidecalStatus widecal_calibration_write(const struct WidecalCalibration *cal, const char *dir);

/*
 Releases a calibration. Null is ignored.

 # Safety
 `cal` must come from this library and not have been freed.
 */
void widecal_calibration_free(struct WidecalCalibration *cal);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WIDECAL_H */
