//! C interface to the widecal calibration toolbox.
//!
//! Objects cross the boundary as opaque handles that the caller releases with the
//! matching `*_free` function. Every fallible call returns a [`WidecalStatus`]; after a
//! failure, [`widecal_last_error`] describes it. Strings returned to the caller are
//! released with [`widecal_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use widecal::app::{self, Overrides};
use widecal::board::BoardSpec;
use widecal::config::RunConfig;
use widecal::pipeline::PipelineOutput;
use widecal::{CameraModel, Error, ModelKind, Point3};

/// Result of every fallible call. Values 1 to 3 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidecalStatus {
    Ok = 0,
    /// Invalid configuration, tag or record.
    Config = 1,
    /// File system or image codec failure.
    Io = 2,
    /// Numerical failure: outside a model's domain, no convergence, solver breakdown.
    Numeric = 3,
    /// A null pointer or invalid UTF-8 was passed in.
    InvalidArgument = 4,
    /// An internal panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidecalModelKind {
    Pinhole = 0,
    DoubleSphere = 1,
    KannalaBrandt = 2,
    OmniRadtan = 3,
}

impl From<WidecalModelKind> for ModelKind {
    fn from(k: WidecalModelKind) -> Self {
        match k {
            WidecalModelKind::Pinhole => ModelKind::Pinhole,
            WidecalModelKind::DoubleSphere => ModelKind::DoubleSphere,
            WidecalModelKind::KannalaBrandt => ModelKind::KannalaBrandt,
            WidecalModelKind::OmniRadtan => ModelKind::OmniRadtan,
        }
    }
}

/// Opaque camera model.
pub struct WidecalCamera {
    model: CameraModel,
}

/// Opaque calibration outcome together with the board it was computed for.
pub struct WidecalCalibration {
    board: BoardSpec,
    output: PipelineOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WidecalStatus {
    match e.exit_code() {
        1 => WidecalStatus::Config,
        2 => WidecalStatus::Io,
        _ => WidecalStatus::Numeric,
    }
}

enum Failure {
    Lib(Error),
    Arg(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, recording any failure or panic for [`widecal_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WidecalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WidecalStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(msg.to_string());
            WidecalStatus::InvalidArgument
        }
        Err(panic) => {
            let msg = panic.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| panic.downcast_ref::<String>().cloned());
            set_last_error(format!("internal error: {}", msg.unwrap_or_else(|| "panic".into())));
            WidecalStatus::Internal
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Arg(what));
    }
    CStr::from_ptr(p).to_str().map(PathBuf::from).map_err(|_| Failure::Arg("path is not valid UTF-8"))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| Failure::Arg("string contains a nul byte"))
}

/// Message of the last failure on this thread, or null. Valid until the next failing
/// call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn widecal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn widecal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn widecal_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a camera from its parameter array, in the library's documented order.
///
/// # Safety
/// `params` must point to `n_params` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_new(
    kind: WidecalModelKind,
    params: *const f64,
    n_params: usize,
    width: u32,
    height: u32,
    out: *mut *mut WidecalCamera,
) -> WidecalStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return Err(Failure::Arg("params and out must not be null"));
        }
        let p = std::slice::from_raw_parts(params, n_params);
        let model = CameraModel::from_params(kind.into(), p, width, height, None)?;
        *out = Box::into_raw(Box::new(WidecalCamera { model }));
        Ok(())
    })
}

/// Creates a camera from its JSON record
/// `{"model": ..., "params": [...], "image_size": [w, h]}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_from_json(json: *const c_char, out: *mut *mut WidecalCamera) -> WidecalStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(Failure::Arg("json and out must not be null"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| Failure::Arg("json is not valid UTF-8"))?;
        let model: CameraModel = serde_json::from_str(text).map_err(|e| Error::Schema { line: e.line(), msg: e.to_string() })?;
        *out = Box::into_raw(Box::new(WidecalCamera { model }));
        Ok(())
    })
}

/// Serializes a camera to its JSON record; free the result with [`widecal_string_free`].
///
/// # Safety
/// `camera` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_to_json(camera: *const WidecalCamera, out: *mut *mut c_char) -> WidecalStatus {
    guard(|| {
        let (Some(cam), false) = (camera.as_ref(), out.is_null()) else {
            return Err(Failure::Arg("camera and out must not be null"));
        };
        let text = serde_json::to_string(&cam.model).map_err(|e| Error::Config(e.to_string()))?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Copies the parameter vector into `out`, which holds `capacity` doubles, and stores
/// the parameter count in `n_out`. Fails with `InvalidArgument` when `capacity` is too
/// small; `n_out` is still set.
///
/// # Safety
/// `camera` must be a live handle, `out` must hold `capacity` doubles and `n_out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_params(camera: *const WidecalCamera, out: *mut f64, capacity: usize, n_out: *mut usize) -> WidecalStatus {
    guard(|| {
        let (Some(cam), false) = (camera.as_ref(), n_out.is_null()) else {
            return Err(Failure::Arg("camera and n_out must not be null"));
        };
        let p = cam.model.params();
        *n_out = p.len();
        if out.is_null() || capacity < p.len() {
            return Err(Failure::Arg("output buffer too small"));
        }
        ptr::copy_nonoverlapping(p.as_ptr(), out, p.len());
        Ok(())
    })
}

/// Projects a camera-frame point `xyz[3]` to `pixel[2]`.
///
/// # Safety
/// `camera` must be a live handle, `xyz` must hold 3 doubles and `pixel` 2.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_project(camera: *const WidecalCamera, xyz: *const f64, pixel: *mut f64) -> WidecalStatus {
    guard(|| {
        let Some(cam) = camera.as_ref() else {
            return Err(Failure::Arg("camera must not be null"));
        };
        if xyz.is_null() || pixel.is_null() {
            return Err(Failure::Arg("xyz and pixel must not be null"));
        }
        let p = std::slice::from_raw_parts(xyz, 3);
        let u = cam.model.project(&Point3::new(p[0], p[1], p[2]))?;
        *pixel = u.x;
        *pixel.add(1) = u.y;
        Ok(())
    })
}

/// Unprojects `pixel[2]` to a unit bearing `bearing[3]`.
///
/// # Safety
/// `camera` must be a live handle, `pixel` must hold 2 doubles and `bearing` 3.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_unproject(camera: *const WidecalCamera, pixel: *const f64, bearing: *mut f64) -> WidecalStatus {
    guard(|| {
        let Some(cam) = camera.as_ref() else {
            return Err(Failure::Arg("camera must not be null"));
        };
        if pixel.is_null() || bearing.is_null() {
            return Err(Failure::Arg("pixel and bearing must not be null"));
        }
        let b = cam.model.unproject(&widecal::Pixel::new(*pixel, *pixel.add(1)))?;
        for k in 0..3 {
            *bearing.add(k) = b[k];
        }
        Ok(())
    })
}

/// Releases a camera. Null is ignored.
///
/// # Safety
/// `camera` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn widecal_camera_free(camera: *mut WidecalCamera) {
    if !camera.is_null() {
        drop(Box::from_raw(camera));
    }
}

/// Loads a YAML run configuration and runs the full calibration pipeline on it. No
/// files are written; see [`widecal_calibration_write`].
///
/// # Safety
/// `config_path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn widecal_calibrate(config_path: *const c_char, out: *mut *mut WidecalCalibration) -> WidecalStatus {
    guard(|| {
        let path = path_arg(config_path, "config_path must not be null")?;
        if out.is_null() {
            return Err(Failure::Arg("out must not be null"));
        }
        let mut cfg = RunConfig::load(&path)?;
        Overrides::default().apply(&mut cfg)?;
        let output = app::calibrate(&cfg)?;
        *out = Box::into_raw(Box::new(WidecalCalibration { board: cfg.target, output }));
        Ok(())
    })
}

/// Final RMS reprojection error in pixels, or NaN for a null handle.
///
/// # Safety
/// `cal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn widecal_calibration_rms(cal: *const WidecalCalibration) -> f64 {
    cal.as_ref().map_or(f64::NAN, |c| c.output.result.rms_reproj_px)
}

/// Number of features in the final solve, or 0 for a null handle.
///
/// # Safety
/// `cal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn widecal_calibration_feature_count(cal: *const WidecalCalibration) -> usize {
    cal.as_ref().map_or(0, |c| c.output.detections.len())
}

/// A new camera handle holding the calibrated model.
///
/// # Safety
/// `cal` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn widecal_calibration_camera(cal: *const WidecalCalibration, out: *mut *mut WidecalCamera) -> WidecalStatus {
    guard(|| {
        let (Some(c), false) = (cal.as_ref(), out.is_null()) else {
            return Err(Failure::Arg("cal and out must not be null"));
        };
        *out = Box::into_raw(Box::new(WidecalCamera { model: c.output.result.model }));
        Ok(())
    })
}

/// Writes `result.json`, `coverage.csv`, `trace.json` and `detections.jsonl` into `dir`.
///
/// # Safety
/// `cal` must be a live handle and `dir` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn widecal_calibration_write(cal: *const WidecalCalibration, dir: *const c_char) -> WidecalStatus {
    guard(|| {
        let Some(c) = cal.as_ref() else {
            return Err(Failure::Arg("cal must not be null"));
        };
        let dir = path_arg(dir, "dir must not be null")?;
        app::write_calibration(&dir, &c.board, &c.output)?;
        Ok(())
    })
}

/// Releases a calibration. Null is ignored.
///
/// # Safety
/// `cal` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn widecal_calibration_free(cal: *mut WidecalCalibration) {
    if !cal.is_null() {
        drop(Box::from_raw(cal));
    }
}
