use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use widecal_ffi::*;

const DS: [f64; 6] = [156.6, 156.6, 319.5, 255.5, -0.18, 0.59];

fn last_error() -> String {
    let p = widecal_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn ds_camera() -> *mut WidecalCamera {
    let mut cam = ptr::null_mut();
    let st = unsafe { widecal_camera_new(WidecalModelKind::DoubleSphere, DS.as_ptr(), DS.len(), 640, 512, &mut cam) };
    assert_eq!(st, WidecalStatus::Ok);
    cam
}

#[test]
fn project_unproject_round_trip() {
    let cam = ds_camera();
    let bearing_in = [0.6f64.sin(), 0.0, 0.6f64.cos()];
    let mut px = [0.0; 2];
    let mut bearing = [0.0; 3];
    unsafe {
        assert_eq!(widecal_camera_project(cam, bearing_in.as_ptr(), px.as_mut_ptr()), WidecalStatus::Ok);
        assert_eq!(widecal_camera_unproject(cam, px.as_ptr(), bearing.as_mut_ptr()), WidecalStatus::Ok);
        widecal_camera_free(cam);
    }
    for k in 0..3 {
        assert!((bearing[k] - bearing_in[k]).abs() < 1e-9);
    }
    assert!(px[0] > 319.5 && (px[1] - 255.5).abs() < 1e-9);
}

#[test]
fn json_round_trip_and_params() {
    let cam = ds_camera();
    let mut json = ptr::null_mut();
    let mut back = ptr::null_mut();
    let mut params = [0.0; 8];
    let mut n = 0usize;
    unsafe {
        assert_eq!(widecal_camera_to_json(cam, &mut json), WidecalStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"double_sphere\""), "{text}");
        assert_eq!(widecal_camera_from_json(json, &mut back), WidecalStatus::Ok);
        widecal_string_free(json);
        assert_eq!(widecal_camera_params(back, params.as_mut_ptr(), params.len(), &mut n), WidecalStatus::Ok);
        assert_eq!(widecal_camera_params(back, params.as_mut_ptr(), 2, &mut n), WidecalStatus::InvalidArgument);
        widecal_camera_free(back);
        widecal_camera_free(cam);
    }
    assert_eq!(n, 6);
    assert_eq!(&params[..6], &DS);
}

#[test]
fn failures_map_to_status_codes() {
    let mut cam = ptr::null_mut();
    unsafe {
        assert_eq!(widecal_camera_new(WidecalModelKind::DoubleSphere, ptr::null(), 6, 640, 512, &mut cam), WidecalStatus::InvalidArgument);
        assert!(last_error().contains("null"));
        let short = [100.0, 100.0];
        assert_eq!(widecal_camera_new(WidecalModelKind::Pinhole, short.as_ptr(), 2, 640, 512, &mut cam), WidecalStatus::Config);
        assert!(cam.is_null());
        let bad = CString::new("{\"model\": \"pinhole\"").unwrap();
        assert_eq!(widecal_camera_from_json(bad.as_ptr(), &mut cam), WidecalStatus::Config);

        let cam = ds_camera();
        let behind = [0.0, 0.0, -1.0];
        let mut px = [0.0; 2];
        assert_eq!(widecal_camera_project(cam, behind.as_ptr(), px.as_mut_ptr()), WidecalStatus::Numeric);
        assert!(!last_error().is_empty());
        widecal_camera_free(cam);

        let missing = CString::new("/nonexistent/widecal.yaml").unwrap();
        let mut cal = ptr::null_mut();
        assert_eq!(widecal_calibrate(missing.as_ptr(), &mut cal), WidecalStatus::Io);
        assert!(cal.is_null());
        assert!(widecal_calibration_rms(ptr::null()).is_nan());
        widecal_camera_free(ptr::null_mut());
        widecal_calibration_free(ptr::null_mut());
        widecal_string_free(ptr::null_mut());
    }
}

#[test]
fn calibrates_a_small_synthetic_scene() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.yaml");
    std::fs::write(
        &cfg,
        "target: {type: aprilgrid, rows: 5, cols: 5, tag_size_m: 0.1, tag_spacing: 0.3}
model: {kind: double_sphere, fov_hint_deg: 190}
pipeline: {iterations: 2}
synthetic:
  model: {model: double_sphere, params: [156.6, 156.6, 319.5, 255.5, -0.18, 0.59], image_size: [640, 512]}
  n_frames: 6
  render: {noise_sigma: 0.02, seed: 4}
output_dir: out
",
    )
    .unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("artifacts").to_str().unwrap()).unwrap();
    let mut cal = ptr::null_mut();
    let mut cam = ptr::null_mut();
    let mut params = [0.0; 6];
    let mut n = 0;
    unsafe {
        assert_eq!(widecal_calibrate(path.as_ptr(), &mut cal), WidecalStatus::Ok, "{}", last_error());
        assert!(widecal_calibration_rms(cal) < 0.5);
        assert!(widecal_calibration_feature_count(cal) > 100);
        assert_eq!(widecal_calibration_camera(cal, &mut cam), WidecalStatus::Ok);
        assert_eq!(widecal_camera_params(cam, params.as_mut_ptr(), 6, &mut n), WidecalStatus::Ok);
        assert_eq!(widecal_calibration_write(cal, out.as_ptr()), WidecalStatus::Ok);
        widecal_camera_free(cam);
        widecal_calibration_free(cal);
    }
    assert!((params[0] / DS[0] - 1.0).abs() < 0.01, "{params:?}");
    for f in ["result.json", "coverage.csv", "trace.json", "detections.jsonl"] {
        assert!(dir.path().join("artifacts").join(f).is_file(), "{f}");
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("widecal.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "widecal_last_error",
        "widecal_version",
        "widecal_string_free",
        "widecal_camera_new",
        "widecal_camera_from_json",
        "widecal_camera_to_json",
        "widecal_camera_params",
        "widecal_camera_project",
        "widecal_camera_unproject",
        "widecal_camera_free",
        "widecal_calibrate",
        "widecal_calibration_rms",
        "widecal_calibration_feature_count",
        "widecal_calibration_camera",
        "widecal_calibration_write",
        "widecal_calibration_free",
        "typedef struct WidecalCamera WidecalCamera",
        "WIDECAL_STATUS_INVALID_ARGUMENT = 4",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "widecal.h"

int main(void) {
    const double p[6] = {156.6, 156.6, 319.5, 255.5, -0.18, 0.59};
    WidecalCamera *cam = NULL;
    if (widecal_camera_new(WIDECAL_MODEL_KIND_DOUBLE_SPHERE, p, 6, 640, 512, &cam) != WIDECAL_STATUS_OK) return 1;
    const double xyz[3] = {0.3, -0.2, 1.0};
    double px[2], b[3];
    if (widecal_camera_project(cam, xyz, px) != WIDECAL_STATUS_OK) return 2;
    if (widecal_camera_unproject(cam, px, b) != WIDECAL_STATUS_OK) return 3;
    double n = sqrt(0.09 + 0.04 + 1.0);
    if (fabs(b[0] - 0.3 / n) > 1e-9 || fabs(b[2] - 1.0 / n) > 1e-9) return 4;
    if (widecal_camera_new(WIDECAL_MODEL_KIND_PINHOLE, NULL, 4, 640, 512, &cam) != WIDECAL_STATUS_INVALID_ARGUMENT) return 5;
    if (widecal_last_error() == NULL) return 6;
    widecal_camera_free(cam);
    printf("ok %s\n", widecal_version());
    return 0;
}
"#;

/// Compiles a C client against the generated header and the static library.
#[test]
fn c_client_links_and_runs() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libwidecal_ffi.a");
    assert!(lib.is_file(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0"));
}
