//! Independent oracles shared by the integration suites.
//!
//! Projection formulas here are written directly from the model definitions, without
//! going through the library, so agreement is evidence rather than tautology.

#![allow(dead_code)]

use nalgebra::{DMatrix, Vector2, Vector3};
use rand::Rng;
use widecal::board::{BoardSpec, PointIndex};
use widecal::detector::{Detection, Provenance};
use widecal::pose::Pose;
use widecal::{CameraModel, Pixel};

pub const WIDTH: u32 = 640;
pub const HEIGHT: u32 = 512;

/// Double sphere camera with a 190 degree image circle inside a 640x512 sensor.
pub const DS_190: [f64; 6] = [125.0, 125.0, 319.5, 255.5, -0.18, 0.59];
/// A milder double sphere camera whose field of view overfills the sensor.
pub const DS_WIDE: [f64; 6] = [156.6, 156.6, 319.5, 255.5, -0.18, 0.59];
pub const KB: [f64; 8] = [190.0, 191.0, 320.2, 254.7, 0.02, -0.01, 0.004, -0.0008];
pub const OMNI: [f64; 9] = [1.1, 270.0, 272.0, 318.0, 257.0, -0.2, 0.05, 1e-4, -2e-4];
pub const PINHOLE: [f64; 4] = [300.0, 302.0, 319.5, 255.5];

pub fn ds_190() -> CameraModel {
    CameraModel::double_sphere(DS_190, WIDTH, HEIGHT).unwrap()
}

pub fn ds_wide() -> CameraModel {
    CameraModel::double_sphere(DS_WIDE, WIDTH, HEIGHT).unwrap()
}

pub fn kb() -> CameraModel {
    CameraModel::kannala_brandt(KB, 100f64.to_radians(), WIDTH, HEIGHT).unwrap()
}

pub fn omni() -> CameraModel {
    CameraModel::omni_radtan(OMNI, WIDTH, HEIGHT).unwrap()
}

pub fn pinhole() -> CameraModel {
    CameraModel::pinhole(PINHOLE[0], PINHOLE[1], PINHOLE[2], PINHOLE[3], WIDTH, HEIGHT).unwrap()
}

/// The four model families with the polar angle (radians) up to which each is tested.
pub fn test_models() -> Vec<(&'static str, CameraModel, f64)> {
    vec![
        ("pinhole", pinhole(), 60f64.to_radians()),
        ("double_sphere", ds_wide(), 110f64.to_radians()),
        ("kannala_brandt", kb(), 95f64.to_radians()),
        ("omni_radtan", omni(), 80f64.to_radians()),
    ]
}

/// Projection written from each model's definition.
pub fn oracle_project(model: &CameraModel, p: &Vector3<f64>) -> Vector2<f64> {
    let q = model.params();
    let (x, y, z) = (p.x, p.y, p.z);
    match model.kind() {
        widecal::ModelKind::Pinhole => Vector2::new(q[0] * x / z + q[2], q[1] * y / z + q[3]),
        widecal::ModelKind::DoubleSphere => {
            let (xi, alpha) = (q[4], q[5]);
            let d1 = (x * x + y * y + z * z).sqrt();
            let zs = xi * d1 + z;
            let d2 = (x * x + y * y + zs * zs).sqrt();
            let den = alpha * d2 + (1.0 - alpha) * zs;
            Vector2::new(q[0] * x / den + q[2], q[1] * y / den + q[3])
        }
        widecal::ModelKind::KannalaBrandt => {
            let r = (x * x + y * y).sqrt();
            let theta = r.atan2(z);
            let d = theta + q[4] * theta.powi(3) + q[5] * theta.powi(5) + q[6] * theta.powi(7) + q[7] * theta.powi(9);
            if r == 0.0 {
                return Vector2::new(q[2], q[3]);
            }
            Vector2::new(q[0] * d * x / r + q[2], q[1] * d * y / r + q[3])
        }
        widecal::ModelKind::OmniRadtan => {
            let (xi, fx, fy, cx, cy, k1, k2, p1, p2) = (q[0], q[1], q[2], q[3], q[4], q[5], q[6], q[7], q[8]);
            let n = (x * x + y * y + z * z).sqrt();
            let (mx, my) = (x / (z + xi * n), y / (z + xi * n));
            let r2 = mx * mx + my * my;
            let radial = 1.0 + k1 * r2 + k2 * r2 * r2;
            let dx = mx * radial + 2.0 * p1 * mx * my + p2 * (r2 + 2.0 * mx * mx);
            let dy = my * radial + p1 * (r2 + 2.0 * my * my) + 2.0 * p2 * mx * my;
            Vector2::new(fx * dx + cx, fy * dy + cy)
        }
    }
}

/// Uniformly distributed unit bearing with polar angle at most `max_polar`.
pub fn bearing_in_cap(rng: &mut impl Rng, max_polar: f64) -> Vector3<f64> {
    let cos_min = max_polar.cos();
    let c: f64 = 1.0 - rng.random::<f64>() * (1.0 - cos_min);
    let s = (1.0 - c * c).max(0.0).sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    Vector3::new(s * phi.cos(), s * phi.sin(), c)
}

pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.normalize().cross(&b.normalize()).norm().atan2(a.normalize().dot(&b.normalize()))
}

/// Central differences of `f` at `x`, one column per coordinate.
pub fn central_diff(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], rel_step: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for k in 0..x.len() {
        let h = rel_step * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..m {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    j
}

/// Largest entrywise error relative to the largest entry of `reference`.
pub fn max_rel_error(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let scale = reference.iter().fold(0f64, |m, v| m.max(v.abs())).max(1e-12);
    (a - reference).iter().fold(0f64, |m, v| m.max(v.abs())) / scale
}

/// Noise-free detections: the exact projections of every visible board point.
pub fn exact_detections(board: &BoardSpec, model: &CameraModel, poses: &[Pose]) -> Vec<Detection> {
    poses
        .iter()
        .enumerate()
        .flat_map(|(f, pose)| {
            widecal::synth::ground_truth(board, pose, model).into_iter().map(move |(point, pixel)| Detection {
                frame: f,
                point,
                pixel,
                provenance: Provenance::Oracle,
                refined: false,
            })
        })
        .collect()
}

/// Exhaustive nearest-neighbor window: `s` times the distance from point `i` to the
/// closest other projected board point, over all pairs.
pub fn brute_force_window(projected: &[Option<Pixel>], i: usize, s: f64) -> Option<f64> {
    let p = projected[i]?;
    projected
        .iter()
        .enumerate()
        .filter(|&(j, q)| j != i && q.is_some())
        .map(|(_, q)| (q.unwrap() - p).norm())
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        .map(|d| s * d)
}

/// Ground-truth pixel of a board point in a frame, if visible.
pub fn truth_of(gt: &[(PointIndex, Pixel)], point: PointIndex) -> Option<Pixel> {
    gt.iter().find(|(i, _)| *i == point).map(|(_, u)| *u)
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}
