//! Ground-truth renderer for AprilGrid scenes seen through any camera model.
//!
//! Each output pixel is unprojected to a bearing, intersected with the board plane in
//! the target frame and shaded by the board albedo. Supersampled rays are averaged,
//! then the image is blurred and Gaussian noise is added. Ground-truth corners are the
//! exact projections of the board points.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{BoardSpec, PointIndex};
use crate::camera::{CameraModel, Pixel};
use crate::error::{Error, Result};
use crate::pose::Pose;
use crate::raster::GrayImage;

pub const DARK: f32 = 0.0;
pub const LIGHT: f32 = 1.0;
/// Rays that miss the printed board.
pub const BACKGROUND: f32 = 0.5;
/// Pixels without a valid bearing.
pub const INVALID: f32 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub supersample: usize,
    pub seed: u64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self { noise_sigma: 0.0, blur_sigma: 0.5, supersample: 4, seed: 0 }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if self.supersample < 1 {
            return Err(Error::config("supersample must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.blur_sigma >= 0.0) {
            return Err(Error::config("noise_sigma and blur_sigma must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// Every corner stays within 40 degrees of the optical axis.
    CenterOnly,
    /// Boards reach the edge of the model's field of view.
    FullFov,
}

/// A camera, its frame poses and the rendering settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub model: CameraModel,
    pub poses: Vec<Pose>,
    pub render: RenderSettings,
}

/// Exact projections of every board point that lands inside the image.
pub fn ground_truth(board: &BoardSpec, pose: &Pose, model: &CameraModel) -> Vec<(PointIndex, Pixel)> {
    board
        .board_points()
        .iter()
        .filter_map(|bp| model.project_in_image(&pose.transform(&bp.position)).map(|u| (bp.index, u)))
        .collect()
}

/// Printed area of the board: the tag field plus a margin of two gaps.
fn paper_bounds(board: &BoardSpec) -> (f64, f64, f64, f64) {
    let (w, h) = board.extent();
    let margin = 2.0 * (board.tag_size * board.tag_spacing).max(board.tag_size / 8.0);
    (-margin, -margin, w + margin, h + margin)
}

fn row_rng(seed: u64, stream: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((row as u128) << 20);
    rng
}

/// Renders one frame. `frame` selects an independent random stream for jitter and noise.
pub fn render_frame(
    board: &BoardSpec,
    pose: &Pose,
    model: &CameraModel,
    settings: &RenderSettings,
    frame: u64,
) -> Result<(GrayImage, Vec<(PointIndex, Pixel)>)> {
    settings.validate()?;
    let (w, h) = (model.width as usize, model.height as usize);
    let inv = pose.inverse();
    let r_inv = inv.rotation_matrix();
    let origin = inv.translation;
    let (x0, y0, x1, y1) = paper_bounds(board);
    let ss = settings.supersample;

    let shade = |u: f64, v: f64| -> f32 {
        let Ok(b) = model.unproject(&Pixel::new(u, v)) else {
            return INVALID;
        };
        let d = r_inv * b;
        if d.z.abs() < 1e-12 {
            return BACKGROUND;
        }
        let lambda = -origin.z / d.z;
        if lambda <= 0.0 {
            return BACKGROUND;
        }
        let (px, py) = (origin.x + lambda * d.x, origin.y + lambda * d.y);
        if px < x0 || py < y0 || px > x1 || py > y1 {
            return BACKGROUND;
        }
        if board.is_dark(px, py) {
            DARK
        } else {
            LIGHT
        }
    };

    let mut data = vec![0f32; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut rng = row_rng(settings.seed, 2 * frame, y);
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0f32;
            for i in 0..ss {
                for j in 0..ss {
                    let (jx, jy): (f64, f64) = if ss > 1 { (rng.random(), rng.random()) } else { (0.5, 0.5) };
                    let u = x as f64 - 0.5 + (j as f64 + jx) / ss as f64;
                    let v = y as f64 - 0.5 + (i as f64 + jy) / ss as f64;
                    acc += shade(u, v);
                }
            }
            *out = acc / (ss * ss) as f32;
        }
    });
    let mut img = GrayImage::from_vec(w, h, data)?.gaussian_blur(settings.blur_sigma);

    if settings.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, settings.noise_sigma).map_err(|e| Error::config(e.to_string()))?;
        img.data_mut().par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            let mut rng = row_rng(settings.seed, 2 * frame + 1, y);
            for v in row.iter_mut() {
                *v = (*v as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32;
            }
        });
    }
    Ok((img, ground_truth(board, pose, model)))
}

/// Rotation whose third column points along `-dir`, so the board's `+z` face looks at
/// the camera.
fn facing_rotation(dir: &Vector3<f64>) -> Matrix3<f64> {
    let z = -dir.normalize();
    let up = if z.y.abs() < 0.9 { Vector3::y() } else { Vector3::x() };
    let x = up.cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}

fn sample_pose(board: &BoardSpec, rng: &mut ChaCha8Rng, polar_max: f64, dist: (f64, f64), tilt_max: f64) -> Pose {
    let polar = polar_max * rng.random::<f64>().powf(0.6);
    let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
    let dir = Vector3::new(polar.sin() * azimuth.cos(), polar.sin() * azimuth.sin(), polar.cos());
    let distance = dist.0 + (dist.1 - dist.0) * rng.random::<f64>();
    let spin = Rotation3::from_axis_angle(&Vector3::z_axis(), rng.random::<f64>() * std::f64::consts::TAU);
    let tilt_axis = Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, 0.0);
    let tilt = if tilt_axis.norm() > 1e-9 {
        Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(tilt_axis), tilt_max * rng.random::<f64>())
    } else {
        Rotation3::identity()
    };
    let r = facing_rotation(&dir) * tilt.matrix() * spin.matrix();
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let (w, h) = board.extent();
    let center = Vector3::new(w / 2.0, h / 2.0, 0.0);
    Pose::new(rotation, dir * distance - rotation * center)
}

/// Deterministic pose sampling for a synthetic dataset.
pub fn make_dataset(
    board: &BoardSpec,
    model: &CameraModel,
    n_frames: usize,
    coverage: Coverage,
    render: RenderSettings,
) -> Result<SceneSpec> {
    if n_frames == 0 {
        return Err(Error::config("n_frames must be at least 1"));
    }
    render.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(render.seed ^ 0x5eed_0f_da7a);
    let (w, h) = board.extent();
    let half_diag = 0.5 * (w * w + h * h).sqrt();
    let n_points = board.num_points();
    let mut poses = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let mut found = None;
        for _ in 0..10_000 {
            let pose = match coverage {
                Coverage::CenterOnly => sample_pose(board, &mut rng, 10f64.to_radians(), (2.6 * half_diag, 3.6 * half_diag), 25f64.to_radians()),
                Coverage::FullFov => {
                    let edge = (model.max_polar_angle() - 5f64.to_radians()).min(85f64.to_radians());
                    sample_pose(board, &mut rng, edge, (0.8 * half_diag, 1.7 * half_diag), 40f64.to_radians())
                }
            };
            let ok = match coverage {
                Coverage::CenterOnly => board.board_points().iter().all(|bp| {
                    let p = pose.transform(&bp.position);
                    p.z > 0.0 && (p.z / p.norm()).acos() < 40f64.to_radians() && model.project_in_image(&p).is_some()
                }),
                Coverage::FullFov => 2 * ground_truth(board, &pose, model).len() >= n_points,
            };
            if ok {
                found = Some(pose);
                break;
            }
        }
        poses.push(found.ok_or_else(|| Error::config("could not place the board inside the field of view"))?);
    }
    Ok(SceneSpec { model: *model, poses, render })
}

/// Renders every frame of a scene.
pub fn render_dataset(board: &BoardSpec, scene: &SceneSpec) -> Result<Vec<(GrayImage, Vec<(PointIndex, Pixel)>)>> {
    scene
        .poses
        .iter()
        .enumerate()
        .map(|(i, pose)| render_frame(board, pose, &scene.model, &scene.render, i as u64))
        .collect()
}
