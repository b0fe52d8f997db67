//! Subpixel feature refinement.
//!
//! Two strategies share a per-feature window sized from the projected board: the
//! gradient-orthogonality iteration used for chessboard-style corners, and a point
//! symmetry objective optimized directly over the feature's target-plane coordinates.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3x2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::BoardSpec;
use crate::camera::{CameraModel, Pixel};
use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::lm::{self, LeastSquares, LmSettings, NormalEquations};
use crate::pose::Pose;
use crate::raster::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    #[serde(alias = "adaptive_gradient")]
    Adaptive,
    Symmetry,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" | "adaptive_gradient" => Ok(Strategy::Adaptive),
            "symmetry" => Ok(Strategy::Symmetry),
            other => Err(Error::config(format!("unknown refinement strategy '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub strategy: Strategy,
    /// Window scale relative to the distance to the nearest projected board point.
    pub s: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub max_iters: usize,
    /// Convergence threshold on the per-iteration displacement, pixels.
    pub eps: f64,
    /// Number of symmetric sample pairs.
    pub n_samples: usize,
    /// Outer sample ring radius as a fraction of the tag size.
    pub sample_radius_frac: f64,
    /// Gaussian pre-smoothing of the image before refinement, pixels. Zero disables it.
    pub smooth_sigma: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Adaptive,
            s: 0.4,
            w_min: 2.0,
            w_max: 15.0,
            max_iters: 30,
            eps: 0.01,
            n_samples: 16,
            sample_radius_frac: 0.3,
            smooth_sigma: 0.0,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(Error::config("refine.s must be positive"));
        }
        if !(1.0 <= self.w_min && self.w_min <= self.w_max) {
            return Err(Error::config("refine window bounds must satisfy 1 <= w_min <= w_max"));
        }
        if !(self.eps > 0.0) || self.max_iters == 0 {
            return Err(Error::config("refine.eps must be positive and max_iters at least 1"));
        }
        if self.n_samples < 8 || self.n_samples % 2 == 1 {
            return Err(Error::config("refine.n_samples must be even and at least 8"));
        }
        if !(self.smooth_sigma >= 0.0) {
            return Err(Error::config("refine.smooth_sigma must be non-negative"));
        }
        if !(self.sample_radius_frac > 0.0) {
            return Err(Error::config("refine.sample_radius_frac must be positive"));
        }
        Ok(())
    }

    pub fn clamp_window(&self, w: f64) -> f64 {
        w.clamp(self.w_min, self.w_max)
    }
}

/// Projections of every board point under a pose, `None` where not projectable.
pub fn project_board(board: &BoardSpec, pose: &Pose, model: &CameraModel) -> Vec<Option<Pixel>> {
    board.board_points().iter().map(|bp| model.project(&pose.transform(&bp.position)).ok()).collect()
}

/// Unclamped window for every board point: `s` times the distance to the nearest other
/// projected point. `None` where the point itself is not projectable or has no neighbor.
///
/// Uses a sweep over points sorted by `u`, so the cost stays near-linear on large boards.
pub fn raw_window_sizes(projected: &[Option<Pixel>], s: f64) -> Vec<Option<f64>> {
    let mut order: Vec<usize> = (0..projected.len()).filter(|&i| projected[i].is_some()).collect();
    order.sort_by(|&a, &b| projected[a].unwrap().x.total_cmp(&projected[b].unwrap().x).then(a.cmp(&b)));
    let pts: Vec<Pixel> = order.iter().map(|&i| projected[i].unwrap()).collect();
    let mut out = vec![None; projected.len()];
    for (k, &i) in order.iter().enumerate() {
        let p = pts[k];
        let mut best = f64::INFINITY;
        for q in pts[k + 1..].iter() {
            if q.x - p.x > best {
                break;
            }
            best = best.min(distance(&p, q));
        }
        for q in pts[..k].iter().rev() {
            if p.x - q.x > best {
                break;
            }
            best = best.min(distance(&p, q));
        }
        if best.is_finite() {
            out[i] = Some(s * best);
        }
    }
    out
}

#[inline]
fn distance(p: &Pixel, q: &Pixel) -> f64 {
    let (du, dv) = (p.x - q.x, p.y - q.y);
    (du * du + dv * dv).sqrt()
}

/// Clamped window size for one board point.
pub fn adaptive_window_size(
    board: &BoardSpec,
    index: crate::board::PointIndex,
    pose: &Pose,
    model: &CameraModel,
    cfg: &RefineConfig,
) -> Result<f64> {
    let projected = project_board(board, pose, model);
    let flat = board.flat_index(index);
    if projected[flat].is_none() {
        return Err(Error::domain(format!("board point {index:?} is not projectable")));
    }
    let raw = raw_window_sizes(&projected, cfg.s)[flat].ok_or_else(|| Error::domain("board point has no projectable neighbor"))?;
    Ok(cfg.clamp_window(raw))
}

/// Gradient-orthogonality corner refinement inside `init ± w`.
///
/// Each iteration solves `sum_p G(p) (q - p) = 0`, where `G = grad I grad I^T` is
/// weighted by a Gaussian of standard deviation `w / 2` centered on the current
/// estimate. Gradients are taken at pixel centers around the rounded estimate.
pub fn gradient_refine(img: &GrayImage, init: Pixel, w: f64, cfg: &RefineConfig) -> Result<Pixel> {
    const MAX_CONDITION: f64 = 1e8;
    let half = w.floor().max(1.0) as i32;
    let sigma = w / 2.0;
    let in_bounds = |q: &Pixel| {
        let r = half as f64 + 0.5;
        q.x - r >= 0.0 && q.y - r >= 0.0 && q.x + r <= (img.width() - 1) as f64 && q.y + r <= (img.height() - 1) as f64
    };
    let mut q = init;
    for _ in 0..cfg.max_iters {
        if !in_bounds(&q) {
            return Err(Error::WindowOutOfBounds);
        }
        let mut a = Matrix2::zeros();
        let mut b = Vector2::zeros();
        for dy in -half..=half {
            for dx in -half..=half {
                let p = Pixel::new(q.x.round() + dx as f64, q.y.round() + dy as f64);
                let (fx, fy) = (p.x - q.x, p.y - q.y);
                let weight = (-(fx * fx + fy * fy) / (2.0 * sigma * sigma)).exp();
                let (gx, gy) = img.gradient(p.x, p.y).ok_or(Error::WindowOutOfBounds)?;
                let g = Matrix2::new(gx * gx, gx * gy, gx * gy, gy * gy) * weight;
                a += g;
                b += g * p;
            }
        }
        let eig = a.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(Error::NonConvergence { last: [q.x, q.y] });
        }
        let next = a.try_inverse().ok_or(Error::NonConvergence { last: [q.x, q.y] })? * b;
        let step = (next - q).norm();
        q = next;
        if step < cfg.eps {
            if !in_bounds(&q) {
                return Err(Error::WindowOutOfBounds);
            }
            return Ok(q);
        }
    }
    Err(Error::NonConvergence { last: [q.x, q.y] })
}

/// Symmetric sample offsets in the target plane. Each offset `s_k` is paired with `-s_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrySampleSet {
    pub offsets: Vec<Vector2<f64>>,
    pub radius: f64,
}

impl SymmetrySampleSet {
    /// `n` pairs on two rings at half and full `radius`, spread over a half turn.
    pub fn rings(n: usize, radius: f64) -> Self {
        let per_ring = (n / 2).max(1);
        let mut offsets = Vec::with_capacity(n);
        for ring in [0.5 * radius, radius] {
            for k in 0..per_ring {
                let a = std::f64::consts::PI * k as f64 / per_ring as f64;
                offsets.push(Vector2::new(ring * a.cos(), ring * a.sin()));
            }
        }
        Self { offsets, radius }
    }

    pub fn for_board(board: &BoardSpec, cfg: &RefineConfig) -> Self {
        Self::rings(cfg.n_samples, cfg.sample_radius_frac * board.tag_size)
    }

    /// The same pairs with every offset negated.
    pub fn negated(&self) -> Self {
        Self { offsets: self.offsets.iter().map(|o| -o).collect(), radius: self.radius }
    }
}

fn sample_at(img: &GrayImage, pose: &Pose, model: &CameraModel, x: &Vector2<f64>) -> Result<(f64, Pixel, nalgebra::Vector3<f64>)> {
    let p = pose.transform(&nalgebra::Vector3::new(x.x, x.y, 0.0));
    let u = model.project(&p).map_err(|_| Error::SampleOutOfImage)?;
    let v = img.sample(u.x, u.y).ok_or(Error::SampleOutOfImage)?;
    Ok((v, u, p))
}

/// Sum of squared intensity differences between point-symmetric target-plane samples
/// around `x_t`.
pub fn symmetry_cost(img: &GrayImage, x_t: &Vector2<f64>, pose: &Pose, model: &CameraModel, samples: &SymmetrySampleSet) -> Result<f64> {
    let mut cost = 0.0;
    for s in &samples.offsets {
        let (a, _, _) = sample_at(img, pose, model, &(x_t + s))?;
        let (b, _, _) = sample_at(img, pose, model, &(x_t - s))?;
        cost += (a - b) * (a - b);
    }
    Ok(cost)
}

struct SymmetryProblem<'a> {
    img: &'a GrayImage,
    pose: &'a Pose,
    model: &'a CameraModel,
    samples: &'a SymmetrySampleSet,
    /// Columns of the rotation acting on in-plane target coordinates.
    r2: Matrix3x2<f64>,
}

impl SymmetryProblem<'_> {
    /// d I(pi(T x)) / d x for an in-plane target point.
    fn intensity_gradient(&self, u: &Pixel, p: &nalgebra::Vector3<f64>) -> Result<nalgebra::RowVector2<f64>> {
        let (gx, gy) = self.img.gradient(u.x, u.y).ok_or(Error::SampleOutOfImage)?;
        let (jp, _) = self.model.project_jacobians(p).map_err(|_| Error::SampleOutOfImage)?;
        Ok(nalgebra::RowVector2::new(gx, gy) * jp * self.r2)
    }

    fn residuals(&self, x: &Vector2<f64>) -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(self.samples.offsets.len());
        for s in &self.samples.offsets {
            let (a, _, _) = sample_at(self.img, self.pose, self.model, &(x + s))?;
            let (b, _, _) = sample_at(self.img, self.pose, self.model, &(x - s))?;
            r.push(a - b);
        }
        Ok(r)
    }

    /// Residuals and their analytic Jacobian rows.
    fn linearize(&self, x: &Vector2<f64>) -> Result<(Vec<f64>, Vec<nalgebra::RowVector2<f64>>)> {
        let mut r = Vec::with_capacity(self.samples.offsets.len());
        let mut j = Vec::with_capacity(self.samples.offsets.len());
        for s in &self.samples.offsets {
            let (a, ua, pa) = sample_at(self.img, self.pose, self.model, &(x + s))?;
            let (b, ub, pb) = sample_at(self.img, self.pose, self.model, &(x - s))?;
            r.push(a - b);
            j.push(self.intensity_gradient(&ua, &pa)? - self.intensity_gradient(&ub, &pb)?);
        }
        Ok((r, j))
    }
}

impl LeastSquares for SymmetryProblem<'_> {
    type State = Vector2<f64>;
    type System = NormalEquations;

    fn linearize(&self, x: &Vector2<f64>) -> Result<NormalEquations> {
        let (r, j) = self.linearize(x)?;
        let mut h = Matrix2::zeros();
        let mut g = Vector2::zeros();
        for (ri, ji) in r.iter().zip(&j) {
            h += ji.transpose() * ji;
            g += ji.transpose() * *ri;
        }
        Ok(NormalEquations {
            hessian: DMatrix::from_column_slice(2, 2, h.as_slice()),
            gradient: DVector::from_column_slice(g.as_slice()),
            cost: 0.5 * r.iter().map(|v| v * v).sum::<f64>(),
        })
    }

    fn cost(&self, x: &Vector2<f64>) -> Result<f64> {
        Ok(0.5 * self.residuals(x)?.iter().map(|v| v * v).sum::<f64>())
    }

    fn retract(&self, x: &Vector2<f64>, delta: &DVector<f64>) -> Result<Vector2<f64>> {
        Ok(x + Vector2::new(delta[0], delta[1]))
    }
}

/// Analytic gradient of [`symmetry_cost`] with respect to `x_t`.
pub fn symmetry_cost_gradient(img: &GrayImage, x_t: &Vector2<f64>, pose: &Pose, model: &CameraModel, samples: &SymmetrySampleSet) -> Result<Vector2<f64>> {
    let problem = SymmetryProblem { img, pose, model, samples, r2: pose.rotation_matrix().fixed_columns::<2>(0).into_owned() };
    let (r, j) = problem.linearize(x_t)?;
    Ok(r.iter().zip(&j).fold(Vector2::zeros(), |acc, (ri, ji)| acc + ji.transpose() * (2.0 * ri)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryResult {
    pub x_t: Vector2<f64>,
    pub pixel: Pixel,
    pub cost: f64,
}

/// Levenberg-Marquardt minimization of the symmetry cost over the in-plane target
/// coordinate of one feature.
pub fn symmetry_refine(
    img: &GrayImage,
    x_init: Vector2<f64>,
    pose: &Pose,
    model: &CameraModel,
    samples: &SymmetrySampleSet,
    cfg: &RefineConfig,
) -> Result<SymmetryResult> {
    let problem = SymmetryProblem { img, pose, model, samples, r2: pose.rotation_matrix().fixed_columns::<2>(0).into_owned() };
    let settings = LmSettings { max_iters: cfg.max_iters, ftol: 1e-12, xtol: 1e-12, ..LmSettings::default() };
    let report = lm::minimize(&problem, x_init, &settings)?;
    let x = report.state;
    let last = |x: &Vector2<f64>| model.project(&pose.transform(&nalgebra::Vector3::new(x.x, x.y, 0.0))).map(|u| [u.x, u.y]).unwrap_or([f64::NAN; 2]);
    if (x - x_init).norm() > samples.radius {
        return Err(Error::DivergedBeyondRadius { last: last(&x) });
    }
    if !report.converged {
        return Err(Error::NonConvergence { last: last(&x) });
    }
    let pixel = model.project(&pose.transform(&nalgebra::Vector3::new(x.x, x.y, 0.0)))?;
    Ok(SymmetryResult { x_t: x, pixel, cost: 2.0 * report.cost })
}

/// Intersects the viewing ray of a pixel with the board plane; in-plane coordinates.
pub fn pixel_to_board(pixel: &Pixel, pose: &Pose, model: &CameraModel) -> Result<Vector2<f64>> {
    let b = model.unproject(pixel)?;
    let inv = pose.inverse();
    let d = inv.rotation * b;
    let o = inv.translation;
    if d.z.abs() < 1e-12 {
        return Err(Error::domain("ray parallel to the board"));
    }
    let lambda = -o.z / d.z;
    if lambda <= 0.0 {
        return Err(Error::domain("board behind the camera along this ray"));
    }
    Ok(Vector2::new(o.x + lambda * d.x, o.y + lambda * d.y))
}

/// Refines one feature with the configured strategy.
pub fn refine_one(
    img: &GrayImage,
    det: &Detection,
    window: f64,
    board: &BoardSpec,
    pose: &Pose,
    model: &CameraModel,
    cfg: &RefineConfig,
) -> Result<Pixel> {
    let refined = match cfg.strategy {
        Strategy::Adaptive => gradient_refine(img, det.pixel, window, cfg)?,
        Strategy::Symmetry => {
            let samples = SymmetrySampleSet::for_board(board, cfg);
            let x0 = pixel_to_board(&det.pixel, pose, model)?;
            symmetry_refine(img, x0, pose, model, &samples, cfg)?.pixel
        }
    };
    if (refined - det.pixel).norm() > window.max(1.0) * std::f64::consts::SQRT_2 {
        return Err(Error::NonConvergence { last: [refined.x, refined.y] });
    }
    if !(refined.x > 0.0 && refined.y > 0.0 && refined.x < (img.width() - 1) as f64 && refined.y < (img.height() - 1) as f64) {
        return Err(Error::WindowOutOfBounds);
    }
    Ok(refined)
}

/// Refines every detection of one frame. Features that fail keep their pixel and stay
/// unrefined; per-feature errors are logged, not returned.
pub fn refine_all(
    detections: &[Detection],
    img: &GrayImage,
    board: &BoardSpec,
    pose: &Pose,
    model: &CameraModel,
    cfg: &RefineConfig,
) -> Vec<Detection> {
    let windows = raw_window_sizes(&project_board(board, pose, model), cfg.s);
    let smoothed;
    let img = if cfg.smooth_sigma > 0.0 {
        smoothed = img.gaussian_blur(cfg.smooth_sigma);
        &smoothed
    } else {
        img
    };
    detections
        .par_iter()
        .map(|d| {
            let mut out = *d;
            out.refined = false;
            let Some(raw) = windows[board.flat_index(d.point)] else {
                return out;
            };
            match refine_one(img, d, cfg.clamp_window(raw), board, pose, model, cfg) {
                Ok(p) => {
                    out.pixel = p;
                    out.refined = true;
                }
                Err(e) => log::debug!("frame {} point {:?}: refinement failed: {e}", d.frame, d.point),
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Blurred saddle: dark in the first and third quadrants around `c`.
    fn saddle(c: Pixel, w: usize, h: usize) -> GrayImage {
        let ideal = GrayImage::from_fn(w, h, |x, y| {
            let mut acc = 0.0;
            for i in 0..8 {
                for j in 0..8 {
                    let u = x as f64 - 0.5 + (j as f64 + 0.5) / 8.0 - c.x;
                    let v = y as f64 - 0.5 + (i as f64 + 0.5) / 8.0 - c.y;
                    acc += if (u > 0.0) == (v > 0.0) { 0.2 } else { 0.8 };
                }
            }
            (acc / 64.0) as f32
        });
        ideal.gaussian_blur(0.7)
    }

    #[test]
    fn window_examples() {
        let pts = vec![Some(Pixel::new(0.0, 0.0)), Some(Pixel::new(10.0, 0.0)), None];
        let w = raw_window_sizes(&pts, 0.5);
        assert_eq!(w, vec![Some(5.0), Some(5.0), None]);
        let cfg = RefineConfig { s: 0.5, ..Default::default() };
        assert_eq!(cfg.clamp_window(1.0), 2.0);
        assert_eq!(cfg.clamp_window(100.0), 15.0);
    }

    #[test]
    fn gradient_refine_recovers_saddle() {
        let truth = Pixel::new(30.3, 25.7);
        let img = saddle(truth, 60, 50);
        let cfg = RefineConfig::default();
        let q = gradient_refine(&img, truth + Vector2::new(0.8, -0.6), 5.0, &cfg).unwrap();
        assert!((q - truth).norm() < 0.05, "{q:?}");
        let fixed = gradient_refine(&img, truth, 5.0, &cfg).unwrap();
        assert!((fixed - truth).norm() < 0.05);
    }

    #[test]
    fn gradient_refine_flat_patch_does_not_converge() {
        let img = GrayImage::filled(40, 40, 0.5);
        assert!(matches!(gradient_refine(&img, Pixel::new(20.0, 20.0), 4.0, &RefineConfig::default()), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn gradient_refine_window_out_of_bounds() {
        let img = saddle(Pixel::new(3.0, 3.0), 40, 40);
        assert!(matches!(gradient_refine(&img, Pixel::new(3.0, 3.0), 5.0, &RefineConfig::default()), Err(Error::WindowOutOfBounds)));
    }

    #[test]
    fn sample_rings_are_symmetric() {
        let s = SymmetrySampleSet::rings(16, 0.3);
        assert_eq!(s.offsets.len(), 16);
        assert!(s.offsets.iter().all(|o| o.norm() <= 0.3 + 1e-12));
        assert!(RefineConfig { n_samples: 6, ..Default::default() }.validate().is_err());
    }
}
