//! Joint calibration of camera intrinsics and all target poses.
//!
//! Residuals are `pi(R_f x + t_f) - u` per observation under a Huber loss. Poses are
//! updated by left perturbation. The damped normal equations are solved by eliminating
//! the 6x6 pose blocks into a Schur complement on the intrinsics.

use nalgebra::{DMatrix, DVector, Matrix2x6, Matrix6, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{BoardSpec, PointIndex};
use crate::camera::{CameraModel, ModelKind, Pixel, Point3};
use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::lm::{self, DampedSystem, LeastSquares, LmSettings};
use crate::pose::{self, Pose, PoseConfig, MIN_POSE_POINTS};
use crate::report::{self, BinStat};

pub const MIN_FRAMES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub huber_delta_px: f64,
    /// Residuals above `outlier_factor * rms` are dropped after the first solve.
    pub outlier_factor: f64,
    pub outlier_floor_px: f64,
    pub max_iters: usize,
    /// Final RMS above which the solve is reported as diverged.
    pub diverged_rms_px: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { huber_delta_px: 1.0, outlier_factor: 3.0, outlier_floor_px: 0.01, max_iters: 100, diverged_rms_px: 25.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.huber_delta_px > 0.0 && self.outlier_factor > 0.0 && self.outlier_floor_px >= 0.0 && self.diverged_rms_px > 0.0) {
            return Err(Error::config("solver thresholds must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("solver.max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub frame: usize,
    pub tag: u32,
    pub corner: usize,
    pub residual_px: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: CameraModel,
    /// One entry per input frame; `None` for frames left out of the solve.
    pub poses: Vec<Option<Pose>>,
    pub rms_reproj_px: f64,
    pub per_bin_stats: Vec<BinStat>,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub outliers: Vec<OutlierRecord>,
    /// Robust cost after each accepted step, across both solves.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

/// Neutral starting intrinsics for a model from a horizontal field-of-view hint.
///
/// The principal point is the image center. Pinhole focal length follows the tangent
/// law; the fisheye models use the equidistant law `f = (w/2) / theta_max`.
pub fn initial_intrinsics(kind: ModelKind, fov_hint_deg: f64, width: u32, height: u32) -> Result<CameraModel> {
    if !(fov_hint_deg > 0.0 && fov_hint_deg < 360.0) {
        return Err(Error::config("fov hint must lie in (0, 360) degrees"));
    }
    let half = 0.5 * fov_hint_deg.to_radians();
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let w2 = width as f64 / 2.0;
    match kind {
        ModelKind::Pinhole => {
            if half >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::config("pinhole fov hint must be below 180 degrees"));
            }
            let f = w2 / half.tan();
            CameraModel::pinhole(f, f, cx, cy, width, height)
        }
        ModelKind::DoubleSphere => {
            let f = w2 / half;
            CameraModel::double_sphere([f, f, cx, cy, 0.5, 0.5], width, height)
        }
        ModelKind::KannalaBrandt => {
            let f = w2 / half;
            let max_theta = half.max(crate::camera::KannalaBrandt::DEFAULT_MAX_THETA_DEG.to_radians());
            CameraModel::kannala_brandt([f, f, cx, cy, 0.0, 0.0, 0.0, 0.0], max_theta, width, height)
        }
        ModelKind::OmniRadtan => {
            let f = w2 / half;
            CameraModel::omni_radtan([1.0, f, f, cx, cy, 0.0, 0.0, 0.0, 0.0], width, height)
        }
    }
}

/// Starting models for [`bootstrap`]: the neutral start first, then, for the sphere
/// models, a small grid over the shape parameters. Each double sphere start has its
/// focal length scaled so that it images a 60 degree ray at the same radius as the
/// neutral start.
pub fn bootstrap_starts(kind: ModelKind, fov_hint_deg: f64, width: u32, height: u32) -> Result<Vec<CameraModel>> {
    let neutral = initial_intrinsics(kind, fov_hint_deg, width, height)?;
    let mut starts = vec![neutral];
    let p = neutral.params();
    match kind {
        ModelKind::DoubleSphere => {
            let t = 60f64.to_radians();
            let ray = Point3::new(t.sin(), 0.0, t.cos());
            let r_ref = (neutral.project(&ray)? - Pixel::new(p[2], p[3])).norm();
            for xi in [-0.3, -0.15, 0.0, 0.25, 0.5] {
                for alpha in [0.5, 0.6, 0.7] {
                    if (xi, alpha) != (0.5, 0.5) {
                        let unit = neutral.with_params(&[1.0, 1.0, p[2], p[3], xi, alpha])?;
                        let Ok(u) = unit.project(&ray) else { continue };
                        let f = r_ref / (u - Pixel::new(p[2], p[3])).norm();
                        starts.push(neutral.with_params(&[f, f, p[2], p[3], xi, alpha])?);
                    }
                }
            }
        }
        ModelKind::OmniRadtan => {
            for xi in [0.5, 1.5, 2.0] {
                let mut q = p.clone();
                q[0] = xi;
                starts.push(neutral.with_params(&q)?);
            }
        }
        ModelKind::Pinhole | ModelKind::KannalaBrandt => {}
    }
    Ok(starts)
}

/// Calibrates from scratch: per-frame poses under each start model, a full solve from
/// each, and the result with the lowest RMS.
pub fn bootstrap(
    detections: &[Detection],
    n_frames: usize,
    board: &BoardSpec,
    starts: &[CameraModel],
    pose_cfg: &PoseConfig,
    cfg: &SolverConfig,
) -> Result<CalibrationResult> {
    let mut best: Option<(f64, CalibrationResult)> = None;
    let mut last_err = Error::InsufficientPoints { needed: MIN_FRAMES, got: 0 };
    for start in starts {
        let poses = initial_poses(detections, n_frames, board, start, pose_cfg);
        let solved = solve_full(detections, board, start, &poses, cfg).and_then(|first| {
            let missing = first.poses.iter().filter(|p| p.is_none()).count();
            if missing == 0 {
                return Ok(first);
            }
            let mut poses = initial_poses(detections, n_frames, board, &first.model, pose_cfg);
            for (p, q) in poses.iter_mut().zip(&first.poses) {
                if q.is_some() {
                    *p = *q;
                }
            }
            solve_full(detections, board, &first.model, &poses, cfg)
        });
        match solved {
            Ok(r) => {
                let score = rms_all(&r, detections, board);
                log::debug!("bootstrap start {:?}: rms {:.4}, all {score:.4}", start.params(), r.rms_reproj_px);
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((score, r));
                }
            }
            Err(e) => {
                log::debug!("bootstrap start {:?}: {e}", start.params());
                last_err = e;
            }
        }
    }
    best.map(|(_, r)| r).ok_or(last_err)
}

/// RMS over every detection with a solved frame, outliers included.
pub fn rms_all(result: &CalibrationResult, detections: &[Detection], board: &BoardSpec) -> f64 {
    let (mut sq, mut n) = (0.0, 0usize);
    for d in detections {
        let Some(Some(pose)) = result.poses.get(d.frame) else { continue };
        if let Ok(u) = result.model.project(&pose.transform(&board.position(d.point))) {
            sq += (u - d.pixel).norm_squared();
            n += 1;
        }
    }
    if n == 0 { f64::INFINITY } else { (sq / n as f64).sqrt() }
}

/// Per-frame poses from detections under a fixed model. Frames whose pose cannot be
/// estimated are `None`.
pub fn initial_poses(detections: &[Detection], n_frames: usize, board: &BoardSpec, model: &CameraModel, cfg: &PoseConfig) -> Vec<Option<Pose>> {
    let mut per_frame: Vec<Vec<(PointIndex, Pixel)>> = vec![Vec::new(); n_frames];
    for d in detections.iter().filter(|d| d.frame < n_frames) {
        per_frame[d.frame].push((d.point, d.pixel));
    }
    per_frame
        .par_iter()
        .enumerate()
        .map(|(f, obs)| match pose::estimate_pose(obs, board, model, cfg) {
            Ok(p) => Some(p),
            Err(e) => {
                log::debug!("frame {f}: no initial pose: {e}");
                None
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
struct FrameData {
    frame: usize,
    points: Vec<Point3>,
    pixels: Vec<Pixel>,
    /// Index of each observation in the caller's detection list.
    source: Vec<usize>,
}

#[derive(Clone, Debug)]
struct State {
    model: CameraModel,
    poses: Vec<Pose>,
}

struct CalibProblem<'a> {
    frames: &'a [FrameData],
    delta: f64,
}

fn huber(r: f64, delta: f64) -> (f64, f64) {
    if r <= delta {
        (0.5 * r * r, 1.0)
    } else {
        (delta * (r - 0.5 * delta), delta / r)
    }
}

struct FrameBlock {
    a: DMatrix<f64>,
    ga: DVector<f64>,
    b: DMatrix<f64>,
    d: Matrix6<f64>,
    gf: Vector6<f64>,
    cost: f64,
}

/// Block form of the normal equations: intrinsics block `a`, pose blocks `d[f]` and
/// couplings `b[f]` (P x 6).
pub(crate) struct BlockSystem {
    a: DMatrix<f64>,
    ga: DVector<f64>,
    b: Vec<DMatrix<f64>>,
    d: Vec<Matrix6<f64>>,
    gf: Vec<Vector6<f64>>,
    cost: f64,
}

fn damp(m: &mut DMatrix<f64>, lambda: f64) {
    for i in 0..m.nrows() {
        m[(i, i)] += lambda * m[(i, i)].max(1e-12);
    }
}

impl BlockSystem {
    fn num_params(&self) -> usize {
        self.a.nrows()
    }

    /// Assembles the full dense system, for validation.
    #[cfg(test)]
    pub(crate) fn dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.num_params();
        let n = p + 6 * self.d.len();
        let mut h = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        h.view_mut((0, 0), (p, p)).copy_from(&self.a);
        g.rows_mut(0, p).copy_from(&self.ga);
        for (f, (b, d)) in self.b.iter().zip(&self.d).enumerate() {
            let o = p + 6 * f;
            h.view_mut((0, o), (p, 6)).copy_from(b);
            h.view_mut((o, 0), (6, p)).copy_from(&b.transpose());
            h.view_mut((o, o), (6, 6)).copy_from(d);
            g.rows_mut(o, 6).copy_from(&self.gf[f]);
        }
        (h, g)
    }

    /// Schur complement of the pose blocks, with pose blocks damped by `lambda`.
    fn reduce(&self, lambda: f64) -> Option<(DMatrix<f64>, DVector<f64>, Vec<Matrix6<f64>>)> {
        let mut s = self.a.clone();
        damp(&mut s, lambda);
        let mut rhs = -&self.ga;
        let mut d_inv = Vec::with_capacity(self.d.len());
        for ((b, d), gf) in self.b.iter().zip(&self.d).zip(&self.gf) {
            let mut dd = *d;
            for i in 0..6 {
                dd[(i, i)] += lambda * dd[(i, i)].max(1e-12);
            }
            let inv = dd.cholesky()?.inverse();
            let bdi = b * inv;
            s -= &bdi * b.transpose();
            rhs += &bdi * gf;
            d_inv.push(inv);
        }
        Some((s, rhs, d_inv))
    }

    /// Smallest eigenvalue of the correlation-scaled Schur complement and of every pose
    /// block. Near-zero values mean some parameter direction is unobservable.
    pub(crate) fn min_scaled_eigenvalue(&self) -> f64 {
        let scaled_min = |m: &DMatrix<f64>| {
            let n = m.nrows();
            let mut c = m.clone();
            for i in 0..n {
                for j in 0..n {
                    let s = (m[(i, i)] * m[(j, j)]).sqrt();
                    c[(i, j)] = if s > 0.0 { m[(i, j)] / s } else { 0.0 };
                }
            }
            c.symmetric_eigenvalues().min()
        };
        let mut min = f64::INFINITY;
        for d in &self.d {
            min = min.min(scaled_min(&DMatrix::from_column_slice(6, 6, d.as_slice())));
        }
        match self.reduce(0.0) {
            Some((s, _, _)) => min.min(scaled_min(&s)),
            None => f64::NEG_INFINITY,
        }
    }
}

impl DampedSystem for BlockSystem {
    fn cost(&self) -> f64 {
        self.cost
    }

    fn gradient_max(&self) -> f64 {
        self.gf.iter().map(|g| g.amax()).fold(self.ga.amax(), f64::max)
    }

    fn solve_damped(&self, lambda: f64) -> Option<DVector<f64>> {
        let (s, rhs, d_inv) = self.reduce(lambda)?;
        let da = s.cholesky()?.solve(&rhs);
        let p = self.num_params();
        let mut out = DVector::zeros(p + 6 * self.d.len());
        out.rows_mut(0, p).copy_from(&da);
        for (f, ((b, gf), inv)) in self.b.iter().zip(&self.gf).zip(&d_inv).enumerate() {
            let df = inv * (-gf - b.transpose() * &da);
            out.rows_mut(p + 6 * f, 6).copy_from(&df);
        }
        Some(out)
    }
}

impl CalibProblem<'_> {
    fn frame_block(&self, fd: &FrameData, model: &CameraModel, pose: &Pose) -> Result<FrameBlock> {
        let p = model.num_params();
        let mut blk = FrameBlock {
            a: DMatrix::zeros(p, p),
            ga: DVector::zeros(p),
            b: DMatrix::zeros(p, 6),
            d: Matrix6::zeros(),
            gf: Vector6::zeros(),
            cost: 0.0,
        };
        let r = pose.rotation_matrix();
        for (x, u) in fd.points.iter().zip(&fd.pixels) {
            let rx = r * x;
            let pc = rx + pose.translation;
            let proj = model.project(&pc)?;
            let (jp, jpar) = model.project_jacobians(&pc)?;
            let e = proj - u;
            let (rho, w) = huber(e.norm(), self.delta);
            blk.cost += rho;
            let mut jpose = Matrix2x6::zeros();
            jpose.fixed_view_mut::<2, 3>(0, 0).copy_from(&(jp * -pose::skew(&rx)));
            jpose.fixed_view_mut::<2, 3>(0, 3).copy_from(&jp);
            let jpar_t = jpar.transpose();
            blk.a += &jpar_t * &jpar * w;
            blk.ga += &jpar_t * e * w;
            blk.b += &jpar_t * jpose * w;
            blk.d += jpose.transpose() * jpose * w;
            blk.gf += jpose.transpose() * e * w;
        }
        Ok(blk)
    }
}

impl LeastSquares for CalibProblem<'_> {
    type State = State;
    type System = BlockSystem;

    fn linearize(&self, state: &State) -> Result<BlockSystem> {
        let blocks: Vec<FrameBlock> = self
            .frames
            .par_iter()
            .zip(state.poses.par_iter())
            .map(|(fd, pose)| self.frame_block(fd, &state.model, pose))
            .collect::<Result<_>>()?;
        let p = state.model.num_params();
        let mut sys = BlockSystem {
            a: DMatrix::zeros(p, p),
            ga: DVector::zeros(p),
            b: Vec::with_capacity(blocks.len()),
            d: Vec::with_capacity(blocks.len()),
            gf: Vec::with_capacity(blocks.len()),
            cost: 0.0,
        };
        for blk in blocks {
            sys.a += blk.a;
            sys.ga += blk.ga;
            sys.cost += blk.cost;
            sys.b.push(blk.b);
            sys.d.push(blk.d);
            sys.gf.push(blk.gf);
        }
        Ok(sys)
    }

    fn cost(&self, state: &State) -> Result<f64> {
        let costs: Vec<f64> = self
            .frames
            .par_iter()
            .zip(state.poses.par_iter())
            .map(|(fd, pose)| {
                fd.points.iter().zip(&fd.pixels).try_fold(0.0, |acc, (x, u)| {
                    let e = state.model.project(&pose.transform(x))? - u;
                    Ok::<_, Error>(acc + huber(e.norm(), self.delta).0)
                })
            })
            .collect::<Result<_>>()?;
        Ok(costs.iter().sum())
    }

    fn retract(&self, state: &State, delta: &DVector<f64>) -> Result<State> {
        let p = state.model.num_params();
        let params: Vec<f64> = state.model.params().iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
        let model = state.model.with_params(&params)?;
        let poses = state.poses.iter().enumerate().map(|(f, pose)| pose.retract(delta.rows(p + 6 * f, 6).as_slice())).collect();
        Ok(State { model, poses })
    }

    fn state_norm(&self, state: &State) -> f64 {
        state.model.params().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Groups detections by frame, keeping observations projectable at the initial state
/// and frames with at least [`MIN_POSE_POINTS`] of them.
fn gather(
    detections: &[Detection],
    keep: &[bool],
    board: &BoardSpec,
    model: &CameraModel,
    poses: &[Option<Pose>],
) -> (Vec<FrameData>, Vec<Pose>) {
    let mut per_frame: Vec<FrameData> =
        (0..poses.len()).map(|frame| FrameData { frame, points: Vec::new(), pixels: Vec::new(), source: Vec::new() }).collect();
    for (i, d) in detections.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        let Some(Some(pose)) = poses.get(d.frame) else { continue };
        let x = board.position(d.point);
        if model.project(&pose.transform(&x)).is_err() {
            continue;
        }
        let fd = &mut per_frame[d.frame];
        fd.points.push(x);
        fd.pixels.push(d.pixel);
        fd.source.push(i);
    }
    per_frame
        .into_iter()
        .filter(|fd| fd.points.len() >= MIN_POSE_POINTS)
        .map(|fd| {
            let pose = poses[fd.frame].expect("frame has a pose");
            (fd, pose)
        })
        .unzip()
}

/// Residual norm of each observation, keyed by detection index.
fn residual_norms(frames: &[FrameData], state: &State) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (fd, pose) in frames.iter().zip(&state.poses) {
        for ((x, u), &src) in fd.points.iter().zip(&fd.pixels).zip(&fd.source) {
            let r = state.model.project(&pose.transform(x)).map(|p| (p - u).norm()).unwrap_or(f64::INFINITY);
            out.push((src, r));
        }
    }
    out
}

fn run_lm(frames: &[FrameData], state: State, cfg: &SolverConfig) -> Result<lm::LmReport<State>> {
    let n_obs: usize = frames.iter().map(|f| f.points.len()).sum();
    let unknowns = state.model.num_params() + 6 * frames.len();
    if frames.len() < MIN_FRAMES {
        return Err(Error::InsufficientPoints { needed: MIN_FRAMES, got: frames.len() });
    }
    if 2 * n_obs < unknowns {
        return Err(Error::InsufficientPoints { needed: unknowns.div_ceil(2), got: n_obs });
    }
    let problem = CalibProblem { frames, delta: cfg.huber_delta_px };
    let settings = LmSettings { max_iters: cfg.max_iters, ftol: 1e-12, xtol: 1e-12, ..LmSettings::default() };
    lm::minimize(&problem, state, &settings)
}

/// Jointly refines the model and every frame pose in `poses_init` against `detections`.
///
/// Frames without an initial pose, and observations that cannot be projected at the
/// initial state, are left out. After the first convergence, residuals larger than
/// `max(outlier_factor * rms, outlier_floor_px)` are dropped and the problem is solved
/// once more.
pub fn solve_full(
    detections: &[Detection],
    board: &BoardSpec,
    model_init: &CameraModel,
    poses_init: &[Option<Pose>],
    cfg: &SolverConfig,
) -> Result<CalibrationResult> {
    cfg.validate()?;
    let mut keep = vec![true; detections.len()];
    let (frames, poses) = gather(detections, &keep, board, model_init, poses_init);
    let first = run_lm(&frames, State { model: *model_init, poses }, cfg)?;
    let mut history = first.cost_history.clone();
    let mut iterations = first.iterations;

    let norms = residual_norms(&frames, &first.state);
    let rms = (norms.iter().map(|(_, r)| r * r).sum::<f64>() / norms.len() as f64).sqrt();
    let threshold = (cfg.outlier_factor * rms).max(cfg.outlier_floor_px);
    let mut outliers = Vec::new();
    for &(src, r) in &norms {
        if !(r <= threshold) {
            keep[src] = false;
            let d = &detections[src];
            outliers.push(OutlierRecord {
                frame: d.frame,
                tag: board.tag_id(d.point.tag_row, d.point.tag_col),
                corner: d.point.corner,
                residual_px: r,
            });
        }
    }

    let (frames, state) = if outliers.is_empty() {
        (frames, first.state)
    } else {
        let mut current: Vec<Option<Pose>> = vec![None; poses_init.len()];
        for (fd, pose) in frames.iter().zip(&first.state.poses) {
            current[fd.frame] = Some(*pose);
        }
        let (frames, poses) = gather(detections, &keep, board, &first.state.model, &current);
        let second = run_lm(&frames, State { model: first.state.model, poses }, cfg)?;
        history.extend(second.cost_history.iter().skip(1));
        iterations += second.iterations;
        (frames, second.state)
    };

    let norms = residual_norms(&frames, &state);
    let n_inliers = norms.len();
    let rms = (norms.iter().map(|(_, r)| r * r).sum::<f64>() / n_inliers as f64).sqrt();
    if !(rms <= cfg.diverged_rms_px) {
        return Err(Error::SolverDiverged(format!("final rms {rms:.3} px")));
    }

    let problem = CalibProblem { frames: &frames, delta: cfg.huber_delta_px };
    let min_eig = problem.linearize(&state)?.min_scaled_eigenvalue();
    if !(min_eig > 1e-10) {
        return Err(Error::RankDeficient(format!("smallest scaled eigenvalue {min_eig:.3e}")));
    }

    let mut poses: Vec<Option<Pose>> = vec![None; poses_init.len()];
    for (fd, pose) in frames.iter().zip(&state.poses) {
        poses[fd.frame] = Some(*pose);
    }
    let inliers: Vec<Detection> = norms.iter().map(|&(src, _)| detections[src]).collect();
    let per_bin_stats = report::reprojection_report(&state.model, &poses, board, &inliers);
    Ok(CalibrationResult {
        model: state.model,
        poses,
        rms_reproj_px: rms,
        per_bin_stats,
        n_inliers,
        n_outliers: outliers.len(),
        outliers,
        cost_history: history,
        iterations,
    })
}
