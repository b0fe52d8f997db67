//! Iterative calibration: detect, solve, reproject the board through the current
//! estimate, keep reprojections witnessed by image quads, refine, and solve again.
//!
//! Also hosts the virtual pinhole (cube face) undistortion used by the `undistort`
//! mode.

use std::collections::BTreeMap;

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{BoardSpec, PointIndex};
use crate::camera::{CameraModel, Pixel};
use crate::detector::{self, Detection, DetectorConfig, Provenance, Quad};
use crate::error::{Error, Result};
use crate::pose::{self, Pose, PoseConfig};
use crate::raster::GrayImage;
use crate::refine::{self, RefineConfig};
use crate::report;
use crate::solver::{self, CalibrationResult, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Detector features only, refined in place.
    None,
    #[default]
    Reproject,
    Undistort,
    Both,
}

impl Mode {
    fn reprojects(self) -> bool {
        matches!(self, Mode::Reproject | Mode::Both)
    }

    fn undistorts(self) -> bool {
        matches!(self, Mode::Undistort | Mode::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub iterations: usize,
    pub mode: Mode,
    /// Reprojections must lie within this fraction of their window of a quad corner.
    pub filter_dist_frac: f64,
    pub cube_face_fov_deg: f64,
    pub cube_face_res: u32,
    /// Frames beyond this count are subsampled uniformly.
    pub max_frames: usize,
    /// Pose acceptance threshold while bootstrapping from a neutral model, radians.
    pub bootstrap_max_rms_rad: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            iterations: 3,
            mode: Mode::Reproject,
            filter_dist_frac: 0.5,
            cube_face_fov_deg: 90.0,
            cube_face_res: 480,
            max_frames: 500,
            bootstrap_max_rms_rad: 0.3,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("pipeline.iterations must be at least 1"));
        }
        if !(self.filter_dist_frac > 0.0 && self.filter_dist_frac <= 1.0) {
            return Err(Error::config("pipeline.filter_dist_frac must lie in (0, 1]"));
        }
        if !(self.cube_face_fov_deg > 0.0 && self.cube_face_fov_deg < 180.0) || self.cube_face_res == 0 {
            return Err(Error::config("cube faces need a fov in (0, 180) degrees and a positive resolution"));
        }
        if self.max_frames == 0 {
            return Err(Error::config("pipeline.max_frames must be at least 1"));
        }
        Ok(())
    }
}

/// Every stage's settings for one calibration run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub detector: DetectorConfig,
    pub refine: RefineConfig,
    pub solver: SolverConfig,
    pub pose: PoseConfig,
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.detector.validate()?;
        self.refine.validate()?;
        self.solver.validate()
    }
}

/// A virtual pinhole camera looking along `rotation * z` from the source camera center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualPinhole {
    pub camera: CameraModel,
    /// Maps virtual-camera bearings into the source camera frame.
    pub rotation: UnitQuaternion<f64>,
}

/// Five faces of a cube around the source camera: `+z`, then four faces at 90 degrees
/// polar angle with azimuths 0, 90, 180 and 270 degrees.
pub fn build_cube_faces(cfg: &PipelineConfig) -> Result<Vec<VirtualPinhole>> {
    let res = cfg.cube_face_res;
    let f = 0.5 * res as f64 / (0.5 * cfg.cube_face_fov_deg.to_radians()).tan();
    let c = (res as f64 - 1.0) / 2.0;
    let camera = CameraModel::pinhole(f, f, c, c, res, res)?;
    let mut faces = vec![VirtualPinhole { camera, rotation: UnitQuaternion::identity() }];
    let ry = UnitQuaternion::from_rotation_matrix(&Rotation3::from_axis_angle(&Vector3::y_axis(), std::f64::consts::FRAC_PI_2));
    for k in 0..4 {
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), k as f64 * std::f64::consts::FRAC_PI_2);
        faces.push(VirtualPinhole { camera, rotation: rz * ry });
    }
    Ok(faces)
}

/// Source-image location of a face pixel.
pub fn face_to_source(u: &Pixel, model: &CameraModel, face: &VirtualPinhole) -> Option<Pixel> {
    let b = face.camera.unproject(u).ok()?;
    model.project(&(face.rotation * b)).ok()
}

/// Resamples the source image into a face. Pixels without a source are 0.
pub fn undistort_to_face(img: &GrayImage, model: &CameraModel, face: &VirtualPinhole) -> GrayImage {
    let (w, h) = (face.camera.width as usize, face.camera.height as usize);
    let mut data = vec![0f32; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = face_to_source(&Pixel::new(x as f64, y as f64), model, face)
                .and_then(|s| img.sample(s.x, s.y))
                .map_or(0.0, |v| v as f32);
        }
    });
    GrayImage::from_vec(w, h, data).expect("buffer sized to the face")
}

/// Board points whose projection under `pose` lands in the image.
pub fn reproject_board(board: &BoardSpec, pose: &Pose, model: &CameraModel) -> Vec<(PointIndex, Pixel)> {
    board
        .board_points()
        .iter()
        .filter_map(|bp| model.project_in_image(&pose.transform(&bp.position)).map(|u| (bp.index, u)))
        .collect()
}

/// Keeps reprojected points that serve as the nearest reprojection to a quad corner
/// within `frac * window`. A quad contributes only when all four of its corners match
/// distinct points.
pub fn filter_corners(reprojected: &[(PointIndex, Pixel)], windows: &[f64], quads: &[Quad], frac: f64) -> Vec<(PointIndex, Pixel)> {
    assert_eq!(reprojected.len(), windows.len());
    let mut kept = vec![false; reprojected.len()];
    for q in quads {
        let mut matched = [usize::MAX; 4];
        let all = q.corners.iter().zip(matched.iter_mut()).all(|(c, m)| {
            let nearest = reprojected
                .iter()
                .enumerate()
                .map(|(i, (_, p))| (i, (p - c).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            match nearest {
                Some((i, d)) if d <= frac * windows[i] => {
                    *m = i;
                    true
                }
                _ => false,
            }
        });
        let distinct = (0..4).all(|a| (a + 1..4).all(|b| matched[a] != matched[b]));
        if all && distinct {
            for i in matched {
                kept[i] = true;
            }
        }
    }
    reprojected.iter().zip(kept).filter(|(_, k)| *k).map(|(r, _)| *r).collect()
}

/// Evenly spaced frame indices, at most `max` of `n`.
pub fn select_frames(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    (0..max).map(|i| i * n / max).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub feature_count: usize,
    pub direct_count: usize,
    pub reprojected_count: usize,
    pub refined_count: usize,
    pub per_bin_counts: Vec<usize>,
    pub rms_px: f64,
    pub model_params: Vec<f64>,
    pub frames_posed: usize,
    /// Set when the iteration was abandoned and the previous result kept.
    pub aborted: bool,
}

#[derive(Clone, Debug)]
pub struct IterationOutput {
    /// Features fed to this iteration's solve.
    pub detections: Vec<Detection>,
    pub result: CalibrationResult,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub result: CalibrationResult,
    pub detections: Vec<Detection>,
    pub trace: Vec<IterationTrace>,
    /// Completed iterations in order.
    pub iterations: Vec<IterationOutput>,
}

struct FrameFeatures {
    quads: Vec<Quad>,
    direct: Vec<Detection>,
}

/// Decoded features found in the cube faces, mapped back into the source image.
fn face_detections(img: &GrayImage, frame: usize, board: &BoardSpec, model: &CameraModel, faces: &[VirtualPinhole], cfg: &DetectorConfig) -> Vec<Detection> {
    let mut out = Vec::new();
    for face in faces {
        let face_img = undistort_to_face(img, model, face);
        let Ok(found) = detector::detect(&face_img, board, cfg, frame) else { continue };
        for mut d in found {
            if let Some(p) = face_to_source(&d.pixel, model, face).filter(|p| model.in_image(p)) {
                d.pixel = p;
                out.push(d);
            }
        }
    }
    out
}

/// Union keyed by board point; earlier sets win.
fn merge(sets: &[&[Detection]]) -> Vec<Detection> {
    let mut map: BTreeMap<PointIndex, Detection> = BTreeMap::new();
    for set in sets {
        for d in set.iter() {
            map.entry(d.point).or_insert(*d);
        }
    }
    map.into_values().collect()
}

fn trace_entry(iteration: usize, detections: &[Detection], result: &CalibrationResult, aborted: bool) -> IterationTrace {
    IterationTrace {
        iteration,
        feature_count: detections.len(),
        direct_count: detections.iter().filter(|d| d.provenance == Provenance::Direct).count(),
        reprojected_count: detections.iter().filter(|d| d.provenance == Provenance::Reprojected).count(),
        refined_count: detections.iter().filter(|d| d.refined).count(),
        per_bin_counts: result.per_bin_stats.iter().map(|b| b.count).collect(),
        rms_px: result.rms_reproj_px,
        model_params: result.model.params(),
        frames_posed: result.poses.iter().flatten().count(),
        aborted,
    }
}

/// One refinement pass over a frame: the features of iteration `k >= 2`.
fn frame_features(
    img: &GrayImage,
    frame: usize,
    feats: &FrameFeatures,
    pose: &Pose,
    board: &BoardSpec,
    model: &CameraModel,
    faces: &[VirtualPinhole],
    settings: &Settings,
) -> Vec<Detection> {
    let cfg = &settings.pipeline;
    let mut direct = feats.direct.clone();
    if cfg.mode.undistorts() {
        let extra = face_detections(img, frame, board, model, faces, &settings.detector);
        direct = merge(&[&direct, &extra]);
    }
    let mut reprojected = Vec::new();
    if cfg.mode.reprojects() {
        let projected = refine::project_board(board, pose, model);
        let raw = refine::raw_window_sizes(&projected, settings.refine.s);
        let candidates = reproject_board(board, pose, model);
        let windows: Vec<f64> =
            candidates.iter().map(|(i, _)| settings.refine.clamp_window(raw[board.flat_index(*i)].unwrap_or(settings.refine.w_min))).collect();
        reprojected = filter_corners(&candidates, &windows, &feats.quads, cfg.filter_dist_frac)
            .into_iter()
            .map(|(point, pixel)| Detection { frame, point, pixel, provenance: Provenance::Reprojected, refined: false })
            .collect();
    }
    let merged = merge(&[&direct, &reprojected]);
    refine::refine_all(&merged, img, board, pose, model, &settings.refine)
        .into_iter()
        .filter(|d| d.refined || d.provenance != Provenance::Reprojected)
        .collect()
}

/// Runs the iterative calibration on a list of frames.
///
/// Iteration 1 solves from detector features only, trying each model in `starts`.
/// Later iterations reproject the board through the latest estimate, keep
/// reprojections witnessed by quads, merge them with the detector features (which win
/// on the same board point), refine every feature and solve again from the latest
/// estimate.
pub fn run_pipeline(frames: &[GrayImage], board: &BoardSpec, starts: &[CameraModel], settings: &Settings) -> Result<PipelineOutput> {
    settings.validate()?;
    if frames.is_empty() {
        return Err(Error::config("dataset has no frames"));
    }
    if starts.is_empty() {
        return Err(Error::config("no starting model"));
    }
    let cfg = &settings.pipeline;
    let selected = select_frames(frames.len(), cfg.max_frames);
    let features: Vec<Option<FrameFeatures>> = {
        let mut all: Vec<Option<FrameFeatures>> = (0..frames.len()).map(|_| None).collect();
        let found: Vec<(usize, Result<(Vec<Quad>, Vec<Detection>)>)> =
            selected.par_iter().map(|&f| (f, detector::detect_frame(&frames[f], board, &settings.detector, f))).collect();
        for (f, r) in found {
            let (quads, direct) = r?;
            all[f] = Some(FrameFeatures { quads, direct });
        }
        all
    };
    let direct: Vec<Detection> = features.iter().flatten().flat_map(|f| f.direct.iter().copied()).collect();
    log::info!("iteration 1: {} detector features in {} frames", direct.len(), selected.len());

    let boot_pose = PoseConfig { max_rms_rad: cfg.bootstrap_max_rms_rad.max(settings.pose.max_rms_rad), ..settings.pose };
    let first = solver::bootstrap(&direct, frames.len(), board, starts, &boot_pose, &settings.solver)?;
    let mut trace = vec![trace_entry(1, &direct, &first, false)];
    let mut iterations = vec![IterationOutput { detections: direct.clone(), result: first }];
    let faces = if cfg.mode.undistorts() { build_cube_faces(cfg)? } else { Vec::new() };

    for k in 2..=cfg.iterations {
        let prev = &iterations.last().expect("at least one iteration").result;
        let model = prev.model;
        let poses: Vec<(usize, Result<Pose>)> = selected
            .par_iter()
            .filter_map(|&f| {
                let feats = features[f].as_ref()?;
                if let Some(p) = prev.poses[f] {
                    return Some((f, Ok(p)));
                }
                let obs: Vec<(PointIndex, Pixel)> = feats.direct.iter().map(|d| (d.point, d.pixel)).collect();
                Some((f, pose::estimate_pose(&obs, board, &model, &settings.pose)))
            })
            .collect();
        let with_features = selected.iter().filter(|&&f| features[f].as_ref().is_some_and(|x| !x.direct.is_empty())).count();
        let diverged = poses.iter().filter(|(_, p)| matches!(p, Err(Error::PoseDiverged(_)))).count();
        if 2 * diverged > with_features {
            log::warn!("iteration {k}: pose diverged in {diverged} of {with_features} frames, keeping iteration {}", k - 1);
            let last = iterations.last().expect("at least one iteration");
            trace.push(trace_entry(k, &last.detections, &last.result, true));
            break;
        }
        let mut pose_init: Vec<Option<Pose>> = vec![None; frames.len()];
        for (f, p) in &poses {
            pose_init[*f] = p.as_ref().ok().copied();
        }
        let per_frame: Vec<Vec<Detection>> = poses
            .par_iter()
            .filter_map(|(f, p)| {
                let pose = p.as_ref().ok()?;
                let feats = features[*f].as_ref()?;
                Some(frame_features(&frames[*f], *f, feats, pose, board, &model, &faces, settings))
            })
            .collect();
        let merged: Vec<Detection> = per_frame.into_iter().flatten().collect();
        log::info!("iteration {k}: {} features", merged.len());
        let result = solver::solve_full(&merged, board, &model, &pose_init, &settings.solver)
            .map_err(|e| Error::SolverDiverged(format!("iteration {k}: {e}")))?;
        trace.push(trace_entry(k, &merged, &result, false));
        iterations.push(IterationOutput { detections: merged, result });
    }

    let last = iterations.last().expect("at least one iteration");
    Ok(PipelineOutput { result: last.result.clone(), detections: last.detections.clone(), trace, iterations })
}

/// Per-bin feature counts of a detection set under a calibration.
pub fn bin_counts(result: &CalibrationResult, board: &BoardSpec, detections: &[Detection]) -> Vec<usize> {
    report::reprojection_report(&result.model, &result.poses, board, detections).iter().map(|b| b.count).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(corners: [(f64, f64); 4]) -> Quad {
        Quad { corners: corners.map(|(x, y)| Pixel::new(x, y)), decoded_id: None, decode_hamming: 0 }
    }

    fn idx(c: usize) -> PointIndex {
        PointIndex { tag_row: 0, tag_col: 0, corner: c }
    }

    #[test]
    fn filter_requires_all_four_corners() {
        let reproj = vec![
            (idx(0), Pixel::new(10.0, 10.0)),
            (idx(1), Pixel::new(20.0, 10.0)),
            (idx(2), Pixel::new(20.0, 20.0)),
            (idx(3), Pixel::new(10.0, 20.0)),
        ];
        let windows = vec![4.0; 4];
        let good = quad([(10.5, 10.0), (20.0, 10.5), (19.5, 20.0), (10.0, 19.6)]);
        assert_eq!(filter_corners(&reproj, &windows, &[good], 0.5).len(), 4);
        let bad = quad([(10.5, 10.0), (20.0, 10.5), (19.5, 20.0), (10.0, 23.0)]);
        assert!(filter_corners(&reproj, &windows, &[bad], 0.5).is_empty());
        assert!(filter_corners(&reproj, &windows, &[], 0.5).is_empty());
    }

    #[test]
    fn cube_faces_are_orthogonal() {
        let faces = build_cube_faces(&PipelineConfig::default()).unwrap();
        assert_eq!(faces.len(), 5);
        assert_eq!(faces[0].rotation, UnitQuaternion::identity());
        let axes: Vec<Vector3<f64>> = faces.iter().map(|f| f.rotation * Vector3::z()).collect();
        for (k, a) in axes.iter().enumerate().skip(1) {
            assert!(a.z.abs() < 1e-12);
            let az = a.y.atan2(a.x).to_degrees().rem_euclid(360.0);
            assert!((az - 90.0 * (k - 1) as f64).abs() < 1e-9);
        }
        for i in 0..3 {
            assert!(axes[0].dot(&axes[i + 1]).abs() < 1e-12);
            assert!(axes[i + 1].dot(&axes[i + 2]).abs() < 1e-12 || i == 2);
        }
    }

    #[test]
    fn frame_selection() {
        assert_eq!(select_frames(3, 5), vec![0, 1, 2]);
        assert_eq!(select_frames(10, 5), vec![0, 2, 4, 6, 8]);
    }
}
