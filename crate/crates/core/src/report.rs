//! Feature coverage and reprojection statistics binned by polar angle.

use serde::{Deserialize, Serialize};

use crate::board::BoardSpec;
use crate::camera::CameraModel;
use crate::detector::Detection;
use crate::pose::Pose;

pub const BIN_WIDTH_DEG: f64 = 10.0;
pub const NUM_BINS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub bin_lo_deg: f64,
    pub bin_hi_deg: f64,
    pub count: usize,
    /// `count` divided by the number of board points visible in the bin.
    pub normalized: f64,
    pub rms_px: f64,
}

/// Bin of a polar angle in degrees. Angles past the last bin are counted in it.
pub fn polar_bin(deg: f64) -> usize {
    ((deg.max(0.0) / BIN_WIDTH_DEG) as usize).min(NUM_BINS - 1)
}

/// Histogram of polar angles in degrees.
pub fn bin_counts(angles_deg: impl IntoIterator<Item = f64>) -> [usize; NUM_BINS] {
    let mut out = [0; NUM_BINS];
    for a in angles_deg {
        out[polar_bin(a)] += 1;
    }
    out
}

fn polar_deg(p: &nalgebra::Vector3<f64>) -> f64 {
    (p.z / p.norm()).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Per-bin counts, coverage and RMS of `detections` under a calibration.
///
/// A feature's polar angle is that of its board point under the frame pose. The
/// normalizer counts, over frames with a pose, board points whose projection lands in
/// the image. Detections in frames without a pose are skipped.
pub fn reprojection_report(model: &CameraModel, poses: &[Option<Pose>], board: &BoardSpec, detections: &[Detection]) -> Vec<BinStat> {
    let mut counts = [0usize; NUM_BINS];
    let mut sq = [0f64; NUM_BINS];
    let mut visible = [0usize; NUM_BINS];
    for pose in poses.iter().flatten() {
        for bp in board.board_points() {
            let p = pose.transform(&bp.position);
            if model.project_in_image(&p).is_some() {
                visible[polar_bin(polar_deg(&p))] += 1;
            }
        }
    }
    for d in detections {
        let Some(Some(pose)) = poses.get(d.frame) else { continue };
        let p = pose.transform(&board.position(d.point));
        let bin = polar_bin(polar_deg(&p));
        counts[bin] += 1;
        if let Ok(u) = model.project(&p) {
            sq[bin] += (u - d.pixel).norm_squared();
        }
    }
    (0..NUM_BINS)
        .map(|b| BinStat {
            bin_lo_deg: b as f64 * BIN_WIDTH_DEG,
            bin_hi_deg: (b + 1) as f64 * BIN_WIDTH_DEG,
            count: counts[b],
            normalized: if visible[b] > 0 { counts[b] as f64 / visible[b] as f64 } else { 0.0 },
            rms_px: if counts[b] > 0 { (sq[b] / counts[b] as f64).sqrt() } else { 0.0 },
        })
        .collect()
}

/// CSV with header `bin_lo_deg,bin_hi_deg,count,normalized,rms_px`.
pub fn coverage_csv(stats: &[BinStat]) -> String {
    let mut out = String::from("bin_lo_deg,bin_hi_deg,count,normalized,rms_px\n");
    for s in stats {
        out.push_str(&format!("{},{},{},{:.6},{:.6}\n", s.bin_lo_deg, s.bin_hi_deg, s.count, s.normalized, s.rms_px));
    }
    out
}
