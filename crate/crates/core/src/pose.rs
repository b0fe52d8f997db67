//! Rigid target-to-camera poses and single-frame pose estimation.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SMatrix, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::board::BoardSpec;
use crate::camera::{CameraModel, Pixel, Point3};
use crate::error::{Error, Result};
use crate::lm::{self, LeastSquares, LmSettings, NormalEquations};

/// Maps target-frame points into the camera frame: `x_c = R x_t + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRecord", into = "PoseRecord")]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

/// `{"q": [w, x, y, z], "t": [x, y, z]}`
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct PoseRecord {
    q: [f64; 4],
    t: [f64; 3],
}

impl From<PoseRecord> for Pose {
    fn from(r: PoseRecord) -> Self {
        let q = nalgebra::Quaternion::new(r.q[0], r.q[1], r.q[2], r.q[3]);
        Pose { rotation: UnitQuaternion::from_quaternion(q), translation: Vector3::from(r.t) }
    }
}

impl From<Pose> for PoseRecord {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRecord { q: [q.w, q.i, q.j, q.k], t: p.translation.into() }
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: UnitQuaternion::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Pose from a rotation vector (axis times angle, radians) and a translation.
    pub fn from_axis_angle(omega: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation: UnitQuaternion::from_scaled_axis(omega), translation }
    }

    pub fn transform(&self, x: &Point3) -> Point3 {
        self.rotation * x + self.translation
    }

    pub fn inverse(&self) -> Self {
        let r = self.rotation.inverse();
        Self { rotation: r, translation: -(r * self.translation) }
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self { rotation: self.rotation * other.rotation, translation: self.rotation * other.translation + self.translation }
    }

    /// Left-perturbed update: `R <- exp(w) R`, `t <- t + dt` with `delta = (w, dt)`.
    pub fn retract(&self, delta: &[f64]) -> Self {
        let w = Vector3::new(delta[0], delta[1], delta[2]);
        let dt = Vector3::new(delta[3], delta[4], delta[5]);
        Self { rotation: UnitQuaternion::from_scaled_axis(w) * self.rotation, translation: self.translation + dt }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        *self.rotation.to_rotation_matrix().matrix()
    }
}

/// Skew-symmetric cross-product matrix.
pub(crate) fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Settings for [`estimate_pose`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseConfig {
    /// Largest polar angle (degrees) of points used by the homography initializer.
    pub init_max_polar_deg: f64,
    /// Final angular RMS (radians) above which the estimate is rejected.
    pub max_rms_rad: f64,
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self { init_max_polar_deg: 60.0, max_rms_rad: 0.05 }
    }
}

pub const MIN_POSE_POINTS: usize = 6;

/// Normalizes a point set to zero mean and unit average distance (Hartley).
fn normalization(points: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let spread = points.iter().map(|p| (p - mean).norm()).sum::<f64>() / n;
    let s = if spread > 0.0 { std::f64::consts::SQRT_2 / spread } else { 1.0 };
    Matrix3::new(s, 0.0, -s * mean.x, 0.0, s, -s * mean.y, 0.0, 0.0, 1.0)
}

/// Direct linear transform homography mapping `src` to `dst`, at least 4 pairs.
pub fn homography_dlt(src: &[Vector2<f64>], dst: &[Vector2<f64>]) -> Result<Matrix3<f64>> {
    if src.len() != dst.len() || src.len() < 4 {
        return Err(Error::InsufficientPoints { needed: 4, got: src.len().min(dst.len()) });
    }
    let ts = normalization(src);
    let td = normalization(dst);
    let mut a = DMatrix::<f64>::zeros(2 * src.len(), 9);
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let s = ts * s.push(1.0);
        let d = td * d.push(1.0);
        let (x, y) = (s.x / s.z, s.y / s.z);
        let (u, v) = (d.x / d.z, d.y / d.z);
        a.row_mut(2 * i).copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(2 * i + 1).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let ata = a.transpose() * &a;
    let eig = ata.symmetric_eigen();
    let (imin, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let h = eig.eigenvectors.column(imin);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or_else(|| Error::domain("degenerate homography normalization"))?;
    let hm = td_inv * hn * ts;
    if !hm.iter().all(|v| v.is_finite()) || hm[(2, 2)].abs() < 1e-300 && hm.norm() == 0.0 {
        return Err(Error::domain("degenerate homography"));
    }
    Ok(hm / hm.norm())
}

/// Decomposes a plane-to-normalized-image homography into a pose with the plane in front
/// of the camera.
fn pose_from_homography(h: &Matrix3<f64>) -> Result<Pose> {
    let h1 = h.column(0).into_owned();
    let h2 = h.column(1).into_owned();
    let h3 = h.column(2).into_owned();
    let scale = 2.0 / (h1.norm() + h2.norm());
    if !scale.is_finite() {
        return Err(Error::domain("degenerate homography"));
    }
    let mut sign = 1.0;
    if (h3 * scale).z < 0.0 {
        sign = -1.0;
    }
    let r1 = h1 * scale * sign;
    let r2 = h2 * scale * sign;
    let t = h3 * scale * sign;
    let m = Matrix3::from_columns(&[r1, r2, r1.cross(&r2)]);
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    Ok(Pose::new(rotation, t))
}

/// Initial pose from a homography between board coordinates and z-normalized bearings.
///
/// Bearings are first expressed in a virtual camera looking along their mean direction,
/// so boards far off the optical axis are seen near its center. Points within
/// `max_polar_deg` of that direction are used, widening the limit when too few remain.
pub fn homography_pose(points: &[Point3], bearings: &[Point3], max_polar_deg: f64) -> Result<Pose> {
    let mean = bearings.iter().fold(Vector3::zeros(), |a, b| a + b);
    let to_virtual = if mean.norm() > 1e-9 {
        UnitQuaternion::rotation_between(&mean, &Vector3::z()).unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI))
    } else {
        UnitQuaternion::identity()
    };
    let virtual_bearings: Vec<Point3> = bearings.iter().map(|b| to_virtual * b).collect();
    let cos_limits = [max_polar_deg, 75.0_f64.max(max_polar_deg), 85.0_f64.max(max_polar_deg)];
    for limit in cos_limits {
        let c = limit.to_radians().cos();
        let (src, dst): (Vec<_>, Vec<_>) = points
            .iter()
            .zip(&virtual_bearings)
            .filter(|(_, b)| b.z > c && b.z > 1e-6)
            .map(|(p, b)| (Vector2::new(p.x, p.y), Vector2::new(b.x / b.z, b.y / b.z)))
            .unzip();
        if src.len() >= 4 {
            let h = homography_dlt(&src, &dst)?;
            let v = pose_from_homography(&h)?;
            let back = to_virtual.inverse();
            return Ok(Pose::new(back * v.rotation, back * v.translation));
        }
    }
    Err(Error::InsufficientPoints { needed: 4, got: virtual_bearings.iter().filter(|b| b.z > 1e-6).count() })
}

/// Angular residual problem: `normalize(R x + t) - b` for each point/bearing pair.
struct BearingProblem<'a> {
    points: &'a [Point3],
    bearings: &'a [Point3],
}

impl BearingProblem<'_> {
    fn residuals(&self, pose: &Pose) -> Result<Vec<Vector3<f64>>> {
        self.points
            .iter()
            .zip(self.bearings)
            .map(|(x, b)| {
                let p = pose.transform(x);
                let n = p.norm();
                if !(n > 1e-12) {
                    return Err(Error::domain("point at the camera center"));
                }
                Ok(p / n - b)
            })
            .collect()
    }
}

impl LeastSquares for BearingProblem<'_> {
    type State = Pose;
    type System = NormalEquations;

    fn linearize(&self, pose: &Pose) -> Result<NormalEquations> {
        let mut h = SMatrix::<f64, 6, 6>::zeros();
        let mut g = SMatrix::<f64, 6, 1>::zeros();
        let mut cost = 0.0;
        for (x, b) in self.points.iter().zip(self.bearings) {
            let rx = pose.rotation * x;
            let p = rx + pose.translation;
            let n = p.norm();
            if !(n > 1e-12) {
                return Err(Error::domain("point at the camera center"));
            }
            let u = p / n;
            let r = u - b;
            let dn = (Matrix3::identity() - u * u.transpose()) / n;
            let mut j = SMatrix::<f64, 3, 6>::zeros();
            j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(dn * -skew(&rx)));
            j.fixed_view_mut::<3, 3>(0, 3).copy_from(&dn);
            h += j.transpose() * j;
            g += j.transpose() * r;
            cost += 0.5 * r.norm_squared();
        }
        Ok(NormalEquations {
            hessian: DMatrix::from_column_slice(6, 6, h.as_slice()),
            gradient: DVector::from_column_slice(g.as_slice()),
            cost,
        })
    }

    fn cost(&self, pose: &Pose) -> Result<f64> {
        Ok(self.residuals(pose)?.iter().map(|r| 0.5 * r.norm_squared()).sum())
    }

    fn retract(&self, pose: &Pose, delta: &DVector<f64>) -> Result<Pose> {
        Ok(pose.retract(delta.as_slice()))
    }

    fn state_norm(&self, pose: &Pose) -> f64 {
        1.0 + pose.translation.norm()
    }
}

/// Refines a pose by minimizing bearing residuals, returning it with its angular RMS.
pub fn refine_pose_bearings(points: &[Point3], bearings: &[Point3], init: Pose) -> Result<(Pose, f64)> {
    let problem = BearingProblem { points, bearings };
    let settings = LmSettings { max_iters: 50, ..LmSettings::default() };
    let report = lm::minimize(&problem, init, &settings)?;
    let rms = (2.0 * report.cost / points.len() as f64).sqrt();
    Ok((report.state, rms))
}

/// Estimates the target pose of one frame from pixel observations of board points.
pub fn estimate_pose(
    observations: &[(crate::board::PointIndex, Pixel)],
    board: &BoardSpec,
    model: &CameraModel,
    cfg: &PoseConfig,
) -> Result<Pose> {
    let mut points = Vec::with_capacity(observations.len());
    let mut bearings = Vec::with_capacity(observations.len());
    for (index, px) in observations {
        if let Ok(b) = model.unproject(px) {
            points.push(board.position(*index));
            bearings.push(b);
        }
    }
    if points.len() < MIN_POSE_POINTS {
        return Err(Error::InsufficientPoints { needed: MIN_POSE_POINTS, got: points.len() });
    }
    let init = homography_pose(&points, &bearings, cfg.init_max_polar_deg)?;
    let (pose, rms) = refine_pose_bearings(&points, &bearings, init)?;
    if !(rms <= cfg.max_rms_rad) {
        return Err(Error::PoseDiverged(rms));
    }
    Ok(pose)
}
