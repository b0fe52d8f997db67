//! Unified omnidirectional projection with radial-tangential distortion.
//!
//! The point is first projected through the unit sphere shifted by `xi`, giving
//! normalized coordinates `m = (x, y) / (z + xi * |p|)`, then distorted with two radial
//! and two tangential coefficients before the affine pixel mapping.

use nalgebra::{Matrix2, Matrix2x3, SMatrix, Vector2, Vector3};

use crate::error::{Error, Result};

const UNDISTORT_TOL: f64 = 1e-14;
const UNDISTORT_MAX_ITERS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmniRadtan {
    pub xi: f64,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl OmniRadtan {
    pub const NUM_PARAMS: usize = 9;

    /// Parameters in the order `xi, fx, fy, cx, cy, k1, k2, p1, p2`.
    pub fn from_params(p: &[f64]) -> Result<Self> {
        if p.len() != Self::NUM_PARAMS {
            return Err(Error::config(format!("omni-radtan expects 9 parameters, got {}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) || p[1] <= 0.0 || p[2] <= 0.0 {
            return Err(Error::config("omni-radtan requires finite parameters with fx, fy > 0"));
        }
        if p[0] < 0.0 {
            return Err(Error::config(format!("omni-radtan xi {} must be non-negative", p[0])));
        }
        Ok(Self { xi: p[0], fx: p[1], fy: p[2], cx: p[3], cy: p[4], k1: p[5], k2: p[6], p1: p[7], p2: p[8] })
    }

    pub fn params(&self) -> [f64; 9] {
        [self.xi, self.fx, self.fy, self.cx, self.cy, self.k1, self.k2, self.p1, self.p2]
    }

    /// Largest polar angle (radians) where the sphere lifting stays injective.
    pub fn max_polar_angle(&self) -> f64 {
        let c = if self.xi > 1.0 { 1.0 / self.xi } else { self.xi };
        (-c).acos()
    }

    fn normalized(&self, p: &Vector3<f64>) -> Result<(Vector2<f64>, f64, f64)> {
        let rho = p.norm();
        let denom = p.z + self.xi * rho;
        let limit = self.max_polar_angle().cos() * rho;
        if !(rho > 0.0) || !(denom > 1e-12) || !(p.z > limit) {
            return Err(Error::domain(format!("point {:?} outside the omnidirectional domain", p.as_slice())));
        }
        Ok((Vector2::new(p.x / denom, p.y / denom), rho, denom))
    }

    fn distort(&self, m: &Vector2<f64>) -> Vector2<f64> {
        let (mx, my) = (m.x, m.y);
        let r2 = mx * mx + my * my;
        let radial = 1.0 + r2 * (self.k1 + self.k2 * r2);
        Vector2::new(
            mx * radial + 2.0 * self.p1 * mx * my + self.p2 * (r2 + 2.0 * mx * mx),
            my * radial + self.p1 * (r2 + 2.0 * my * my) + 2.0 * self.p2 * mx * my,
        )
    }

    fn distort_jacobian(&self, m: &Vector2<f64>) -> Matrix2<f64> {
        let (mx, my) = (m.x, m.y);
        let r2 = mx * mx + my * my;
        let radial = 1.0 + r2 * (self.k1 + self.k2 * r2);
        let dr = self.k1 + 2.0 * self.k2 * r2;
        Matrix2::new(
            radial + 2.0 * mx * mx * dr + 2.0 * self.p1 * my + 6.0 * self.p2 * mx,
            2.0 * mx * my * dr + 2.0 * self.p1 * mx + 2.0 * self.p2 * my,
            2.0 * mx * my * dr + 2.0 * self.p1 * mx + 2.0 * self.p2 * my,
            radial + 2.0 * my * my * dr + 6.0 * self.p1 * my + 2.0 * self.p2 * mx,
        )
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<Vector2<f64>> {
        let (m, _, _) = self.normalized(p)?;
        let d = self.distort(&m);
        Ok(Vector2::new(self.fx * d.x + self.cx, self.fy * d.y + self.cy))
    }

    pub fn unproject(&self, u: &Vector2<f64>) -> Result<Vector3<f64>> {
        let target = Vector2::new((u.x - self.cx) / self.fx, (u.y - self.cy) / self.fy);
        let mut m = target;
        let mut converged = false;
        for _ in 0..UNDISTORT_MAX_ITERS {
            let err = self.distort(&m) - target;
            if err.norm() < UNDISTORT_TOL {
                converged = true;
                break;
            }
            let step = self
                .distort_jacobian(&m)
                .lu()
                .solve(&err)
                .ok_or_else(|| Error::domain("singular radial-tangential inversion"))?;
            m -= step;
        }
        if !converged && (self.distort(&m) - target).norm() > 1e-9 {
            return Err(Error::domain(format!("radial-tangential inversion failed at pixel {:?}", u.as_slice())));
        }
        let r2 = m.norm_squared();
        let disc = 1.0 + (1.0 - self.xi * self.xi) * r2;
        if disc < 0.0 {
            return Err(Error::domain(format!("pixel {:?} outside the omnidirectional image region", u.as_slice())));
        }
        let scale = (self.xi + disc.sqrt()) / (r2 + 1.0);
        let b = Vector3::new(scale * m.x, scale * m.y, scale - self.xi).normalize();
        if !(b.z > self.max_polar_angle().cos() - 1e-12) {
            return Err(Error::domain(format!("pixel {:?} lifts outside the omnidirectional domain", u.as_slice())));
        }
        Ok(b)
    }

    pub fn jacobians(&self, p: &Vector3<f64>) -> Result<(Matrix2x3<f64>, SMatrix<f64, 2, 9>)> {
        let (m, rho, denom) = self.normalized(p)?;
        let (x, y, z) = (p.x, p.y, p.z);
        let ddenom = Vector3::new(self.xi * x / rho, self.xi * y / rho, 1.0 + self.xi * z / rho);
        let inv = 1.0 / denom;
        let mut dm = Matrix2x3::zeros();
        for c in 0..3 {
            let ex = if c == 0 { 1.0 } else { 0.0 };
            let ey = if c == 1 { 1.0 } else { 0.0 };
            dm[(0, c)] = ex * inv - x * ddenom[c] * inv * inv;
            dm[(1, c)] = ey * inv - y * ddenom[c] * inv * inv;
        }
        let jd = self.distort_jacobian(&m);
        let scale = Matrix2::new(self.fx, 0.0, 0.0, self.fy);
        let j_point = scale * jd * dm;

        let d = self.distort(&m);
        let dm_dxi = Vector2::new(-x * rho * inv * inv, -y * rho * inv * inv);
        let du_dxi = scale * jd * dm_dxi;
        let (mx, my) = (m.x, m.y);
        let r2 = mx * mx + my * my;
        let j_params = SMatrix::<f64, 2, 9>::from_row_slice(&[
            du_dxi.x, d.x, 0.0, 1.0, 0.0,
            self.fx * mx * r2, self.fx * mx * r2 * r2, self.fx * 2.0 * mx * my, self.fx * (r2 + 2.0 * mx * mx),
            du_dxi.y, 0.0, d.y, 0.0, 1.0,
            self.fy * my * r2, self.fy * my * r2 * r2, self.fy * (r2 + 2.0 * my * my), self.fy * 2.0 * mx * my,
        ]);
        Ok((j_point, j_params))
    }
}
