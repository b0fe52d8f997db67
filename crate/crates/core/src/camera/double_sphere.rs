//! Double Sphere projection.
//!
//! A point is projected onto two unit spheres whose centers are offset by `xi`, then
//! onto a pinhole plane shifted by `alpha / (1 - alpha)`:
//!
//! ```text
//! d1 = |x|,  d2 = |(x, y, xi * d1 + z)|
//! u  = fx * x / (alpha * d2 + (1 - alpha) * (xi * d1 + z)) + cx
//! ```

use nalgebra::{Matrix2x3, SMatrix, Vector2, Vector3};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleSphere {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub xi: f64,
    pub alpha: f64,
}

impl DoubleSphere {
    pub const NUM_PARAMS: usize = 6;

    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, xi: f64, alpha: f64) -> Result<Self> {
        Self::from_params(&[fx, fy, cx, cy, xi, alpha])
    }

    /// Parameters in the order `fx, fy, cx, cy, xi, alpha`.
    pub fn from_params(p: &[f64]) -> Result<Self> {
        if p.len() != Self::NUM_PARAMS {
            return Err(Error::config(format!("double sphere expects 6 parameters, got {}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) || p[0] <= 0.0 || p[1] <= 0.0 {
            return Err(Error::config("double sphere requires finite parameters with fx, fy > 0"));
        }
        if !(0.0..=1.0).contains(&p[5]) {
            return Err(Error::config(format!("double sphere alpha {} outside [0, 1]", p[5])));
        }
        if p[4] <= -1.0 {
            return Err(Error::config(format!("double sphere xi {} must exceed -1", p[4])));
        }
        Ok(Self { fx: p[0], fy: p[1], cx: p[2], cy: p[3], xi: p[4], alpha: p[5] })
    }

    pub fn params(&self) -> [f64; 6] {
        [self.fx, self.fy, self.cx, self.cy, self.xi, self.alpha]
    }

    /// `w2` from the projection validity condition `z > -w2 * d1`.
    fn w2(&self) -> f64 {
        let a = self.alpha;
        let w1 = if a <= 0.5 { a / (1.0 - a) } else { (1.0 - a) / a };
        (w1 + self.xi) / (2.0 * w1 * self.xi + self.xi * self.xi + 1.0).sqrt()
    }

    /// Largest polar angle (radians) inside the projection domain.
    pub fn max_polar_angle(&self) -> f64 {
        (-self.w2()).clamp(-1.0, 1.0).acos()
    }

    fn check(&self, p: &Vector3<f64>, d1: f64, denom: f64) -> Result<()> {
        if d1 <= 0.0 || !(p.z > -self.w2() * d1) || !(denom > 1e-12) {
            return Err(Error::domain(format!("point {:?} outside the double sphere domain", p.as_slice())));
        }
        Ok(())
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<Vector2<f64>> {
        let d1 = p.norm();
        let k = self.xi * d1 + p.z;
        let d2 = (p.x * p.x + p.y * p.y + k * k).sqrt();
        let denom = self.alpha * d2 + (1.0 - self.alpha) * k;
        self.check(p, d1, denom)?;
        Ok(Vector2::new(self.fx * p.x / denom + self.cx, self.fy * p.y / denom + self.cy))
    }

    pub fn unproject(&self, u: &Vector2<f64>) -> Result<Vector3<f64>> {
        let mx = (u.x - self.cx) / self.fx;
        let my = (u.y - self.cy) / self.fy;
        let r2 = mx * mx + my * my;
        let a = self.alpha;
        let disc = 1.0 - (2.0 * a - 1.0) * r2;
        if disc < 0.0 {
            return Err(Error::domain(format!("pixel {:?} outside the double sphere image region", u.as_slice())));
        }
        let mz = (1.0 - a * a * r2) / (a * disc.sqrt() + 1.0 - a);
        let disc2 = mz * mz + (1.0 - self.xi * self.xi) * r2;
        if disc2 < 0.0 {
            return Err(Error::domain(format!("pixel {:?} outside the double sphere image region", u.as_slice())));
        }
        let scale = (mz * self.xi + disc2.sqrt()) / (mz * mz + r2);
        let b = Vector3::new(scale * mx, scale * my, scale * mz - self.xi);
        let n = b.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain("degenerate double sphere bearing"));
        }
        let b = b / n;
        // Reject the spurious branch beyond the projection domain.
        if !(b.z > -self.w2()) {
            return Err(Error::domain(format!("pixel {:?} maps outside the double sphere domain", u.as_slice())));
        }
        Ok(b)
    }

    pub fn jacobians(&self, p: &Vector3<f64>) -> Result<(Matrix2x3<f64>, SMatrix<f64, 2, 6>)> {
        let (x, y, z) = (p.x, p.y, p.z);
        let (xi, a) = (self.xi, self.alpha);
        let d1 = p.norm();
        let k = xi * d1 + z;
        let d2 = (x * x + y * y + k * k).sqrt();
        let denom = a * d2 + (1.0 - a) * k;
        self.check(p, d1, denom)?;

        // dk/dp and dd2/dp
        let dk = Vector3::new(xi * x / d1, xi * y / d1, xi * z / d1 + 1.0);
        let dd2 = Vector3::new(
            (x + k * dk.x) / d2,
            (y + k * dk.y) / d2,
            (k * dk.z) / d2,
        );
        let dden = dd2 * a + dk * (1.0 - a);
        let inv = 1.0 / denom;
        let inv2 = inv * inv;

        let mut j_point = Matrix2x3::zeros();
        for c in 0..3 {
            let ex = if c == 0 { 1.0 } else { 0.0 };
            let ey = if c == 1 { 1.0 } else { 0.0 };
            j_point[(0, c)] = self.fx * (ex * inv - x * dden[c] * inv2);
            j_point[(1, c)] = self.fy * (ey * inv - y * dden[c] * inv2);
        }

        let dden_dxi = a * k * d1 / d2 + (1.0 - a) * d1;
        let dden_dalpha = d2 - k;
        let j_params = SMatrix::<f64, 2, 6>::from_row_slice(&[
            x * inv, 0.0, 1.0, 0.0, -self.fx * x * dden_dxi * inv2, -self.fx * x * dden_dalpha * inv2,
            0.0, y * inv, 0.0, 1.0, -self.fy * y * dden_dxi * inv2, -self.fy * y * dden_dalpha * inv2,
        ]);
        Ok((j_point, j_params))
    }
}
