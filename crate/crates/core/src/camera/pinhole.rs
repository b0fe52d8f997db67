use nalgebra::{Matrix2x3, SMatrix, Vector2, Vector3};

use crate::error::{Error, Result};

/// Smallest depth accepted by the pinhole projection.
pub const MIN_DEPTH: f64 = 1e-9;

/// Ideal perspective camera: `u = fx * x / z + cx`, `v = fy * y / z + cy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pinhole {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Pinhole {
    pub const NUM_PARAMS: usize = 4;

    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        Self::from_params(&[fx, fy, cx, cy])
    }

    pub fn from_params(p: &[f64]) -> Result<Self> {
        if p.len() != Self::NUM_PARAMS {
            return Err(Error::config(format!("pinhole expects 4 parameters, got {}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) || p[0] <= 0.0 || p[1] <= 0.0 {
            return Err(Error::config("pinhole requires finite parameters with fx, fy > 0"));
        }
        Ok(Self { fx: p[0], fy: p[1], cx: p[2], cy: p[3] })
    }

    pub fn params(&self) -> [f64; 4] {
        [self.fx, self.fy, self.cx, self.cy]
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<Vector2<f64>> {
        if !(p.z > MIN_DEPTH) {
            return Err(Error::domain(format!("pinhole depth {} is not positive", p.z)));
        }
        Ok(Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    pub fn unproject(&self, u: &Vector2<f64>) -> Vector3<f64> {
        Vector3::new((u.x - self.cx) / self.fx, (u.y - self.cy) / self.fy, 1.0).normalize()
    }

    pub fn jacobians(&self, p: &Vector3<f64>) -> Result<(Matrix2x3<f64>, SMatrix<f64, 2, 4>)> {
        if !(p.z > MIN_DEPTH) {
            return Err(Error::domain(format!("pinhole depth {} is not positive", p.z)));
        }
        let iz = 1.0 / p.z;
        let (mx, my) = (p.x * iz, p.y * iz);
        let j_point = Matrix2x3::new(
            self.fx * iz, 0.0, -self.fx * mx * iz,
            0.0, self.fy * iz, -self.fy * my * iz,
        );
        let j_params = SMatrix::<f64, 2, 4>::new(
            mx, 0.0, 1.0, 0.0,
            0.0, my, 0.0, 1.0,
        );
        Ok((j_point, j_params))
    }
}
