//! Equidistant Kannala-Brandt projection with a four-term odd polynomial in the
//! incidence angle: `r(θ) = θ + k1 θ³ + k2 θ⁵ + k3 θ⁷ + k4 θ⁹`.

use nalgebra::{Matrix2x3, SMatrix, Vector2, Vector3};

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITERS: usize = 20;
/// Below this radial distance the projection uses its on-axis limit.
const AXIS_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KannalaBrandt {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub k: [f64; 4],
    /// Incidence angles above this bound (radians) are outside the model domain.
    pub max_theta: f64,
}

impl KannalaBrandt {
    pub const NUM_PARAMS: usize = 8;
    pub const DEFAULT_MAX_THETA_DEG: f64 = 100.0;

    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, k: [f64; 4], max_theta: f64) -> Result<Self> {
        let mut p = vec![fx, fy, cx, cy];
        p.extend_from_slice(&k);
        Self::from_params(&p, max_theta)
    }

    /// Parameters in the order `fx, fy, cx, cy, k1, k2, k3, k4`.
    pub fn from_params(p: &[f64], max_theta: f64) -> Result<Self> {
        if p.len() != Self::NUM_PARAMS {
            return Err(Error::config(format!("Kannala-Brandt expects 8 parameters, got {}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) || p[0] <= 0.0 || p[1] <= 0.0 {
            return Err(Error::config("Kannala-Brandt requires finite parameters with fx, fy > 0"));
        }
        if !(max_theta > 0.0 && max_theta <= std::f64::consts::PI) {
            return Err(Error::config(format!("Kannala-Brandt max_theta {max_theta} outside (0, pi]")));
        }
        let model = Self { fx: p[0], fy: p[1], cx: p[2], cy: p[3], k: [p[4], p[5], p[6], p[7]], max_theta };
        if !model.is_monotone() {
            return Err(Error::config("Kannala-Brandt polynomial is not monotone over the configured field of view"));
        }
        Ok(model)
    }

    pub fn params(&self) -> [f64; 8] {
        [self.fx, self.fy, self.cx, self.cy, self.k[0], self.k[1], self.k[2], self.k[3]]
    }

    /// `r(θ)`
    pub fn radius(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let [k1, k2, k3, k4] = self.k;
        theta * (1.0 + t2 * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4))))
    }

    /// `dr/dθ`
    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        let [k1, k2, k3, k4] = self.k;
        1.0 + t2 * (3.0 * k1 + t2 * (5.0 * k2 + t2 * (7.0 * k3 + t2 * 9.0 * k4)))
    }

    fn is_monotone(&self) -> bool {
        const STEPS: usize = 256;
        (0..=STEPS).all(|i| self.radius_derivative(self.max_theta * i as f64 / STEPS as f64) > 0.0)
    }

    fn theta_of(&self, p: &Vector3<f64>) -> Result<(f64, f64)> {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        if r == 0.0 && p.z <= 0.0 {
            return Err(Error::domain(format!("point {:?} has no Kannala-Brandt projection", p.as_slice())));
        }
        let theta = r.atan2(p.z);
        if theta > self.max_theta {
            return Err(Error::domain(format!(
                "incidence angle {:.2} deg beyond the {:.2} deg limit",
                theta.to_degrees(),
                self.max_theta.to_degrees()
            )));
        }
        Ok((r, theta))
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<Vector2<f64>> {
        let (r, theta) = self.theta_of(p)?;
        let (mx, my) = if r < AXIS_EPS * p.norm() {
            (p.x / p.z, p.y / p.z)
        } else {
            let s = self.radius(theta) / r;
            (s * p.x, s * p.y)
        };
        Ok(Vector2::new(self.fx * mx + self.cx, self.fy * my + self.cy))
    }

    pub fn unproject(&self, u: &Vector2<f64>) -> Result<Vector3<f64>> {
        let mx = (u.x - self.cx) / self.fx;
        let my = (u.y - self.cy) / self.fy;
        let rd = (mx * mx + my * my).sqrt();
        if rd == 0.0 {
            return Ok(Vector3::z());
        }
        if rd > self.radius(self.max_theta) {
            return Err(Error::domain(format!("pixel {:?} beyond the Kannala-Brandt field of view", u.as_slice())));
        }
        let mut theta = rd;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let step = (self.radius(theta) - rd) / self.radius_derivative(theta);
            theta -= step;
            if step.abs() < NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged || !(0.0..=self.max_theta + NEWTON_TOL).contains(&theta) {
            return Err(Error::domain(format!("Kannala-Brandt inversion failed at pixel {:?}", u.as_slice())));
        }
        let s = theta.sin() / rd;
        Ok(Vector3::new(s * mx, s * my, theta.cos()))
    }

    pub fn jacobians(&self, p: &Vector3<f64>) -> Result<(Matrix2x3<f64>, SMatrix<f64, 2, 8>)> {
        let (r, theta) = self.theta_of(p)?;
        let (x, y, z) = (p.x, p.y, p.z);
        let (fx, fy) = (self.fx, self.fy);

        if r < AXIS_EPS * p.norm() {
            // On-axis limit: behaves like a pinhole with unit radial slope.
            let iz = 1.0 / z;
            let j_point = Matrix2x3::new(fx * iz, 0.0, -fx * x * iz * iz, 0.0, fy * iz, -fy * y * iz * iz);
            let mut j_params = SMatrix::<f64, 2, 8>::zeros();
            j_params[(0, 0)] = x * iz;
            j_params[(1, 1)] = y * iz;
            j_params[(0, 2)] = 1.0;
            j_params[(1, 3)] = 1.0;
            return Ok((j_point, j_params));
        }

        let d = self.radius(theta);
        let dd = self.radius_derivative(theta);
        let rho2 = r * r + z * z;
        let dtheta = Vector3::new(z * x / (r * rho2), z * y / (r * rho2), -r / rho2);
        let r3 = r * r * r;
        // d(x / r)/dp and d(y / r)/dp
        let dxr = Vector3::new(y * y / r3, -x * y / r3, 0.0);
        let dyr = Vector3::new(-x * y / r3, x * x / r3, 0.0);

        let mut j_point = Matrix2x3::zeros();
        for c in 0..3 {
            j_point[(0, c)] = fx * (dd * dtheta[c] * x / r + d * dxr[c]);
            j_point[(1, c)] = fy * (dd * dtheta[c] * y / r + d * dyr[c]);
        }

        let (ux, uy) = (x / r, y / r);
        let t3 = theta.powi(3);
        let t5 = t3 * theta * theta;
        let t7 = t5 * theta * theta;
        let t9 = t7 * theta * theta;
        let j_params = SMatrix::<f64, 2, 8>::from_row_slice(&[
            d * ux, 0.0, 1.0, 0.0, fx * t3 * ux, fx * t5 * ux, fx * t7 * ux, fx * t9 * ux,
            0.0, d * uy, 0.0, 1.0, fy * t3 * uy, fy * t5 * uy, fy * t7 * uy, fy * t9 * uy,
        ]);
        Ok((j_point, j_params))
    }
}
