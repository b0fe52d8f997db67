//! Parametric camera models.
//!
//! Every model maps camera-frame points to pixels, pixels back to unit bearings, and
//! provides analytic Jacobians with respect to both the point and its own parameters.
//! Models are plain values; all operations are pure.

mod double_sphere;
mod kannala_brandt;
mod omni_radtan;
mod pinhole;

pub use double_sphere::DoubleSphere;
pub use kannala_brandt::KannalaBrandt;
pub use omni_radtan::OmniRadtan;
pub use pinhole::Pinhole;

use nalgebra::{Dyn, Matrix2x3, OMatrix, U2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel coordinates `(u, v)`; integer values are pixel centers.
pub type Pixel = Vector2<f64>;
/// Point or bearing in the camera frame.
pub type Point3 = Vector3<f64>;
/// `2 x P` Jacobian with respect to the model parameters.
pub type ParamJacobian = OMatrix<f64, U2, Dyn>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Pinhole,
    DoubleSphere,
    KannalaBrandt,
    OmniRadtan,
}

impl ModelKind {
    pub fn num_params(self) -> usize {
        match self {
            ModelKind::Pinhole => Pinhole::NUM_PARAMS,
            ModelKind::DoubleSphere => DoubleSphere::NUM_PARAMS,
            ModelKind::KannalaBrandt => KannalaBrandt::NUM_PARAMS,
            ModelKind::OmniRadtan => OmniRadtan::NUM_PARAMS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Pinhole => "pinhole",
            ModelKind::DoubleSphere => "double_sphere",
            ModelKind::KannalaBrandt => "kannala_brandt",
            ModelKind::OmniRadtan => "omni_radtan",
        }
    }
}

/// Parameter block of one model variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    Pinhole(Pinhole),
    DoubleSphere(DoubleSphere),
    KannalaBrandt(KannalaBrandt),
    OmniRadtan(OmniRadtan),
}

/// A projection together with the image it describes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct CameraModel {
    pub projection: Projection,
    pub width: u32,
    pub height: u32,
}

fn to_dyn<const P: usize>(m: nalgebra::SMatrix<f64, 2, P>) -> ParamJacobian {
    ParamJacobian::from_column_slice(m.as_slice())
}

impl CameraModel {
    pub fn new(projection: Projection, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config("image size must be positive"));
        }
        Ok(Self { projection, width, height })
    }

    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(Projection::Pinhole(Pinhole::new(fx, fy, cx, cy)?), width, height)
    }

    pub fn double_sphere(params: [f64; 6], width: u32, height: u32) -> Result<Self> {
        Self::new(Projection::DoubleSphere(DoubleSphere::from_params(&params)?), width, height)
    }

    pub fn kannala_brandt(params: [f64; 8], max_theta: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(Projection::KannalaBrandt(KannalaBrandt::from_params(&params, max_theta)?), width, height)
    }

    pub fn omni_radtan(params: [f64; 9], width: u32, height: u32) -> Result<Self> {
        Self::new(Projection::OmniRadtan(OmniRadtan::from_params(&params)?), width, height)
    }

    /// Builds a model from a flat parameter vector. `max_theta` only applies to
    /// Kannala-Brandt and defaults to 100 degrees.
    pub fn from_params(kind: ModelKind, params: &[f64], width: u32, height: u32, max_theta: Option<f64>) -> Result<Self> {
        let projection = match kind {
            ModelKind::Pinhole => Projection::Pinhole(Pinhole::from_params(params)?),
            ModelKind::DoubleSphere => Projection::DoubleSphere(DoubleSphere::from_params(params)?),
            ModelKind::KannalaBrandt => Projection::KannalaBrandt(KannalaBrandt::from_params(
                params,
                max_theta.unwrap_or(KannalaBrandt::DEFAULT_MAX_THETA_DEG.to_radians()),
            )?),
            ModelKind::OmniRadtan => Projection::OmniRadtan(OmniRadtan::from_params(params)?),
        };
        Self::new(projection, width, height)
    }

    /// Same variant and image size with a new parameter vector.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        Self::from_params(self.kind(), params, self.width, self.height, self.max_theta())
    }

    pub fn kind(&self) -> ModelKind {
        match self.projection {
            Projection::Pinhole(_) => ModelKind::Pinhole,
            Projection::DoubleSphere(_) => ModelKind::DoubleSphere,
            Projection::KannalaBrandt(_) => ModelKind::KannalaBrandt,
            Projection::OmniRadtan(_) => ModelKind::OmniRadtan,
        }
    }

    pub fn num_params(&self) -> usize {
        self.kind().num_params()
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.projection {
            Projection::Pinhole(m) => m.params().to_vec(),
            Projection::DoubleSphere(m) => m.params().to_vec(),
            Projection::KannalaBrandt(m) => m.params().to_vec(),
            Projection::OmniRadtan(m) => m.params().to_vec(),
        }
    }

    fn max_theta(&self) -> Option<f64> {
        match &self.projection {
            Projection::KannalaBrandt(m) => Some(m.max_theta),
            _ => None,
        }
    }

    /// Principal point `(cx, cy)`.
    pub fn principal_point(&self) -> Pixel {
        match &self.projection {
            Projection::Pinhole(m) => Pixel::new(m.cx, m.cy),
            Projection::DoubleSphere(m) => Pixel::new(m.cx, m.cy),
            Projection::KannalaBrandt(m) => Pixel::new(m.cx, m.cy),
            Projection::OmniRadtan(m) => Pixel::new(m.cx, m.cy),
        }
    }

    /// Largest polar angle (radians) in the projection domain.
    pub fn max_polar_angle(&self) -> f64 {
        match &self.projection {
            Projection::Pinhole(_) => std::f64::consts::FRAC_PI_2 - 1e-6,
            Projection::DoubleSphere(m) => m.max_polar_angle(),
            Projection::KannalaBrandt(m) => m.max_theta,
            Projection::OmniRadtan(m) => m.max_polar_angle(),
        }
    }

    pub fn project(&self, p: &Point3) -> Result<Pixel> {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("non-finite point"));
        }
        match &self.projection {
            Projection::Pinhole(m) => m.project(p),
            Projection::DoubleSphere(m) => m.project(p),
            Projection::KannalaBrandt(m) => m.project(p),
            Projection::OmniRadtan(m) => m.project(p),
        }
    }

    /// Unit-norm bearing for a pixel.
    pub fn unproject(&self, u: &Pixel) -> Result<Point3> {
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("non-finite pixel"));
        }
        match &self.projection {
            Projection::Pinhole(m) => Ok(m.unproject(u)),
            Projection::DoubleSphere(m) => m.unproject(u),
            Projection::KannalaBrandt(m) => m.unproject(u),
            Projection::OmniRadtan(m) => m.unproject(u),
        }
    }

    /// Jacobians of [`project`](Self::project) with respect to the point (2x3) and the
    /// parameters (2xP, same order as [`params`](Self::params)).
    pub fn project_jacobians(&self, p: &Point3) -> Result<(Matrix2x3<f64>, ParamJacobian)> {
        match &self.projection {
            Projection::Pinhole(m) => m.jacobians(p).map(|(a, b)| (a, to_dyn(b))),
            Projection::DoubleSphere(m) => m.jacobians(p).map(|(a, b)| (a, to_dyn(b))),
            Projection::KannalaBrandt(m) => m.jacobians(p).map(|(a, b)| (a, to_dyn(b))),
            Projection::OmniRadtan(m) => m.jacobians(p).map(|(a, b)| (a, to_dyn(b))),
        }
    }

    /// Angle in degrees between the pixel's bearing and the optical axis.
    pub fn polar_angle(&self, u: &Pixel) -> Result<f64> {
        let b = self.unproject(u)?;
        Ok(b.z.clamp(-1.0, 1.0).acos().to_degrees())
    }

    /// `true` when the pixel lies inside the image rectangle `[0, w-1] x [0, h-1]`.
    pub fn in_image(&self, u: &Pixel) -> bool {
        u.x >= 0.0 && u.y >= 0.0 && u.x <= (self.width - 1) as f64 && u.y <= (self.height - 1) as f64
    }

    /// Projects and keeps the result only when it falls inside the image.
    pub fn project_in_image(&self, p: &Point3) -> Option<Pixel> {
        self.project(p).ok().filter(|u| self.in_image(u))
    }
}

/// JSON form of a camera model: `{"model": ..., "params": [...], "image_size": [w, h]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model: ModelKind,
    pub params: Vec<f64>,
    pub image_size: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_theta_deg: Option<f64>,
}

impl From<CameraModel> for ModelRecord {
    fn from(m: CameraModel) -> Self {
        ModelRecord {
            model: m.kind(),
            params: m.params(),
            image_size: [m.width, m.height],
            max_theta_deg: m.max_theta().map(f64::to_degrees),
        }
    }
}

impl TryFrom<ModelRecord> for CameraModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        CameraModel::from_params(r.model, &r.params, r.image_size[0], r.image_size[1], r.max_theta_deg.map(f64::to_radians))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ds() -> CameraModel {
        CameraModel::double_sphere([156.6, 156.6, 319.5, 255.5, -0.18, 0.59], 640, 512).unwrap()
    }

    #[test]
    fn pinhole_examples() {
        let m = CameraModel::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        assert_eq!(m.project(&Point3::new(0.0, 0.0, 2.0)).unwrap(), Pixel::new(320.0, 240.0));
        assert_eq!(m.project(&Point3::new(1.0, 0.0, 1.0)).unwrap(), Pixel::new(820.0, 240.0));
        assert!(matches!(m.project(&Point3::zeros()), Err(Error::Domain(_))));
        assert_eq!(m.unproject(&Pixel::new(320.0, 240.0)).unwrap(), Point3::z());
        let (jp, jk) = m.project_jacobians(&Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(jp, Matrix2x3::new(500.0, 0.0, 0.0, 0.0, 500.0, 0.0));
        assert_eq!(jk[(0, 2)], 1.0);
        assert_eq!(jk[(0, 3)], 0.0);
    }

    #[test]
    fn pinhole_scale_invariance() {
        let m = CameraModel::pinhole(420.0, 410.0, 300.0, 200.0, 640, 480).unwrap();
        let p = Point3::new(0.3, -0.2, 1.7);
        for lambda in [0.01, 0.5, 3.0, 1e4] {
            assert_relative_eq!(m.project(&(p * lambda)).unwrap(), m.project(&p).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn kb_outside_fov_is_domain_error() {
        let m = CameraModel::kannala_brandt([200.0, 200.0, 320.0, 240.0, 0.0, 0.0, 0.0, 0.0], 95f64.to_radians(), 640, 480)
            .unwrap();
        assert!(matches!(m.unproject(&Pixel::new(320.0 + 200.0 * 2.0, 240.0)), Err(Error::Domain(_))));
        let behind = Point3::new(1.0, 0.0, -1.0);
        assert!(matches!(m.project(&behind), Err(Error::Domain(_))));
    }

    #[test]
    fn kb_rejects_non_monotone_polynomial() {
        let bad = CameraModel::kannala_brandt([200.0, 200.0, 320.0, 240.0, -0.5, 0.0, 0.0, 0.0], 1.6, 640, 480);
        assert!(matches!(bad, Err(Error::Config(_))));
    }

    #[test]
    fn principal_axis_maps_to_principal_point() {
        let models = [
            ds(),
            CameraModel::pinhole(400.0, 390.0, 321.0, 239.0, 640, 480).unwrap(),
            CameraModel::kannala_brandt([200.0, 201.0, 320.0, 240.0, 0.01, -0.002, 0.0003, 0.0], 1.7, 640, 480).unwrap(),
            CameraModel::omni_radtan([0.9, 300.0, 301.0, 322.0, 238.0, -0.1, 0.01, 1e-4, -2e-4], 640, 480).unwrap(),
        ];
        for m in models {
            assert_eq!(m.project(&Point3::z()).unwrap(), m.principal_point(), "{:?}", m.kind());
        }
    }

    #[test]
    fn polar_angle_examples() {
        let m = ds();
        assert_eq!(m.polar_angle(&m.principal_point()).unwrap(), 0.0);
        let side = m.project(&Point3::x()).unwrap();
        assert_relative_eq!(m.polar_angle(&side).unwrap(), 90.0, epsilon = 1e-9);
        let diag = Point3::new(1.0, 0.0, 1.0).normalize();
        assert_relative_eq!(m.polar_angle(&m.project(&diag).unwrap()).unwrap(), 45.0, epsilon = 1e-9);
    }

    #[test]
    fn json_record_round_trip() {
        let m = CameraModel::kannala_brandt([200.0, 201.0, 320.0, 240.0, 0.01, -0.002, 0.0003, 0.0], 1.7, 640, 480).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"model\":\"kannala_brandt\""));
        let back: CameraModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.params(), m.params());
        assert_relative_eq!(back.max_polar_angle(), 1.7, epsilon = 1e-12);
        let bad = r#"{"model":"double_sphere","params":[1,2,3],"image_size":[10,10]}"#;
        assert!(serde_json::from_str::<CameraModel>(bad).is_err());
    }
}
