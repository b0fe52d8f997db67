mod common;

use common::*;
use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;
use widecal::{CameraModel, ModelKind};

fn models() -> Vec<CameraModel> {
    test_models().into_iter().map(|(_, m, _)| m).collect()
}

fn limit(kind: ModelKind) -> f64 {
    test_models().into_iter().find(|(_, m, _)| m.kind() == kind).unwrap().2
}

/// Bearing in spherical coordinates scaled to a point at distance `r`.
fn point(model: &CameraModel, polar_frac: f64, azimuth: f64, r: f64) -> Vector3<f64> {
    let theta = polar_frac * limit(model.kind());
    r * Vector3::new(theta.sin() * azimuth.cos(), theta.sin() * azimuth.sin(), theta.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn projection_matches_independent_formula(m in 0usize..4, t in 0.0f64..1.0, a in 0.0f64..std::f64::consts::TAU, r in 0.1f64..20.0) {
        let model = models()[m];
        let p = point(&model, t, a, r);
        let u = model.project(&p).unwrap();
        let v = oracle_project(&model, &p);
        prop_assert!((u - v).norm() < 1e-9, "{:?}: {u} vs {v}", model.kind());
    }

    #[test]
    fn unproject_inverts_project(m in 0usize..4, t in 0.0f64..1.0, a in 0.0f64..std::f64::consts::TAU, r in 0.1f64..20.0) {
        let model = models()[m];
        let p = point(&model, t, a, r);
        let b = model.unproject(&model.project(&p).unwrap()).unwrap();
        prop_assert!((b.norm() - 1.0).abs() < 1e-12);
        prop_assert!(angle_between(&b, &p) < 1e-9, "{:?}", model.kind());
    }

    #[test]
    fn projection_is_scale_invariant(m in 0usize..4, t in 0.0f64..1.0, a in 0.0f64..std::f64::consts::TAU, s in 0.01f64..100.0) {
        let model = models()[m];
        let p = point(&model, t, a, 1.0);
        let (u, v) = (model.project(&p).unwrap(), model.project(&(s * p)).unwrap());
        prop_assert!((u - v).norm() < 1e-8);
    }

    #[test]
    fn jacobians_match_central_differences(m in 0usize..4, t in 0.0f64..0.97, a in 0.0f64..std::f64::consts::TAU, r in 0.5f64..5.0) {
        let model = models()[m];
        let p = point(&model, t, a, r);
        let (jp, jc) = model.project_jacobians(&p).unwrap();
        let fd_p = central_diff(|x| { let u = model.project(&Vector3::new(x[0], x[1], x[2])).unwrap(); vec![u.x, u.y] }, p.as_slice(), 1e-6);
        let params = model.params();
        let fd_c = central_diff(|q| { let u = model.with_params(q).unwrap().project(&p).unwrap(); vec![u.x, u.y] }, &params, 1e-6);
        let jp = DMatrix::from_column_slice(2, 3, jp.as_slice());
        let jc = DMatrix::from_column_slice(2, params.len(), jc.as_slice());
        prop_assert!(max_rel_error(&jp, &fd_p) < 1e-4, "{:?} point jacobian", model.kind());
        prop_assert!(max_rel_error(&jc, &fd_c) < 1e-4, "{:?} parameter jacobian", model.kind());
    }

    #[test]
    fn polar_angle_is_angle_to_axis(m in 0usize..4, t in 0.0f64..1.0, a in 0.0f64..std::f64::consts::TAU) {
        let model = models()[m];
        let p = point(&model, t, a, 1.0);
        let deg = model.polar_angle(&model.project(&p).unwrap()).unwrap();
        prop_assert!((deg - t * limit(model.kind()).to_degrees()).abs() < 1e-6);
    }

    #[test]
    fn parameter_round_trip(m in 0usize..4) {
        let model = models()[m];
        let back = CameraModel::from_params(model.kind(), &model.params(), model.width, model.height, Some(model.max_polar_angle())).unwrap();
        prop_assert_eq!(back.params(), model.params());
    }
}

#[test]
fn json_record_round_trip() {
    for model in models() {
        let text = serde_json::to_string(&model).unwrap();
        let back: CameraModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model, "{text}");
    }
}

#[test]
fn points_behind_the_domain_are_rejected() {
    for model in [pinhole(), ds_wide()] {
        assert!(model.project(&Vector3::new(0.0, 0.0, -1.0)).is_err(), "{:?}", model.kind());
    }
    let p = Vector3::new(0.0, 0.0, 0.0);
    for model in models() {
        assert!(model.project(&p).is_err(), "{:?} accepted the origin", model.kind());
    }
}

#[test]
fn wrong_parameter_counts_are_config_errors() {
    for kind in [ModelKind::Pinhole, ModelKind::DoubleSphere, ModelKind::KannalaBrandt, ModelKind::OmniRadtan] {
        let short = vec![100.0; kind.num_params() - 1];
        assert!(matches!(CameraModel::from_params(kind, &short, 640, 512, None), Err(widecal::Error::Config(_))));
    }
}

#[test]
fn double_sphere_has_a_190_degree_circle_inside_the_sensor() {
    let model = ds_190();
    assert!(model.max_polar_angle().to_degrees() > 95.0);
    let edge = point(&model, 95.0 / 110.0, 0.0, 1.0);
    let u = model.project(&edge).unwrap();
    assert!(model.in_image(&u), "{u}");
    assert!((u.x - model.principal_point().x - 250.0).abs() < 5.0, "{u}");
}
