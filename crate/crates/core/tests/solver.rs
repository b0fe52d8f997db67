mod common;

use common::*;
use nalgebra::Vector3;
use widecal::board::BoardSpec;
use widecal::pose::{Pose, PoseConfig};
use widecal::solver::{self, SolverConfig};
use widecal::synth::{self, Coverage, RenderSettings};
use widecal::{CameraModel, ModelKind};

fn board() -> BoardSpec {
    BoardSpec::new(6, 6, 0.088, 0.3).unwrap()
}

fn poses(model: &CameraModel, n: usize, seed: u64) -> Vec<Pose> {
    synth::make_dataset(&board(), model, n, Coverage::FullFov, RenderSettings { seed, ..Default::default() }).unwrap().poses
}

/// Scales every intrinsic by `1 + frac` with alternating sign, and nudges each pose.
/// Kannala-Brandt starts get a wider domain so that edge points stay projectable.
fn perturbed(model: &CameraModel, poses: &[Pose], frac: f64) -> (CameraModel, Vec<Option<Pose>>) {
    let p: Vec<f64> = model.params().iter().enumerate().map(|(i, v)| v * (1.0 + if i % 2 == 0 { frac } else { -frac })).collect();
    let max_theta = (model.kind() == ModelKind::KannalaBrandt).then(|| 110f64.to_radians());
    let init = CameraModel::from_params(model.kind(), &p, model.width, model.height, max_theta).unwrap();
    let nudged = poses
        .iter()
        .map(|pose| Some(Pose::from_axis_angle(Vector3::new(0.02, -0.015, 0.01), Vector3::new(0.01, -0.01, 0.02)).compose(pose)))
        .collect();
    (init, nudged)
}

#[test]
fn residuals_vanish_at_the_oracle_solution() {
    let model = ds_190();
    let truth = poses(&model, 8, 1);
    let dets = exact_detections(&board(), &model, &truth);
    let init: Vec<Option<Pose>> = truth.iter().copied().map(Some).collect();
    let r = solver::solve_full(&dets, &board(), &model, &init, &SolverConfig::default()).unwrap();
    assert!(r.rms_reproj_px < 1e-6, "{}", r.rms_reproj_px);
    assert_eq!(r.n_outliers, 0);
}

#[test]
fn perturbed_start_recovers_every_model() {
    for (name, model, _) in test_models() {
        let truth = poses(&model, 10, 2);
        let dets = exact_detections(&board(), &model, &truth);
        let (init, init_poses) = perturbed(&model, &truth, 0.05);
        let r = solver::solve_full(&dets, &board(), &init, &init_poses, &SolverConfig::default()).unwrap();
        assert!(r.rms_reproj_px < 1e-3, "{name}: rms {}", r.rms_reproj_px);
        for (a, b) in r.model.params().iter().zip(model.params()) {
            assert!((a - b).abs() <= 1e-3 * b.abs().max(1.0), "{name}: {:?} vs {:?}", r.model.params(), model.params());
        }
    }
}

#[test]
fn accepted_step_costs_never_increase() {
    let model = ds_190();
    let truth = poses(&model, 10, 3);
    let mut dets = exact_detections(&board(), &model, &truth);
    for (k, d) in dets.iter_mut().enumerate() {
        d.pixel.x += 0.3 * ((k * 7919) % 13) as f64 / 13.0 - 0.15;
        d.pixel.y += 0.3 * ((k * 104729) % 11) as f64 / 11.0 - 0.15;
    }
    let (init, init_poses) = perturbed(&model, &truth, 0.1);
    let r = solver::solve_full(&dets, &board(), &init, &init_poses, &SolverConfig::default()).unwrap();
    assert!(r.cost_history.len() > 2);
    // Dropping outliers only removes terms, so the joined history of both solves is monotone too.
    for w in r.cost_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", r.cost_history);
    }
}

#[test]
fn intrinsics_are_invariant_to_a_common_rigid_motion() {
    let model = ds_190();
    let truth = poses(&model, 10, 4);
    let g = Pose::from_axis_angle(Vector3::new(0.0, 0.0, 0.4), Vector3::new(0.02, -0.03, 0.05));
    let moved: Vec<Pose> = truth.iter().map(|p| g.compose(p)).collect();
    let mut recovered = Vec::new();
    for set in [&truth, &moved] {
        let dets = exact_detections(&board(), &model, set);
        let (init, init_poses) = perturbed(&model, set, 0.05);
        recovered.push(solver::solve_full(&dets, &board(), &init, &init_poses, &SolverConfig::default()).unwrap().model.params());
    }
    for (a, b) in recovered[0].iter().zip(&recovered[1]) {
        assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{recovered:?}");
    }
}

#[test]
fn model_mismatch_raises_the_residual() {
    let model = ds_190();
    let truth = poses(&model, 12, 5);
    let mut dets = exact_detections(&board(), &model, &truth);
    for (k, d) in dets.iter_mut().enumerate() {
        d.pixel.x += 0.05 * (((k * 31) % 7) as f64 - 3.0) / 3.0;
    }
    let cfg = SolverConfig::default();
    let rms = |kind: ModelKind| {
        let starts = solver::bootstrap_starts(kind, 190.0, WIDTH, HEIGHT).unwrap();
        let r = solver::bootstrap(&dets, truth.len(), &board(), &starts, &PoseConfig { max_rms_rad: 0.3, ..Default::default() }, &cfg).unwrap();
        solver::rms_all(&r, &dets, &board())
    };
    let (ds, kb) = (rms(ModelKind::DoubleSphere), rms(ModelKind::KannalaBrandt));
    assert!(kb > ds, "kannala-brandt {kb} vs double sphere {ds}");
}
