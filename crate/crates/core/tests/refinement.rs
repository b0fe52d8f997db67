mod common;

use common::*;
use nalgebra::Vector2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use widecal::board::BoardSpec;
use widecal::pose::Pose;
use widecal::raster::GrayImage;
use widecal::refine::{self, *};
use widecal::synth::{self, Coverage, RenderSettings};
use widecal::Pixel;

fn board() -> BoardSpec {
    BoardSpec::new(6, 6, 0.088, 0.3).unwrap()
}

/// Ideal 2x2 checker corner at `c` with exact pixel-area coverage, then blurred.
fn saddle(c: Pixel, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| {
        let a = (x as f64 + 0.5 - c.x).clamp(0.0, 1.0);
        let b = (y as f64 + 0.5 - c.y).clamp(0.0, 1.0);
        (a * (1.0 - b) + (1.0 - a) * b) as f32
    })
    .gaussian_blur(1.0)
}

fn scene(n: usize, coverage: Coverage, seed: u64) -> (synth::SceneSpec, Vec<(GrayImage, Vec<(widecal::board::PointIndex, Pixel)>)>) {
    let render = RenderSettings { noise_sigma: 0.0, blur_sigma: 0.5, supersample: 4, seed };
    let scene = synth::make_dataset(&board(), &ds_190(), n, coverage, render).unwrap();
    let frames = synth::render_dataset(&board(), &scene).unwrap();
    (scene, frames)
}

#[test]
fn window_sizes_match_exhaustive_search() {
    let board = board();
    let model = ds_190();
    let scene = synth::make_dataset(&board, &model, 25, Coverage::FullFov, RenderSettings { seed: 8, ..Default::default() }).unwrap();
    let cfg = RefineConfig::default();
    for pose in &scene.poses {
        let projected = project_board(&board, pose, &model);
        let fast = raw_window_sizes(&projected, cfg.s);
        for i in 0..projected.len() {
            assert_eq!(fast[i], brute_force_window(&projected, i, cfg.s), "point {i}");
            if let Some(raw) = fast[i] {
                let w = adaptive_window_size(&board, board.point_index(i), pose, &model, &cfg).unwrap();
                assert_eq!(w, raw.clamp(cfg.w_min, cfg.w_max));
            }
        }
    }
}

#[test]
fn window_of_unprojectable_point_is_an_error() {
    let board = board();
    let behind = Pose::new(nalgebra::UnitQuaternion::identity(), nalgebra::Vector3::new(0.0, 0.0, -2.0));
    let index = board.point_index(0);
    assert!(adaptive_window_size(&board, index, &behind, &ds_190(), &RefineConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Moving the image by whole pixels moves the refined corner by the same amount.
    #[test]
    fn gradient_refinement_is_translation_equivariant(fx in 0.0f64..1.0, fy in 0.0f64..1.0, dx in 1i32..6, dy in 1i32..6, ix in -0.9f64..0.9, iy in -0.9f64..0.9) {
        let c = Pixel::new(20.0 + fx, 20.0 + fy);
        let shift = Pixel::new(dx as f64, dy as f64);
        let (a, b) = (saddle(c, 48, 48), saddle(c + shift, 48, 48));
        let cfg = RefineConfig::default();
        let init = c + Vector2::new(ix, iy);
        let qa = gradient_refine(&a, init, 4.0, &cfg).unwrap();
        let qb = gradient_refine(&b, init + shift, 4.0, &cfg).unwrap();
        prop_assert!((qb - qa - shift).norm() < 1e-6, "{qa} {qb}");
        prop_assert!((qa - c).norm() < 0.05);
    }

    /// Sub-pixel shifts of the corner move the refined estimate by the same shift.
    #[test]
    fn gradient_refinement_tracks_subpixel_shifts(fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
        let c = Pixel::new(20.0 + fx, 20.0 + fy);
        let q = gradient_refine(&saddle(c, 48, 48), c.map(f64::round), 4.0, &RefineConfig::default()).unwrap();
        prop_assert!((q - c).norm() < 0.05, "{q} vs {c}");
    }
}

#[test]
fn symmetry_cost_is_invariant_to_pair_order_and_zero_at_a_symmetric_center() {
    let (scene, frames) = scene(3, Coverage::CenterOnly, 2);
    let model = scene.model;
    let samples = SymmetrySampleSet::for_board(&board(), &RefineConfig::default());
    let mut checked = 0;
    for (pose, (img, gt)) in scene.poses.iter().zip(&frames) {
        for (point, _) in gt.iter().step_by(7) {
            let p = board().position(*point);
            let x = Vector2::new(p.x, p.y);
            let (Ok(a), Ok(b)) = (symmetry_cost(img, &x, pose, &model, &samples), symmetry_cost(img, &x, pose, &model, &samples.negated())) else {
                continue;
            };
            assert!(a >= 0.0);
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
            checked += 1;
        }
    }
    assert!(checked > 10);
    let flat = GrayImage::filled(640, 512, 0.7);
    let pose = &scene.poses[0];
    let p = board().position(frames[0].1[0].0);
    assert_eq!(symmetry_cost(&flat, &Vector2::new(p.x, p.y), pose, &model, &samples).unwrap(), 0.0);
}

/// On an image whose intensity is a global bilinear function, bilinear reads and
/// central-difference gradients are both exact, so the chain-rule gradient must agree
/// with finite differences of the cost. Dyadic coefficients keep every pixel exact in f32.
#[test]
fn symmetry_gradient_matches_finite_differences() {
    let img = GrayImage::from_fn(640, 512, |x, y| {
        let (u, v) = (x as f64 - 320.0, y as f64 - 256.0);
        (0.5 + u / 2048.0 - v / 4096.0 + u * v / 2097152.0) as f32
    });
    let board = board();
    let model = ds_190();
    let samples = SymmetrySampleSet::for_board(&board, &RefineConfig::default());
    let scene = synth::make_dataset(&board, &model, 6, Coverage::FullFov, RenderSettings { seed: 5, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for pose in &scene.poses {
        for (point, _) in synth::ground_truth(&board, pose, &model).iter().step_by(9) {
            let p = board.position(*point);
            let x = [p.x + 0.01 * (rng.random::<f64>() - 0.5), p.y + 0.01 * (rng.random::<f64>() - 0.5)];
            let Ok(g) = symmetry_cost_gradient(&img, &Vector2::new(x[0], x[1]), pose, &model, &samples) else {
                continue;
            };
            let cost = |v: &[f64]| vec![symmetry_cost(&img, &Vector2::new(v[0], v[1]), pose, &model, &samples).unwrap()];
            let fd = central_diff(cost, &x, 1e-6);
            let analytic = nalgebra::DMatrix::from_row_slice(1, 2, g.as_slice());
            assert!(max_rel_error(&analytic, &fd) < 1e-3, "analytic {g} vs fd {fd}");
            checked += 1;
        }
    }
    assert!(checked > 20, "{checked}");
}

/// Corners within 40 degrees of the axis on noise-free full field of view renders,
/// initialized one pixel away in a random direction.
#[test]
fn both_strategies_refine_perturbed_corners_on_low_distortion_patches() {
    let board = board();
    let (scene, frames) = scene(6, Coverage::FullFov, 9);
    let model = scene.model;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for strategy in [refine::Strategy::Adaptive, refine::Strategy::Symmetry] {
        let cfg = RefineConfig { strategy, ..Default::default() };
        let (mut tried, mut errors) = (0, Vec::new());
        for (f, (pose, (img, gt))) in scene.poses.iter().zip(&frames).enumerate() {
            let windows = raw_window_sizes(&project_board(&board, pose, &model), cfg.s);
            for (point, truth) in gt {
                if model.polar_angle(truth).unwrap() >= 40.0 {
                    continue;
                }
                let a = rng.random::<f64>() * std::f64::consts::TAU;
                let init = truth + Vector2::new(a.cos(), a.sin());
                let det = widecal::detector::Detection { frame: f, point: *point, pixel: init, provenance: widecal::detector::Provenance::Oracle, refined: false };
                let w = cfg.clamp_window(windows[board.flat_index(*point)].unwrap());
                tried += 1;
                if let Ok(q) = refine_one(img, &det, w, &board, pose, &model, &cfg) {
                    errors.push((q - truth).norm());
                }
            }
        }
        let m = mean(errors.iter().copied());
        assert!(tried >= 50, "only {tried} low-distortion corners");
        assert!(errors.len() * 10 >= tried * 9, "{strategy:?}: {} of {tried} refined", errors.len());
        assert!(m <= 0.2, "{strategy:?}: mean error {m}");
    }
}
