//! Dense Levenberg-Marquardt driver shared by the pose, calibration and refinement
//! problems.
//!
//! Problems supply the Gauss-Newton normal equations at a state and a retraction that
//! applies an update. Damping follows Marquardt's diagonal scaling: the system solved is
//! `(H + lambda * diag(H)) delta = -g`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct LmSettings {
    pub max_iters: usize,
    pub lambda_init: f64,
    /// Multiplier applied to lambda after an accepted step.
    pub lambda_down: f64,
    /// Multiplier applied to lambda after a rejected step.
    pub lambda_up: f64,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub ftol: f64,
    /// Stop when the update norm relative to the state norm falls below this.
    pub xtol: f64,
    pub lambda_max: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iters: 100,
            lambda_init: 1e-3,
            lambda_down: 0.5,
            lambda_up: 4.0,
            ftol: 1e-14,
            xtol: 1e-14,
            lambda_max: 1e16,
        }
    }
}

/// A linearization that can be solved under Marquardt damping.
pub trait DampedSystem {
    fn cost(&self) -> f64;

    /// Largest absolute gradient entry; zero stops the iteration.
    fn gradient_max(&self) -> f64;

    /// Solves `(H + lambda * diag(H)) delta = -g`.
    fn solve_damped(&self, lambda: f64) -> Option<DVector<f64>>;
}

/// Dense Gauss-Newton normal equations at a state.
pub struct NormalEquations {
    pub hessian: DMatrix<f64>,
    pub gradient: DVector<f64>,
    pub cost: f64,
}

impl DampedSystem for NormalEquations {
    fn cost(&self) -> f64 {
        self.cost
    }

    fn gradient_max(&self) -> f64 {
        self.gradient.amax()
    }

    fn solve_damped(&self, lambda: f64) -> Option<DVector<f64>> {
        let mut h = self.hessian.clone();
        for i in 0..h.nrows() {
            let d = h[(i, i)].max(1e-12);
            h[(i, i)] += lambda * d;
        }
        h.cholesky().map(|c| -c.solve(&self.gradient))
    }
}

pub trait LeastSquares {
    type State: Clone;
    type System: DampedSystem;

    fn linearize(&self, state: &Self::State) -> Result<Self::System>;

    /// Cost at a state; an error marks the state as infeasible.
    fn cost(&self, state: &Self::State) -> Result<f64>;

    fn retract(&self, state: &Self::State, delta: &DVector<f64>) -> Result<Self::State>;

    /// Norm used for the relative step test.
    fn state_norm(&self, _state: &Self::State) -> f64 {
        1.0
    }
}

#[derive(Clone, Debug)]
pub struct LmReport<S> {
    pub state: S,
    pub cost: f64,
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    pub converged: bool,
}

pub fn minimize<P: LeastSquares>(problem: &P, init: P::State, settings: &LmSettings) -> Result<LmReport<P::State>> {
    let mut state = init;
    let mut eq = problem.linearize(&state)?;
    let mut cost = eq.cost();
    let mut history = vec![cost];
    let mut lambda = settings.lambda_init;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iters {
        iterations += 1;
        if eq.gradient_max() == 0.0 || cost == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda <= settings.lambda_max {
            let Some(delta) = eq.solve_damped(lambda) else {
                lambda *= settings.lambda_up;
                continue;
            };
            if !delta.iter().all(|v| v.is_finite()) {
                lambda *= settings.lambda_up;
                continue;
            }
            let candidate = match problem.retract(&state, &delta) {
                Ok(c) => c,
                Err(_) => {
                    lambda *= settings.lambda_up;
                    continue;
                }
            };
            let new_cost = match problem.cost(&candidate) {
                Ok(c) if c.is_finite() => c,
                _ => {
                    lambda *= settings.lambda_up;
                    continue;
                }
            };
            if new_cost <= cost {
                let rel_decrease = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                let small_step = delta.norm() <= settings.xtol * (problem.state_norm(&state) + settings.xtol);
                state = candidate;
                cost = new_cost;
                history.push(cost);
                lambda = (lambda * settings.lambda_down).max(1e-15);
                accepted = true;
                if rel_decrease < settings.ftol || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= settings.lambda_up;
        }
        if !accepted {
            // No descent direction left at any damping: a (numerical) minimum.
            converged = true;
            break;
        }
        eq = problem.linearize(&state)?;
        cost = eq.cost();
        if converged {
            break;
        }
    }
    Ok(LmReport { state, cost, iterations, cost_history: history, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as a least-squares problem: r = (10 (y - x^2), 1 - x).
    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        type State = [f64; 2];
        type System = NormalEquations;

        fn linearize(&self, s: &[f64; 2]) -> Result<NormalEquations> {
            let r = DVector::from_vec(vec![10.0 * (s[1] - s[0] * s[0]), 1.0 - s[0]]);
            let j = DMatrix::from_row_slice(2, 2, &[-20.0 * s[0], 10.0, -1.0, 0.0]);
            Ok(NormalEquations { hessian: j.transpose() * &j, gradient: j.transpose() * &r, cost: 0.5 * r.norm_squared() })
        }

        fn cost(&self, s: &[f64; 2]) -> Result<f64> {
            Ok(0.5 * ((10.0 * (s[1] - s[0] * s[0])).powi(2) + (1.0 - s[0]).powi(2)))
        }

        fn retract(&self, s: &[f64; 2], d: &DVector<f64>) -> Result<[f64; 2]> {
            Ok([s[0] + d[0], s[1] + d[1]])
        }
    }

    #[test]
    fn solves_rosenbrock_with_monotone_cost() {
        let report = minimize(&Rosenbrock, [-1.2, 1.0], &LmSettings::default()).unwrap();
        assert!((report.state[0] - 1.0).abs() < 1e-8 && (report.state[1] - 1.0).abs() < 1e-8);
        assert!(report.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(report.converged);
    }
}
