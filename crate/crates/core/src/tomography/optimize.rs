//! Quasi-Newton ascent with a monotone line search.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentSettings {
    pub max_iterations: usize,
    /// Relative objective increment below which the run may stop.
    pub tolerance: f64,
    /// Gradient infinity-norm required alongside the increment test.
    pub gradient_tolerance: f64,
}

impl Default for AscentSettings {
    fn default() -> Self {
        AscentSettings { max_iterations: 5000, tolerance: 1e-10, gradient_tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct AscentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub last_increment: f64,
    /// Objective value after every accepted step, starting at `x0`.
    pub history: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Maximizes `objective` (returning value and gradient) with BFGS.
///
/// Every accepted step strictly increases the objective.
pub fn maximize<F>(mut objective: F, x0: &[f64], settings: &AscentSettings) -> AscentOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = objective(x.as_slice());
    let mut g = DVector::from_vec(g0);
    let mut inv_hessian = DMatrix::<f64>::identity(n, n);
    let mut history = vec![fx];
    let mut last_increment = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        if inf_norm(&g) == 0.0 {
            converged = true;
            break;
        }
        let mut direction = &inv_hessian * &g;
        let mut slope = direction.dot(&g);
        if !(slope > 0.0) {
            inv_hessian = DMatrix::identity(n, n);
            direction = g.clone();
            slope = direction.dot(&g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &direction * step;
            let (ft, gt) = objective(trial.as_slice());
            if ft.is_finite() && ft > fx && ft >= fx + ARMIJO * step * slope {
                accepted = Some((trial, ft, DVector::from_vec(gt)));
                break;
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if inv_hessian != DMatrix::identity(n, n) {
                inv_hessian = DMatrix::identity(n, n);
                continue;
            }
            // No representable uphill step remains.
            converged = inf_norm(&g) < settings.gradient_tolerance * 1e2;
            break;
        };

        iterations += 1;
        let s = &x_new - &x;
        // Curvature pair for minimizing -f.
        let y = &g - &g_new;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            if iterations == 1 {
                inv_hessian *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &inv_hessian * &y;
            let yhy = y.dot(&hy);
            inv_hessian += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }

        last_increment = f_new - fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);

        let relative = last_increment / fx.abs().max(1.0);
        if relative < settings.tolerance && inf_norm(&g) < settings.gradient_tolerance {
            converged = true;
            break;
        }
    }

    AscentOutcome {
        x: x.as_slice().to_vec(),
        value: fx,
        iterations,
        converged,
        gradient_norm: inf_norm(&g),
        last_increment,
        history,
    }
}

/// Central-difference gradient.
pub fn numerical_gradient(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
