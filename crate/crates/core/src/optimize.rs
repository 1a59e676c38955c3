//! BFGS maximization with a backtracking Armijo line search that never lets a
//! sign-constrained coordinate cross zero.
//!
//! The hyper-pMOM objective is `−∞` on every coordinate hyperplane
//! `β_i = 0`, so each orthant is its own basin. Steps are truncated to a
//! fraction of the distance to the nearest sign change of a constrained
//! coordinate before backtracking starts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsOptions {
    /// Converged when `‖∇f‖∞ < grad_tol · (1 + |f|)`.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
    /// Backtracking contraction factor.
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Fraction of the distance to the nearest sign change a step may cover.
    pub boundary_fraction: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iter: 500,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            boundary_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// No step satisfied the Armijo condition, even along steepest ascent.
    LineSearchFailed,
    /// The objective or its gradient could not be evaluated at the start.
    InvalidStart,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl BfgsOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

fn grad_ok(value: f64, grad: &DVector<f64>, tol: f64) -> bool {
    grad.amax() < tol * (1.0 + value.abs())
}

/// Largest step along `dir` that keeps constrained coordinates in their orthant.
fn max_step(x: &DVector<f64>, dir: &DVector<f64>, constrained: &[bool], fraction: f64) -> f64 {
    let mut limit = f64::INFINITY;
    for i in 0..x.len() {
        if constrained[i] && x[i] * dir[i] < 0.0 {
            limit = limit.min(-x[i] / dir[i]);
        }
    }
    fraction * limit
}

/// Maximizes `eval`, which returns `(f, ∇f)` or `None` where `f` is not finite.
///
/// `init_inverse` seeds the inverse curvature of `−f`; when absent the first
/// accepted step rescales an identity matrix.
pub fn maximize<F>(
    mut eval: F,
    x0: DVector<f64>,
    constrained: &[bool],
    init_inverse: Option<DMatrix<f64>>,
    opts: &BfgsOptions,
) -> BfgsOutcome
where
    F: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let n = x0.len();
    let mut x = x0;
    let Some((mut fx, mut g)) = eval(&x).filter(|(f, g)| f.is_finite() && g.iter().all(|v| v.is_finite())) else {
        return BfgsOutcome {
            gradient: DVector::from_element(n, f64::NAN),
            value: f64::NAN,
            x,
            iterations: 0,
            termination: Termination::InvalidStart,
        };
    };
    let seeded = init_inverse.is_some();
    let mut h = init_inverse.unwrap_or_else(|| DMatrix::identity(n, n));
    let mut identity_scaled = !seeded;
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if grad_ok(fx, &g, opts.grad_tol) {
            return BfgsOutcome { x, value: fx, gradient: g, iterations, termination: Termination::GradientTolerance };
        }
        // Ascent direction for f.
        let mut dir = &h * &g;
        if dir.dot(&g) <= 0.0 {
            h = DMatrix::identity(n, n);
            identity_scaled = true;
            fresh = true;
            dir = g.clone();
        }

        let mut accepted = None;
        for _attempt in 0..2 {
            let slope = dir.dot(&g);
            let mut step = max_step(&x, &dir, constrained, opts.boundary_fraction).min(1.0);
            if identity_scaled && fresh {
                // Unscaled steepest ascent: cap the first trial step length.
                step = step.min(1.0 / g.amax().max(1.0));
            }
            for _ in 0..opts.max_backtracks {
                let trial = &x + &dir * step;
                if let Some((ft, gt)) = eval(&trial) {
                    if ft.is_finite()
                        && gt.iter().all(|v| v.is_finite())
                        && ft >= fx + opts.armijo * step * slope
                    {
                        accepted = Some((trial, ft, gt, step));
                        break;
                    }
                }
                step *= opts.shrink;
            }
            if accepted.is_some() || (identity_scaled && fresh) {
                break;
            }
            // Retry once from a reset curvature estimate along the gradient.
            h = DMatrix::identity(n, n);
            identity_scaled = true;
            fresh = true;
            dir = g.clone();
        }

        let Some((x_new, f_new, g_new, step)) = accepted else {
            return BfgsOutcome { x, value: fx, gradient: g, iterations, termination: Termination::LineSearchFailed };
        };
        iterations += 1;

        // Curvature pair for the minimization of −f.
        let s = &dir * step;
        let yv = &g - &g_new;
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0 {
            if identity_scaled && fresh {
                h *= sy / yv.norm_squared();
            }
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H ← H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
            h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    let termination = if grad_ok(fx, &g, opts.grad_tol) {
        Termination::GradientTolerance
    } else {
        Termination::MaxIterations
    };
    BfgsOutcome { x, value: fx, gradient: g, iterations, termination }
}
