//! Projected first-order minimization over a Euclidean ball.

use crate::error::{Error, Result};
use crate::vecmath::{dist_sq, dot, project_ball_in_place};

/// How the inner solver picks its step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// `1/L` with the smoothness of the inner objective when it is known,
    /// Armijo backtracking otherwise.
    InverseSmoothness,
    Armijo,
}

/// Settings for the projected gradient solver that evaluates `sup_v` and
/// `inf_w` when no closed form is used.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    /// Stop when the gradient-mapping norm falls below this.
    pub tolerance: f64,
    pub step: StepRule,
    /// Use closed forms where available. Turning this off forces the
    /// iterative path everywhere.
    pub prefer_closed_form: bool,
    /// Refined starts for the nonconvex robust family.
    pub starts: usize,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        InnerSolverConfig {
            max_iters: 100_000,
            tolerance: 1e-8,
            step: StepRule::InverseSmoothness,
            prefer_closed_form: true,
            starts: 8,
        }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::config("inner.tolerance", format!("must be positive, got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::config("inner.max_iters", "must be at least 1"));
        }
        if self.starts == 0 {
            return Err(Error::config("inner.starts", "must be at least 1"));
        }
        if let StepRule::Fixed(s) = self.step {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config("inner.step", format!("fixed step must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` over `{‖x‖ ≤ radius}` from `x0`.
///
/// `fg` writes the gradient into its second argument and returns the value.
/// With `accelerate` the iteration is FISTA with function-value restarts;
/// otherwise plain projected gradient.
pub(crate) fn minimize_ball<F>(
    mut fg: F,
    x0: &[f64],
    radius: f64,
    smoothness: Option<f64>,
    cfg: &InnerSolverConfig,
    accelerate: bool,
) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = x0.len();
    let fixed = match cfg.step {
        StepRule::Fixed(s) => Some(s),
        StepRule::InverseSmoothness => smoothness.filter(|l| l.is_finite() && *l > 0.0).map(|l| 1.0 / l),
        StepRule::Armijo => None,
    };
    let mut step = fixed.unwrap_or(1.0);

    let mut x = x0.to_vec();
    project_ball_in_place(&mut x, radius);
    let mut gx = vec![0.0; d];
    let mut fx = fg(&x, &mut gx);
    let mut y = x.clone();
    let mut fy = fx;
    let mut gy = gx.clone();
    let mut x_new = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut t: f64 = 1.0;
    let mut residual = f64::INFINITY;

    for it in 0..cfg.max_iters {
        if !fy.is_finite() {
            return Outcome { x, value: fx, residual, iterations: it, converged: false };
        }
        let f_new = loop {
            x_new.iter_mut().zip(&y).zip(&gy).for_each(|((xn, yk), gk)| *xn = yk - step * gk);
            project_ball_in_place(&mut x_new, radius);
            let f_new = fg(&x_new, &mut g_new);
            if fixed.is_some() {
                break f_new;
            }
            let diff: f64 = x_new.iter().zip(&y).zip(&gy).map(|((a, b), g)| g * (a - b)).sum();
            let model = fy + diff + dist_sq(&x_new, &y) / (2.0 * step);
            if f_new <= model {
                break f_new;
            }
            // Value differences lost to rounding: fall back to the curvature test.
            if (f_new - fy).abs() <= 1e-12 * fy.abs().max(1.0) {
                let curv: f64 = g_new.iter().zip(&gy).zip(x_new.iter().zip(&y)).map(|((a, b), (c, e))| (a - b) * (c - e)).sum();
                if curv <= dist_sq(&x_new, &y) / step {
                    break f_new;
                }
            }
            step *= 0.5;
            if step < 1e-18 {
                return Outcome { x, value: fx, residual, iterations: it, converged: false };
            }
        };
        residual = dist_sq(&y, &x_new).sqrt() / step;
        if residual <= cfg.tolerance {
            let (x, value) = if f_new <= fx { (x_new, f_new) } else { (x, fx) };
            return Outcome { x, value, residual, iterations: it + 1, converged: true };
        }
        if accelerate {
            if f_new > fx {
                t = 1.0;
                y.copy_from_slice(&x);
                fy = fx;
                gy.copy_from_slice(&gx);
                continue;
            }
            let t_next: f64 = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for k in 0..d {
                y[k] = x_new[k] + beta * (x_new[k] - x[k]);
            }
            t = t_next;
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut gx, &mut g_new);
            fx = f_new;
            fy = fg(&y, &mut gy);
        } else {
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut gx, &mut g_new);
            fx = f_new;
            y.copy_from_slice(&x);
            gy.copy_from_slice(&gx);
            fy = fx;
        }
        if fixed.is_none() {
            step *= 1.25;
        }
    }
    Outcome { x, value: fx, residual, iterations: cfg.max_iters, converged: false }
}

/// Dense convex quadratic `½xᵀHx + ⟨g,x⟩ + c`.
#[derive(Debug, Clone)]
pub(crate) struct DenseQuadratic {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub c: f64,
}

impl DenseQuadratic {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim();
        for (i, gi) in grad.iter_mut().enumerate().take(d) {
            *gi = dot(&self.h[i * d..(i + 1) * d], x) + self.g[i];
        }
        0.5 * (dot(x, grad) + dot(&self.g, x)) + self.c
    }

    /// Largest eigenvalue of `H`.
    pub fn smoothness(&self) -> f64 {
        let d = self.dim();
        let m = nalgebra::DMatrix::from_row_slice(d, d, &self.h);
        m.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(h: Vec<f64>, g: Vec<f64>) -> DenseQuadratic {
        DenseQuadratic { h, g, c: 0.0 }
    }

    #[test]
    fn interior_minimum_matches_linear_solve() {
        let q = quad(vec![4.0, 1.0, 1.0, 3.0], vec![1.0, 2.0]);
        // H x = −g
        let expected = [-(3.0 - 2.0) / 11.0, -(8.0 - 1.0) / 11.0];
        for accelerate in [true, false] {
            for step in [StepRule::InverseSmoothness, StepRule::Armijo] {
                let cfg = InnerSolverConfig { step, ..Default::default() };
                let out = minimize_ball(|x, g| q.eval(x, g), &[5.0, 5.0], 100.0, Some(q.smoothness()), &cfg, accelerate);
                assert!(out.converged);
                assert!((out.x[0] - expected[0]).abs() < 1e-8 && (out.x[1] - expected[1]).abs() < 1e-8, "{:?}", out.x);
            }
        }
    }

    #[test]
    fn linear_objective_lands_on_boundary() {
        let q = quad(vec![0.0; 4], vec![3.0, 4.0]);
        let cfg = InnerSolverConfig { step: StepRule::Armijo, ..Default::default() };
        let out = minimize_ball(|x, g| q.eval(x, g), &[0.0, 0.0], 2.0, None, &cfg, true);
        assert!(out.converged);
        assert!((out.x[0] + 1.2).abs() < 1e-9 && (out.x[1] + 1.6).abs() < 1e-9);
        assert!((out.value + 10.0).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let q = quad(vec![1.0, 0.0, 0.0, 1e-4], vec![1.0, 1.0]);
        let cfg = InnerSolverConfig { max_iters: 3, ..Default::default() };
        let out = minimize_ball(|x, g| q.eval(x, g), &[0.0, 0.0], f64::INFINITY, Some(1.0), &cfg, false);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = InnerSolverConfig { tolerance: 0.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Config { field, .. }) if field == "inner.tolerance"));
        let bad = InnerSolverConfig { step: StepRule::Fixed(-1.0), ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Config { field, .. }) if field == "inner.step"));
    }
}
