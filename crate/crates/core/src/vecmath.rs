//! Dense vector arithmetic and Euclidean-ball projection.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`. Norms use naive double-precision
//! summation; the dimensions handled here are small enough that compensated
//! summation buys nothing.

use crate::error::{Error, Result};

/// A primal/dual iterate pair `(w, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl Point {
    pub fn new(w: Vec<f64>, v: Vec<f64>) -> Self {
        Point { w, v }
    }

    pub fn zeros(primal_dim: usize, dual_dim: usize) -> Self {
        Point {
            w: vec![0.0; primal_dim],
            v: vec![0.0; dual_dim],
        }
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.w) && all_finite(&self.v)
    }

    /// Concatenation `(w, v)` as one vector.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w.len() + self.v.len());
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.v);
        out
    }

    pub fn from_flat(flat: &[f64], primal_dim: usize) -> Self {
        Point {
            w: flat[..primal_dim].to_vec(),
            v: flat[primal_dim..].to_vec(),
        }
    }
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Relative slack on the ball test. A rescaled point may round to a norm a few
/// ulps above the radius; treating those as inside makes projection bitwise
/// idempotent.
const BALL_SLACK: f64 = 4.0 * f64::EPSILON;

/// In-place projection onto the closed ball of the given radius. An infinite
/// radius leaves `x` untouched. Points on the sphere are not rescaled.
pub fn project_ball_in_place(x: &mut [f64], radius: f64) {
    if radius.is_infinite() {
        return;
    }
    let limit = radius * (1.0 + BALL_SLACK);
    for _ in 0..4 {
        let n = norm(x);
        if n <= limit {
            return;
        }
        let scale = radius / n;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
}

/// Projection onto `{y : ‖y‖₂ ≤ radius}`.
pub fn project_ball(x: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !all_finite(x) {
        return Err(Error::invalid("project_ball: non-finite input vector"));
    }
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::invalid(format!(
            "project_ball: radius must be nonnegative, got {radius}"
        )));
    }
    let mut out = x.to_vec();
    project_ball_in_place(&mut out, radius);
    Ok(out)
}

/// `√(‖a.w − b.w‖² + ‖a.v − b.v‖²)`
pub fn joint_norm(a: &Point, b: &Point) -> Result<f64> {
    if a.w.len() != b.w.len() || a.v.len() != b.v.len() {
        return Err(Error::invalid(format!(
            "joint_norm: dimension mismatch ({}, {}) vs ({}, {})",
            a.w.len(),
            a.v.len(),
            b.w.len(),
            b.v.len()
        )));
    }
    Ok((dist_sq(&a.w, &b.w) + dist_sq(&a.v, &b.v)).sqrt())
}
