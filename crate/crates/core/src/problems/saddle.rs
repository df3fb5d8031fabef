use super::quadratic_model::QuadraticModel;
use super::{Dataset, MinimaxProblem};
use crate::error::{Error, Result};
use crate::vecmath::{dist_sq, norm, norm_sq, project_ball_in_place, Point};

const EXTRAGRADIENT_TOL: f64 = 1e-10;
const EXTRAGRADIENT_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaddleMethod {
    /// Direct solve of the stationarity system.
    ClosedForm,
    /// Projected extragradient, used when the unconstrained saddle is outside
    /// the balls or the stationarity system is singular.
    Extragradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub point: Point,
    /// Some coordinate block sits on its ball boundary.
    pub on_boundary: bool,
    /// `‖∇F_S‖` for an interior solve, the projected fixed-point residual
    /// otherwise.
    pub residual: f64,
    pub method: SaddleMethod,
}

pub(crate) fn empirical_saddle(problem: &MinimaxProblem, data: &Dataset) -> Result<SaddleSolution> {
    let model = problem.quadratic_model(data).ok_or_else(|| {
        Error::Unsupported(format!(
            "no closed-form saddle for {} problems",
            problem.kind()
        ))
    })?;
    Ok(solve_model_saddle(&model, problem.radius_w, problem.radius_v))
}

fn joint_grad_norm(model: &QuadraticModel, pt: &Point) -> f64 {
    let (gw, gv) = model.grad(&pt.w, &pt.v);
    (norm_sq(&gw) + norm_sq(&gv)).sqrt()
}

/// Saddle point of a quadratic model restricted to the two balls.
pub fn solve_model_saddle(model: &QuadraticModel, radius_w: f64, radius_v: f64) -> SaddleSolution {
    let start = match model.stationary_point() {
        Some(pt) => {
            if norm(&pt.w) <= radius_w && norm(&pt.v) <= radius_v {
                let residual = joint_grad_norm(model, &pt);
                return SaddleSolution {
                    point: pt,
                    on_boundary: false,
                    residual,
                    method: SaddleMethod::ClosedForm,
                };
            }
            let mut p = pt;
            project_ball_in_place(&mut p.w, radius_w);
            project_ball_in_place(&mut p.v, radius_v);
            p
        }
        None => Point::zeros(model.dim(), model.dim()),
    };
    let (point, residual) = extragradient(model, start, radius_w, radius_v);
    let on_boundary = (radius_w.is_finite() && norm(&point.w) >= radius_w * (1.0 - 1e-9))
        || (radius_v.is_finite() && norm(&point.v) >= radius_v * (1.0 - 1e-9));
    SaddleSolution {
        point,
        on_boundary,
        residual,
        method: SaddleMethod::Extragradient,
    }
}

fn operator_step(model: &QuadraticModel, pt: &Point, gamma: f64, rw: f64, rv: f64) -> Point {
    let (gw, gv) = model.grad(&pt.w, &pt.v);
    let mut w: Vec<f64> = pt.w.iter().zip(&gw).map(|(x, g)| x - gamma * g).collect();
    let mut v: Vec<f64> = pt.v.iter().zip(&gv).map(|(x, g)| x + gamma * g).collect();
    project_ball_in_place(&mut w, rw);
    project_ball_in_place(&mut v, rv);
    Point::new(w, v)
}

/// Projected extragradient on the monotone field `(∇_w F, −∇_v F)`.
fn extragradient(model: &QuadraticModel, start: Point, rw: f64, rv: f64) -> (Point, f64) {
    let gamma = 0.5 / model.operator_lipschitz().max(1e-12);
    let mut u = start;
    let mut residual = f64::INFINITY;
    for _ in 0..EXTRAGRADIENT_MAX_ITERS {
        let half = operator_step(model, &u, gamma, rw, rv);
        residual = (dist_sq(&u.w, &half.w) + dist_sq(&u.v, &half.v)).sqrt() / gamma;
        if residual <= EXTRAGRADIENT_TOL {
            break;
        }
        let (gw, gv) = model.grad(&half.w, &half.v);
        let mut w: Vec<f64> = u.w.iter().zip(&gw).map(|(x, g)| x - gamma * g).collect();
        let mut v: Vec<f64> = u.v.iter().zip(&gv).map(|(x, g)| x + gamma * g).collect();
        project_ball_in_place(&mut w, rw);
        project_ball_in_place(&mut v, rv);
        u = Point::new(w, v);
    }
    (u, residual)
}
