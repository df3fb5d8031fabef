//! Minimax problem families with per-example gradient oracles.
//!
//! Every objective is a function `f(w, v; z)` of a primal vector `w`, a dual
//! vector `v` and one example `z`. The empirical objective `F_S` is the mean of
//! `f` over a [`Dataset`]. Four families are provided:
//!
//! * `quadratic-scsc`: `½ρ‖w‖² + z₁⟨w,v⟩ − ½ρ‖v‖² + ⟨z₂,w⟩ − ⟨z₃,v⟩`, with the
//!   example features laid out as `[z₁, z₂ (d entries), z₃ (d entries)]`.
//! * `bilinear-cc`: `⟨w,x⟩⟨v,x⟩ + y⟨x, w − v⟩ + ½λ(‖w‖² − ‖v‖²)`; `λ = 0` is the
//!   merely convex-concave case.
//! * `auc-solam`: the square-loss AUC saddle reformulation with a linear
//!   scorer. Primal is `(w, a, b)`, dual is `(α)`.
//! * `robust-mean`: `ψ(|⟨w,x⟩ − y| − |⟨v,x⟩ − y|)` with the truncated loss
//!   `ψ(x) = log(1 + |x| + x²/2)·sign(x)`.

mod dataset;
mod quadratic_model;
mod robust;
mod saddle;

pub use dataset::{Dataset, Example};
pub use quadratic_model::QuadraticModel;
pub use robust::{psi, psi_prime};
pub use saddle::{solve_model_saddle, SaddleMethod, SaddleSolution};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vecmath::{dot, norm, norm_sq, project_ball_in_place, Point};

/// Family tag of a [`MinimaxProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    QuadraticScsc,
    BilinearCc,
    AucSolam,
    RobustMean,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::QuadraticScsc => "quadratic-scsc",
            ProblemKind::BilinearCc => "bilinear-cc",
            ProblemKind::AucSolam => "auc-solam",
            ProblemKind::RobustMean => "robust-mean",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic-scsc" => Ok(ProblemKind::QuadraticScsc),
            "bilinear-cc" => Ok(ProblemKind::BilinearCc),
            "auc-solam" => Ok(ProblemKind::AucSolam),
            "robust-mean" => Ok(ProblemKind::RobustMean),
            other => Err(Error::config(
                "problem.kind",
                format!("unknown problem kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Objective {
    Quadratic { rho: f64, dim: usize },
    Bilinear { reg: f64 },
    Auc { p: f64, dim: usize },
    Robust,
}

/// A stochastic minimax objective together with its feasible balls and
/// regularity constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxProblem {
    objective: Objective,
    pub primal_dim: usize,
    pub dual_dim: usize,
    pub radius_w: f64,
    pub radius_v: f64,
    /// Bound on `‖∇_w f‖` and `‖∇_v f‖` over the balls and the dataset.
    pub lipschitz: Option<f64>,
    /// Lipschitz constant of the joint gradient map.
    pub smooth: Option<f64>,
    /// Strong-convexity-strong-concavity modulus (0 for merely convex-concave).
    pub sc_rho: f64,
    /// Weak-convexity-weak-concavity modulus (0 when convex-concave).
    pub wc_rho: f64,
}

fn check_radii(radius_w: f64, radius_v: f64) -> Result<()> {
    for (name, r) in [("problem.radius_w", radius_w), ("problem.radius_v", radius_v)] {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::config(name, format!("ball radius must be > 0, got {r}")));
        }
    }
    Ok(())
}

impl MinimaxProblem {
    /// `½ρ‖w‖² + z₁⟨w,v⟩ − ½ρ‖v‖² + ⟨z₂,w⟩ − ⟨z₃,v⟩`.
    pub fn quadratic_scsc(
        rho: f64,
        dim: usize,
        data: &Dataset,
        radius_w: f64,
        radius_v: f64,
    ) -> Result<Self> {
        if rho.is_nan() || rho <= 0.0 {
            return Err(Error::invalid(format!("quadratic-scsc needs rho > 0, got {rho}")));
        }
        if dim == 0 || data.dim() != 1 + 2 * dim {
            return Err(Error::invalid(format!(
                "quadratic-scsc with dim {dim} needs {} features per example, got {}",
                1 + 2 * dim,
                data.dim()
            )));
        }
        check_radii(radius_w, radius_v)?;
        let mut g: f64 = 0.0;
        let mut max_coupling: f64 = 0.0;
        for ex in data {
            let (z1, z2, z3) = split_quadratic(&ex.features, dim);
            let gw = rho * radius_w + z1.abs() * radius_v + norm(z2);
            let gv = z1.abs() * radius_w + rho * radius_v + norm(z3);
            g = g.max(gw).max(gv);
            max_coupling = max_coupling.max(z1.abs());
        }
        Ok(MinimaxProblem {
            objective: Objective::Quadratic { rho, dim },
            primal_dim: dim,
            dual_dim: dim,
            radius_w,
            radius_v,
            lipschitz: finite(g),
            smooth: finite((rho * rho + max_coupling * max_coupling).sqrt()),
            sc_rho: rho,
            wc_rho: 0.0,
        })
    }

    /// `⟨w,x⟩⟨v,x⟩ + y⟨x, w − v⟩ + ½λ(‖w‖² − ‖v‖²)`.
    pub fn bilinear_cc(data: &Dataset, reg: f64, radius_w: f64, radius_v: f64) -> Result<Self> {
        if reg.is_nan() || reg < 0.0 {
            return Err(Error::invalid(format!("bilinear-cc needs reg >= 0, got {reg}")));
        }
        check_radii(radius_w, radius_v)?;
        let mut g: f64 = 0.0;
        let mut l: f64 = 0.0;
        for ex in data {
            let xn = norm(&ex.features);
            let y = ex.label.abs();
            g = g
                .max((radius_v * xn + y) * xn + reg * radius_w)
                .max((radius_w * xn + y) * xn + reg * radius_v);
            l = l.max((reg * reg + xn.powi(4)).sqrt());
        }
        Ok(MinimaxProblem {
            objective: Objective::Bilinear { reg },
            primal_dim: data.dim(),
            dual_dim: data.dim(),
            radius_w,
            radius_v,
            lipschitz: finite(g),
            smooth: finite(l),
            sc_rho: reg,
            wc_rho: 0.0,
        })
    }

    /// Square-loss AUC saddle problem with linear scorer `h(w;x) = ⟨w,x⟩`.
    ///
    /// `p` defaults to the positive fraction of `data`. The primal ball bounds
    /// `(w, a, b)` jointly; the dual ball bounds `α`.
    pub fn auc_solam(
        data: &Dataset,
        p_override: Option<f64>,
        radius_w: f64,
        radius_v: f64,
    ) -> Result<Self> {
        for (i, ex) in data.iter().enumerate() {
            if ex.label != 1.0 && ex.label != -1.0 {
                return Err(Error::invalid(format!(
                    "auc-solam needs labels in {{+1, -1}}, example {i} has {}",
                    ex.label
                )));
            }
        }
        let p = match p_override {
            Some(p) if p > 0.0 && p < 1.0 => p,
            Some(p) => {
                return Err(Error::invalid(format!("p_override must lie in (0, 1), got {p}")))
            }
            None => {
                let p = data.positive_fraction();
                if p == 0.0 || p == 1.0 {
                    return Err(Error::invalid(
                        "auc-solam needs both classes present (or p_override)",
                    ));
                }
                p
            }
        };
        check_radii(radius_w, radius_v)?;
        let mut g: f64 = 0.0;
        let mut l: f64 = 0.0;
        for ex in data {
            let s = if ex.label > 0.0 { 1.0 / p } else { 1.0 / (1.0 - p) };
            let xn = norm(&ex.features);
            let resid = radius_w * xn + radius_w;
            let dh = 2.0 * s * resid + 2.0 * s * (1.0 + radius_v);
            let gw = dh * xn + 2.0 * s * resid;
            let gv = 2.0 * s * radius_w * xn + 2.0 * radius_v;
            g = g.max(gw).max(gv);
            let x2 = xn * xn;
            l = l.max((4.0 * s * s * (x2 * x2 + 4.0 * x2 + 1.0) + 4.0).sqrt());
        }
        Ok(MinimaxProblem {
            objective: Objective::Auc { p, dim: data.dim() },
            primal_dim: data.dim() + 2,
            dual_dim: 1,
            radius_w,
            radius_v,
            lipschitz: finite(g),
            smooth: finite(l),
            sc_rho: 0.0,
            wc_rho: 0.0,
        })
    }

    /// Truncated-loss robust estimation with absolute losses
    /// `ℓ(u; z) = |⟨u,x⟩ − y|`.
    ///
    /// The weak-convexity modulus is the largest monotonicity defect seen over
    /// 10³ random point pairs.
    pub fn robust_mean(data: &Dataset, radius_w: f64, radius_v: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("robust-mean needs a nonempty dataset"));
        }
        check_radii(radius_w, radius_v)?;
        let mut problem = MinimaxProblem {
            objective: Objective::Robust,
            primal_dim: data.dim(),
            dual_dim: data.dim(),
            radius_w,
            radius_v,
            lipschitz: finite(data.max_feature_norm()),
            smooth: None,
            sc_rho: 0.0,
            wc_rho: 0.0,
        };
        problem.wc_rho = robust::estimate_weak_convexity(&problem, data, 1000, 0x5eed);
        Ok(problem)
    }

    pub fn kind(&self) -> ProblemKind {
        match self.objective {
            Objective::Quadratic { .. } => ProblemKind::QuadraticScsc,
            Objective::Bilinear { .. } => ProblemKind::BilinearCc,
            Objective::Auc { .. } => ProblemKind::AucSolam,
            Objective::Robust => ProblemKind::RobustMean,
        }
    }

    /// Positive-class probability used by the AUC objective.
    pub fn auc_p(&self) -> Option<f64> {
        match self.objective {
            Objective::Auc { p, .. } => Some(p),
            _ => None,
        }
    }

    /// Regularization weight of the bilinear family.
    pub fn bilinear_reg(&self) -> Option<f64> {
        match self.objective {
            Objective::Bilinear { reg } => Some(reg),
            _ => None,
        }
    }

    /// Expected feature length of an example for this problem.
    pub fn example_dim(&self) -> usize {
        match self.objective {
            Objective::Quadratic { dim, .. } => 1 + 2 * dim,
            Objective::Auc { dim, .. } => dim,
            Objective::Bilinear { .. } | Objective::Robust => self.primal_dim,
        }
    }

    pub fn check_point(&self, pt: &Point) -> Result<()> {
        if pt.w.len() != self.primal_dim || pt.v.len() != self.dual_dim {
            return Err(Error::invalid(format!(
                "point has dimensions ({}, {}), problem expects ({}, {})",
                pt.w.len(),
                pt.v.len(),
                self.primal_dim,
                self.dual_dim
            )));
        }
        Ok(())
    }

    pub fn check_example(&self, z: &Example) -> Result<()> {
        if z.features.len() != self.example_dim() {
            return Err(Error::invalid(format!(
                "example has {} features, problem expects {}",
                z.features.len(),
                self.example_dim()
            )));
        }
        Ok(())
    }

    pub fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.dim() != self.example_dim() {
            return Err(Error::invalid(format!(
                "dataset has {} features, problem expects {}",
                data.dim(),
                self.example_dim()
            )));
        }
        Ok(())
    }

    /// Projects `pt` onto the feasible balls in place.
    pub fn project(&self, pt: &mut Point) {
        project_ball_in_place(&mut pt.w, self.radius_w);
        project_ball_in_place(&mut pt.v, self.radius_v);
    }

    /// `f(w, v; z)`.
    pub fn value(&self, pt: &Point, z: &Example) -> Result<f64> {
        self.check_point(pt)?;
        self.check_example(z)?;
        Ok(self.value_unchecked(&pt.w, &pt.v, z))
    }

    /// Partial gradients `(∇_w f, ∇_v f)` at `pt`.
    pub fn grad(&self, pt: &Point, z: &Example) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(pt)?;
        self.check_example(z)?;
        let mut gw = vec![0.0; self.primal_dim];
        let mut gv = vec![0.0; self.dual_dim];
        self.grad_into(&pt.w, &pt.v, z, &mut gw, &mut gv);
        Ok((gw, gv))
    }

    /// `F_S(w, v)`, the mean of `f` over `data`.
    pub fn empirical_value(&self, pt: &Point, data: &Dataset) -> Result<f64> {
        self.check_point(pt)?;
        self.check_dataset(data)?;
        Ok(self.mean_value(&pt.w, &pt.v, data))
    }

    /// `(∇_w F_S, ∇_v F_S)`.
    pub fn empirical_grad(&self, pt: &Point, data: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_point(pt)?;
        self.check_dataset(data)?;
        let mut gw = vec![0.0; self.primal_dim];
        let mut gv = vec![0.0; self.dual_dim];
        self.mean_grad_into(&pt.w, &pt.v, data, &mut gw, &mut gv);
        Ok((gw, gv))
    }

    /// Exact saddle point of `F_S` for the quadratic and bilinear families.
    pub fn empirical_saddle(&self, data: &Dataset) -> Result<SaddleSolution> {
        self.check_dataset(data)?;
        saddle::empirical_saddle(self, data)
    }

    /// Averaged coefficients of `F_S` for the families whose objective is
    /// quadratic in `(w, v)`; `None` for AUC and robust-mean.
    pub fn quadratic_model(&self, data: &Dataset) -> Option<QuadraticModel> {
        let n = data.len() as f64;
        match self.objective {
            Objective::Quadratic { rho, dim } => {
                let mut coupling = 0.0;
                let mut lin_w = vec![0.0; dim];
                let mut lin_v = vec![0.0; dim];
                for ex in data {
                    let (z1, z2, z3) = split_quadratic(&ex.features, dim);
                    coupling += z1;
                    lin_w.iter_mut().zip(z2).for_each(|(a, b)| *a += b);
                    lin_v.iter_mut().zip(z3).for_each(|(a, b)| *a += b);
                }
                lin_w.iter_mut().for_each(|a| *a /= n);
                lin_v.iter_mut().for_each(|a| *a /= n);
                Some(QuadraticModel::Coupled {
                    rho,
                    coupling: coupling / n,
                    lin_w,
                    lin_v,
                })
            }
            Objective::Bilinear { reg } => {
                let d = self.primal_dim;
                let mut second_moment = vec![0.0; d * d];
                let mut cross = vec![0.0; d];
                for ex in data {
                    let x = &ex.features;
                    for i in 0..d {
                        cross[i] += ex.label * x[i];
                        for j in 0..d {
                            second_moment[i * d + j] += x[i] * x[j];
                        }
                    }
                }
                second_moment.iter_mut().for_each(|a| *a /= n);
                cross.iter_mut().for_each(|a| *a /= n);
                Some(QuadraticModel::Bilinear {
                    reg,
                    second_moment,
                    cross,
                })
            }
            Objective::Auc { .. } | Objective::Robust => None,
        }
    }

    pub(crate) fn mean_value(&self, w: &[f64], v: &[f64], data: &Dataset) -> f64 {
        let sum: f64 = data.iter().map(|z| self.value_unchecked(w, v, z)).sum();
        sum / data.len() as f64
    }

    pub(crate) fn mean_grad_into(
        &self,
        w: &[f64],
        v: &[f64],
        data: &Dataset,
        gw: &mut [f64],
        gv: &mut [f64],
    ) {
        gw.fill(0.0);
        gv.fill(0.0);
        let mut tw = vec![0.0; gw.len()];
        let mut tv = vec![0.0; gv.len()];
        for z in data {
            self.grad_into(w, v, z, &mut tw, &mut tv);
            gw.iter_mut().zip(&tw).for_each(|(a, b)| *a += b);
            gv.iter_mut().zip(&tv).for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / data.len() as f64;
        gw.iter_mut().for_each(|a| *a *= inv);
        gv.iter_mut().for_each(|a| *a *= inv);
    }

    pub(crate) fn value_unchecked(&self, w: &[f64], v: &[f64], z: &Example) -> f64 {
        match self.objective {
            Objective::Quadratic { rho, dim } => {
                let (z1, z2, z3) = split_quadratic(&z.features, dim);
                0.5 * rho * norm_sq(w) + z1 * dot(w, v) - 0.5 * rho * norm_sq(v) + dot(z2, w)
                    - dot(z3, v)
            }
            Objective::Bilinear { reg } => {
                let x = &z.features;
                let hw = dot(w, x);
                let hv = dot(v, x);
                hw * hv + z.label * (hw - hv) + 0.5 * reg * (norm_sq(w) - norm_sq(v))
            }
            Objective::Auc { p, dim } => {
                let h = dot(&w[..dim], &z.features);
                let (a, b, alpha) = (w[dim], w[dim + 1], v[0]);
                if z.label > 0.0 {
                    (h - a) * (h - a) / p - 2.0 * (1.0 + alpha) * h / p - alpha * alpha
                } else {
                    let q = 1.0 - p;
                    (h - b) * (h - b) / q + 2.0 * (1.0 + alpha) * h / q - alpha * alpha
                }
            }
            Objective::Robust => {
                let rw = dot(w, &z.features) - z.label;
                let rv = dot(v, &z.features) - z.label;
                psi(rw.abs() - rv.abs())
            }
        }
    }

    pub(crate) fn grad_into(
        &self,
        w: &[f64],
        v: &[f64],
        z: &Example,
        gw: &mut [f64],
        gv: &mut [f64],
    ) {
        match self.objective {
            Objective::Quadratic { rho, dim } => {
                let (z1, z2, z3) = split_quadratic(&z.features, dim);
                for k in 0..dim {
                    gw[k] = rho * w[k] + z1 * v[k] + z2[k];
                    gv[k] = z1 * w[k] - rho * v[k] - z3[k];
                }
            }
            Objective::Bilinear { reg } => {
                let x = &z.features;
                let cw = dot(v, x) + z.label;
                let cv = dot(w, x) - z.label;
                for k in 0..x.len() {
                    gw[k] = cw * x[k] + reg * w[k];
                    gv[k] = cv * x[k] - reg * v[k];
                }
            }
            Objective::Auc { p, dim } => {
                let x = &z.features;
                let h = dot(&w[..dim], x);
                let (a, b, alpha) = (w[dim], w[dim + 1], v[0]);
                let (dh, da, db, dalpha);
                if z.label > 0.0 {
                    dh = 2.0 * (h - a) / p - 2.0 * (1.0 + alpha) / p;
                    da = -2.0 * (h - a) / p;
                    db = 0.0;
                    dalpha = -2.0 * h / p - 2.0 * alpha;
                } else {
                    let q = 1.0 - p;
                    dh = 2.0 * (h - b) / q + 2.0 * (1.0 + alpha) / q;
                    da = 0.0;
                    db = -2.0 * (h - b) / q;
                    dalpha = 2.0 * h / q - 2.0 * alpha;
                }
                for k in 0..dim {
                    gw[k] = dh * x[k];
                }
                gw[dim] = da;
                gw[dim + 1] = db;
                gv[0] = dalpha;
            }
            Objective::Robust => {
                let x = &z.features;
                let rw = dot(w, x) - z.label;
                let rv = dot(v, x) - z.label;
                let slope = psi_prime(rw.abs() - rv.abs());
                let sw = slope * robust::sign(rw);
                let sv = -slope * robust::sign(rv);
                for k in 0..x.len() {
                    gw[k] = sw * x[k];
                    gv[k] = sv * x[k];
                }
            }
        }
    }

    /// Draws a point uniformly from the feasible balls. Infinite radii are
    /// replaced by `fallback_radius`.
    pub fn random_feasible_point<R: Rng>(&self, rng: &mut R, fallback_radius: f64) -> Point {
        let rw = if self.radius_w.is_finite() { self.radius_w } else { fallback_radius };
        let rv = if self.radius_v.is_finite() { self.radius_v } else { fallback_radius };
        Point::new(
            random_in_ball(rng, self.primal_dim, rw),
            random_in_ball(rng, self.dual_dim, rv),
        )
    }

    /// Largest `max(‖∇_w f‖, ‖∇_v f‖)` over `samples` random feasible points
    /// and dataset examples.
    pub fn sample_gradient_bound(&self, data: &Dataset, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gw = vec![0.0; self.primal_dim];
        let mut gv = vec![0.0; self.dual_dim];
        let mut best: f64 = 0.0;
        for _ in 0..samples {
            let pt = self.random_feasible_point(&mut rng, 1.0);
            let z = &data.examples()[rng.random_range(0..data.len())];
            self.grad_into(&pt.w, &pt.v, z, &mut gw, &mut gv);
            best = best.max(norm(&gw)).max(norm(&gv));
        }
        best
    }

}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub(crate) fn split_quadratic(features: &[f64], dim: usize) -> (f64, &[f64], &[f64]) {
    (features[0], &features[1..1 + dim], &features[1 + dim..1 + 2 * dim])
}

pub(crate) fn random_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    if dim == 0 {
        return Vec::new();
    }
    let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&x);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    if n > 0.0 {
        x.iter_mut().for_each(|c| *c *= r / n);
    }
    x
}

/// Problem family plus construction parameters, so the same structure can be
/// built from any dataset (e.g. both halves of a neighboring pair).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Modulus for `quadratic-scsc`.
    pub rho: f64,
    /// Regularization for `bilinear-cc`.
    pub reg: f64,
    pub p_override: Option<f64>,
    pub radius_w: f64,
    pub radius_v: f64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        ProblemSpec {
            kind,
            rho: 1.0,
            reg: 0.0,
            p_override: None,
            radius_w: 10.0,
            radius_v: 10.0,
        }
    }

    pub fn build(&self, data: &Dataset) -> Result<MinimaxProblem> {
        match self.kind {
            ProblemKind::QuadraticScsc => {
                if data.dim() < 3 || data.dim().is_multiple_of(2) {
                    return Err(Error::invalid(format!(
                        "quadratic-scsc examples need 1 + 2d features, got {}",
                        data.dim()
                    )));
                }
                let dim = (data.dim() - 1) / 2;
                MinimaxProblem::quadratic_scsc(self.rho, dim, data, self.radius_w, self.radius_v)
            }
            ProblemKind::BilinearCc => {
                MinimaxProblem::bilinear_cc(data, self.reg, self.radius_w, self.radius_v)
            }
            ProblemKind::AucSolam => {
                MinimaxProblem::auc_solam(data, self.p_override, self.radius_w, self.radius_v)
            }
            ProblemKind::RobustMean => {
                MinimaxProblem::robust_mean(data, self.radius_w, self.radius_v)
            }
        }
    }
}
