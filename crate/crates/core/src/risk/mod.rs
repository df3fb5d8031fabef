//! Empirical and population risk measures at a realized point: plain
//! generalization error, primal risk, weak and strong primal-dual gaps, and
//! the PL-condition generalization check for the quadratic family.

mod inner;

use std::borrow::Cow;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{self, BoundName, BoundQuery};
use crate::dataio::{gen_synthetic, RiskRow, SyntheticFamily, SyntheticSpec};
use crate::error::{Error, Result};
use crate::parallel::{derive_seed, pool};
use crate::problems::{random_in_ball, Dataset, Example, MinimaxProblem, ProblemKind, ProblemSpec, QuadraticModel};
use crate::vecmath::{joint_norm, Point};

pub use inner::{InnerSolverConfig, StepRule};
use inner::{minimize_ball, DenseQuadratic, Outcome};

pub const DEFAULT_MC_SAMPLES: usize = 100_000;
const CHUNK: usize = 10_000;
const NONCONVEX_REFINE_ITERS: usize = 2_000;

/// How a number in a report was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    ClosedForm,
    InnerSolver,
    MultiStart,
    Analytic,
    MonteCarlo,
    Holdout,
    Empirical,
}

impl EvalMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalMethod::ClosedForm => "closed-form",
            EvalMethod::InnerSolver => "inner-solver",
            EvalMethod::MultiStart => "multi-start",
            EvalMethod::Analytic => "analytic",
            EvalMethod::MonteCarlo => "monte-carlo",
            EvalMethod::Holdout => "holdout",
            EvalMethod::Empirical => "empirical",
        }
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimizer and optimal value of one inner `sup_v` or `inf_w` problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub arg: Vec<f64>,
    pub value: f64,
    /// Gradient-mapping norm at the returned point (0 for closed forms).
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: EvalMethod,
}

impl InnerResult {
    fn closed(arg: Vec<f64>, value: f64, method: EvalMethod) -> Self {
        InnerResult { arg, value, residual: 0.0, iterations: 0, converged: true, method }
    }

    fn from_outcome(out: Outcome, negate: bool, method: EvalMethod) -> Self {
        InnerResult {
            arg: out.x,
            value: if negate { -out.value } else { out.value },
            residual: out.residual,
            iterations: out.iterations,
            converged: out.converged,
            method,
        }
    }
}

/// `sup_v F_S(w, v) − inf_w F_S(w, v)` at a realized point.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEstimate {
    pub gap: f64,
    pub sup: InnerResult,
    pub inf: InnerResult,
    /// False when either inner problem stopped short of its tolerance or has
    /// no convergence certificate.
    pub reliable: bool,
}

impl GapEstimate {
    pub fn residual(&self) -> f64 {
        self.sup.residual.max(self.inf.residual)
    }

    fn new(sup: InnerResult, inf: InnerResult) -> Self {
        let reliable = sup.converged && inf.converged;
        GapEstimate { gap: sup.value - inf.value, sup, inf, reliable }
    }
}

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub method: EvalMethod,
}

/// Where the population objective `F = E_z f` comes from.
#[derive(Debug, Clone, Copy)]
pub enum PopulationSource<'a> {
    /// Exact expectation from the moments of a synthetic family.
    Analytic(&'a SyntheticSpec),
    /// Mean over `m` fresh draws from a synthetic family.
    MonteCarlo { spec: &'a SyntheticSpec, m: usize, seed: u64 },
    /// Mean over a held-out sample.
    Holdout(&'a Dataset),
}

/// Objective that a risk is measured against.
#[derive(Debug, Clone, Copy)]
pub enum RiskTarget<'a> {
    Empirical(&'a Dataset),
    Population(PopulationSource<'a>),
}

enum Resolved<'a> {
    Model(QuadraticModel),
    Sample(Cow<'a, Dataset>, EvalMethod),
}

fn resolve<'a>(problem: &MinimaxProblem, src: PopulationSource<'a>) -> Result<Resolved<'a>> {
    match src {
        PopulationSource::Analytic(spec) => Ok(Resolved::Model(population_model(problem, spec)?)),
        PopulationSource::MonteCarlo { spec, m, seed } => {
            check_family_dim(problem, spec)?;
            Ok(Resolved::Sample(Cow::Owned(monte_carlo_sample(spec, m, seed)?), EvalMethod::MonteCarlo))
        }
        PopulationSource::Holdout(d) => {
            problem.check_dataset(d)?;
            Ok(Resolved::Sample(Cow::Borrowed(d), EvalMethod::Holdout))
        }
    }
}

fn check_family_dim(problem: &MinimaxProblem, spec: &SyntheticSpec) -> Result<()> {
    if spec.example_dim() != problem.example_dim() {
        return Err(Error::invalid(format!(
            "{} family produces {} features, problem expects {}",
            spec.family,
            spec.example_dim(),
            problem.example_dim()
        )));
    }
    Ok(())
}

/// Population objective of a quadratic or bilinear problem from the moments
/// of its data distribution.
pub fn population_model(problem: &MinimaxProblem, spec: &SyntheticSpec) -> Result<QuadraticModel> {
    spec.validate()?;
    check_family_dim(problem, spec)?;
    match (problem.kind(), spec.family) {
        (ProblemKind::QuadraticScsc, SyntheticFamily::QuadraticSaddle { dim, shift, .. }) => {
            Ok(QuadraticModel::Coupled {
                rho: problem.sc_rho,
                coupling: 0.0,
                lin_w: vec![shift; dim],
                lin_v: vec![shift; dim],
            })
        }
        (ProblemKind::BilinearCc, SyntheticFamily::GaussianLinear { dim, noise }) => {
            let mut second_moment = vec![0.0; dim * dim];
            for i in 0..dim {
                second_moment[i * dim + i] = 1.0;
            }
            Ok(QuadraticModel::Bilinear {
                reg: problem.bilinear_reg().unwrap_or(0.0),
                second_moment,
                cross: SyntheticSpec::gaussian_cross_moment(dim, noise),
            })
        }
        (kind, family) => Err(Error::Unsupported(format!(
            "no analytic population objective for {kind} on {family} data"
        ))),
    }
}

/// Concatenation of `⌈m/10⁴⌉` chunks, chunk `c` drawn with seed
/// `derive_seed(seed, c)`. Chunks are generated in parallel.
pub fn monte_carlo_sample(spec: &SyntheticSpec, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::config("risk.mc_samples", "must be at least 1"));
    }
    spec.validate()?;
    let chunks = m.div_ceil(CHUNK);
    let parts: Vec<Dataset> = pool()?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(m - c * CHUNK);
                gen_synthetic(&spec.with_n(len).with_seed(derive_seed(seed, c as u64)))
            })
            .collect::<Result<_>>()
    })?;
    let examples: Vec<Example> = parts.into_iter().flat_map(|d| d.examples().to_vec()).collect();
    Dataset::new(examples)
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n / n,
            m2: self.m2 + o.m2 + delta * delta * self.n * o.n / n,
        }
    }
}

/// Mean of `f(pt; z)` over `data` with its standard error. Chunks are
/// reduced in a fixed order, so the result does not depend on the pool size.
fn sample_mean(problem: &MinimaxProblem, pt: &Point, data: &Dataset, method: EvalMethod) -> Result<Estimate> {
    let parts: Vec<Moments> = pool()?.install(|| {
        data.examples()
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut m = Moments { n: 0.0, mean: 0.0, m2: 0.0 };
                for z in chunk {
                    let x = problem.value_unchecked(&pt.w, &pt.v, z);
                    m.n += 1.0;
                    let d = x - m.mean;
                    m.mean += d / m.n;
                    m.m2 += d * (x - m.mean);
                }
                m
            })
            .collect()
    });
    let total = parts.into_iter().fold(Moments { n: 0.0, mean: 0.0, m2: 0.0 }, Moments::merge);
    let stderr = if total.n > 1.0 { (total.m2 / (total.n - 1.0) / total.n).sqrt() } else { 0.0 };
    Ok(Estimate { value: total.mean, stderr, method })
}

/// `F(pt)` with its standard error (0 for analytic values).
pub fn population_risk(problem: &MinimaxProblem, pt: &Point, src: PopulationSource) -> Result<Estimate> {
    problem.check_point(pt)?;
    match resolve(problem, src)? {
        Resolved::Model(model) => Ok(Estimate {
            value: model.value(&pt.w, &pt.v),
            stderr: 0.0,
            method: EvalMethod::Analytic,
        }),
        Resolved::Sample(d, method) => sample_mean(problem, pt, &d, method),
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::invalid(format!("{what} has length {got}, problem expects {want}")));
    }
    Ok(())
}

/// `sup_v F_S(w, v)` over the dual ball.
pub fn sup_v(problem: &MinimaxProblem, data: &Dataset, w: &[f64], inner: &InnerSolverConfig) -> Result<InnerResult> {
    check_len("w", w.len(), problem.primal_dim)?;
    problem.check_dataset(data)?;
    inner.validate()?;
    Ok(sup_unchecked(problem, data, w, inner))
}

/// `inf_w F_S(w, v)` over the primal ball.
pub fn inf_w(problem: &MinimaxProblem, data: &Dataset, v: &[f64], inner: &InnerSolverConfig) -> Result<InnerResult> {
    check_len("v", v.len(), problem.dual_dim)?;
    problem.check_dataset(data)?;
    inner.validate()?;
    Ok(inf_unchecked(problem, data, v, inner))
}

fn sup_unchecked(problem: &MinimaxProblem, data: &Dataset, w: &[f64], inner: &InnerSolverConfig) -> InnerResult {
    let rv = problem.radius_v;
    let dv = problem.dual_dim;
    match problem.kind() {
        ProblemKind::QuadraticScsc | ProblemKind::BilinearCc => {
            let model = problem.quadratic_model(data).expect("quadratic family has a model");
            if inner.prefer_closed_form {
                let (v, val) = model.sup_v(w, rv);
                return InnerResult::closed(v, val, EvalMethod::ClosedForm);
            }
            let out = minimize_ball(
                |v, g| {
                    let (_, gv) = model.grad(w, v);
                    g.iter_mut().zip(&gv).for_each(|(a, b)| *a = -b);
                    -model.value(w, v)
                },
                &vec![0.0; dv],
                rv,
                Some(problem.sc_rho),
                inner,
                true,
            );
            InnerResult::from_outcome(out, true, EvalMethod::InnerSolver)
        }
        ProblemKind::AucSolam => {
            if inner.prefer_closed_form {
                let alpha = auc_alpha(problem, data, w);
                let val = problem.mean_value(w, &[alpha], data);
                return InnerResult::closed(vec![alpha], val, EvalMethod::ClosedForm);
            }
            let mut gw = vec![0.0; problem.primal_dim];
            let out = minimize_ball(
                |v, g| {
                    problem.mean_grad_into(w, v, data, &mut gw, g);
                    g[0] = -g[0];
                    -problem.mean_value(w, v, data)
                },
                &[0.0],
                rv,
                Some(2.0),
                inner,
                true,
            );
            InnerResult::from_outcome(out, true, EvalMethod::InnerSolver)
        }
        ProblemKind::RobustMean => {
            let mut gw = vec![0.0; problem.primal_dim];
            let out = multi_start(
                |v, g| {
                    problem.mean_grad_into(w, v, data, &mut gw, g);
                    g.iter_mut().for_each(|a| *a = -*a);
                    -problem.mean_value(w, v, data)
                },
                dv,
                rv,
                data,
                inner,
            );
            InnerResult::from_outcome(out, true, EvalMethod::MultiStart)
        }
    }
}

fn inf_unchecked(problem: &MinimaxProblem, data: &Dataset, v: &[f64], inner: &InnerSolverConfig) -> InnerResult {
    let rw = problem.radius_w;
    let dw = problem.primal_dim;
    match problem.kind() {
        ProblemKind::QuadraticScsc | ProblemKind::BilinearCc => {
            let model = problem.quadratic_model(data).expect("quadratic family has a model");
            if inner.prefer_closed_form {
                let (w, val) = model.inf_w(v, rw);
                return InnerResult::closed(w, val, EvalMethod::ClosedForm);
            }
            let out = minimize_ball(
                |w, g| {
                    let (gw, _) = model.grad(w, v);
                    g.copy_from_slice(&gw);
                    model.value(w, v)
                },
                &vec![0.0; dw],
                rw,
                Some(problem.sc_rho),
                inner,
                true,
            );
            InnerResult::from_outcome(out, false, EvalMethod::InnerSolver)
        }
        ProblemKind::AucSolam => {
            let q = auc_primal_quadratic(problem, data, v[0]);
            let out = minimize_ball(|x, g| q.eval(x, g), &vec![0.0; dw], rw, Some(q.smoothness()), inner, true);
            let value = problem.mean_value(&out.x, v, data);
            InnerResult { value, ..InnerResult::from_outcome(out, false, EvalMethod::InnerSolver) }
        }
        ProblemKind::RobustMean => {
            let mut gv = vec![0.0; problem.dual_dim];
            let out = multi_start(
                |w, g| {
                    problem.mean_grad_into(w, v, data, g, &mut gv);
                    problem.mean_value(w, v, data)
                },
                dw,
                rw,
                data,
                inner,
            );
            InnerResult::from_outcome(out, false, EvalMethod::MultiStart)
        }
    }
}

/// Maximizer of the concave quadratic `α ↦ F_S(w, α) = const + cα − α²`,
/// clamped to the dual ball.
fn auc_alpha(problem: &MinimaxProblem, data: &Dataset, w: &[f64]) -> f64 {
    let p = problem.auc_p().expect("auc problem");
    let q = 1.0 - p;
    let dim = problem.example_dim();
    let c: f64 = data
        .iter()
        .map(|z| {
            let h = crate::vecmath::dot(&w[..dim], &z.features);
            if z.label > 0.0 { -2.0 * h / p } else { 2.0 * h / q }
        })
        .sum::<f64>()
        / data.len() as f64;
    (0.5 * c).clamp(-problem.radius_v, problem.radius_v)
}

/// `F_S(·, α)` over `(w, a, b)` as an explicit quadratic, so the inner solver
/// iterates in `O(d²)` instead of `O(nd)`.
fn auc_primal_quadratic(problem: &MinimaxProblem, data: &Dataset, alpha: f64) -> DenseQuadratic {
    let p = problem.auc_p().expect("auc problem");
    let q = 1.0 - p;
    let dim = problem.example_dim();
    let d = dim + 2;
    let mut h = vec![0.0; d * d];
    let mut g = vec![0.0; d];
    let mut u = vec![0.0; d];
    for z in data {
        let (s, slot, sign) = if z.label > 0.0 { (1.0 / p, dim, -1.0) } else { (1.0 / q, dim + 1, 1.0) };
        u.fill(0.0);
        u[..dim].copy_from_slice(&z.features);
        u[slot] = -1.0;
        for i in 0..d {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                h[i * d + j] += 2.0 * s * u[i] * u[j];
            }
        }
        for (gk, xk) in g.iter_mut().zip(&z.features) {
            *gk += sign * 2.0 * (1.0 + alpha) * s * xk;
        }
    }
    let inv = 1.0 / data.len() as f64;
    h.iter_mut().for_each(|a| *a *= inv);
    g.iter_mut().for_each(|a| *a *= inv);
    DenseQuadratic { h, g, c: -alpha * alpha }
}

/// Candidate scan plus refinement of the best `inner.starts` candidates:
/// golden-section in one dimension, projected gradient otherwise. Used for
/// the nonconvex robust family, so the result never claims convergence.
fn multi_start<F>(mut fg: F, dim: usize, radius: f64, data: &Dataset, inner: &InnerSolverConfig) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let reach = if radius.is_finite() {
        radius
    } else {
        data.iter().map(|z| z.label.abs()).fold(1.0, f64::max) + 1.0
    };
    let mut candidates: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    if dim == 1 {
        let grid = 200;
        candidates.extend((0..=grid).map(|k| vec![reach * (2.0 * k as f64 / grid as f64 - 1.0)]));
        let mut kinks: Vec<f64> = data
            .iter()
            .filter(|z| z.features[0] != 0.0)
            .map(|z| (z.label / z.features[0]).clamp(-reach, reach))
            .collect();
        kinks.sort_by(f64::total_cmp);
        if !kinks.is_empty() {
            let q = 100.min(kinks.len() - 1).max(1);
            candidates.extend((0..=q).map(|k| vec![kinks[k * (kinks.len() - 1) / q]]));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        candidates.extend((0..4 * inner.starts).map(|_| random_in_ball(&mut rng, dim, reach)));
    }
    let mut scratch = vec![0.0; dim];
    if dim == 1 {
        return golden_refine(&mut fg, candidates.into_iter().map(|c| c[0]).collect(), radius, inner);
    }
    let mut scored: Vec<(f64, usize)> =
        candidates.iter().enumerate().map(|(i, c)| (fg(c, &mut scratch), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let cfg = InnerSolverConfig { step: StepRule::Armijo, max_iters: inner.max_iters.min(NONCONVEX_REFINE_ITERS), ..inner.clone() };
    let mut best: Option<Outcome> = None;
    let mut iterations = 0;
    for &(_, i) in scored.iter().take(inner.starts) {
        let out = minimize_ball(&mut fg, &candidates[i], radius, None, &cfg, false);
        iterations += out.iterations;
        if best.as_ref().is_none_or(|b| out.value < b.value) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    Outcome { iterations, converged: false, ..best }
}

/// Scalar search: rank the sorted candidates, then golden-section search
/// between the neighbours of the best `starts` of them.
fn golden_refine<F>(fg: &mut F, mut xs: Vec<f64>, radius: f64, inner: &InnerSolverConfig) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut g = [0.0];
    let mut f = |x: f64| fg(&[x], &mut g);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (xs[order[0]], vals[order[0]]);
    let mut width = 0.0;
    let mut iterations = 0;
    for &k in order.iter().take(inner.starts) {
        let mut lo = if k > 0 { xs[k - 1] } else { xs[k] };
        let mut hi = if k + 1 < xs.len() { xs[k + 1] } else { xs[k] };
        if radius.is_finite() {
            lo = lo.max(-radius);
            hi = hi.min(radius);
        }
        let mut a = hi - inv_phi * (hi - lo);
        let mut b = lo + inv_phi * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        while hi - lo > inner.tolerance * (1.0 + lo.abs().max(hi.abs())) && iterations < inner.max_iters {
            iterations += 1;
            if fa <= fb {
                hi = b;
                (b, fb) = (a, fa);
                a = hi - inv_phi * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                (a, fa) = (b, fb);
                b = lo + inv_phi * (hi - lo);
                fb = f(b);
            }
        }
        for (x, v) in [(a, fa), (b, fb)] {
            if v < best.1 {
                best = (x, v);
                width = hi - lo;
            }
        }
    }
    Outcome { x: vec![best.0], value: best.1, residual: width, iterations, converged: false }
}

/// Weak primal-dual gap `sup_v F_S(pt.w, v) − inf_w F_S(w, pt.v)`.
///
/// Closed forms for the quadratic and bilinear families, the inner solver
/// otherwise. An inner solve that misses its tolerance marks the result
/// unreliable instead of failing.
pub fn empirical_weak_pd_gap(
    problem: &MinimaxProblem,
    data: &Dataset,
    pt: &Point,
    inner: &InnerSolverConfig,
) -> Result<GapEstimate> {
    problem.check_point(pt)?;
    problem.check_dataset(data)?;
    inner.validate()?;
    Ok(GapEstimate::new(
        sup_unchecked(problem, data, &pt.w, inner),
        inf_unchecked(problem, data, &pt.v, inner),
    ))
}

fn sup_resolved(problem: &MinimaxProblem, target: &Resolved, w: &[f64], inner: &InnerSolverConfig) -> InnerResult {
    match target {
        Resolved::Model(model) => {
            let (v, val) = model.sup_v(w, problem.radius_v);
            InnerResult::closed(v, val, EvalMethod::Analytic)
        }
        Resolved::Sample(d, _) => sup_unchecked(problem, d, w, inner),
    }
}

fn inf_resolved(problem: &MinimaxProblem, target: &Resolved, v: &[f64], inner: &InnerSolverConfig) -> InnerResult {
    match target {
        Resolved::Model(model) => {
            let (w, val) = model.inf_w(v, problem.radius_w);
            InnerResult::closed(w, val, EvalMethod::Analytic)
        }
        Resolved::Sample(d, _) => inf_unchecked(problem, d, v, inner),
    }
}

fn resolve_target<'a>(problem: &MinimaxProblem, target: RiskTarget<'a>) -> Result<Resolved<'a>> {
    match target {
        RiskTarget::Empirical(d) => {
            problem.check_dataset(d)?;
            Ok(Resolved::Sample(Cow::Borrowed(d), EvalMethod::Empirical))
        }
        RiskTarget::Population(src) => resolve(problem, src),
    }
}

/// Primal risk `R(w) = sup_v F(w, v)` (or `R_S` for an empirical target).
pub fn primal_risk(
    problem: &MinimaxProblem,
    w: &[f64],
    target: RiskTarget,
    inner: &InnerSolverConfig,
) -> Result<InnerResult> {
    check_len("w", w.len(), problem.primal_dim)?;
    inner.validate()?;
    let t = resolve_target(problem, target)?;
    Ok(sup_resolved(problem, &t, w, inner))
}

/// Dual risk `inf_w F(w, v)` (or its empirical version).
pub fn dual_risk(
    problem: &MinimaxProblem,
    v: &[f64],
    target: RiskTarget,
    inner: &InnerSolverConfig,
) -> Result<InnerResult> {
    check_len("v", v.len(), problem.dual_dim)?;
    inner.validate()?;
    let t = resolve_target(problem, target)?;
    Ok(inf_resolved(problem, &t, v, inner))
}

/// One entry of a [`RiskReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
    pub method: String,
    pub reliable: bool,
}

impl Measured {
    fn exact(value: f64, method: impl Into<String>, reliable: bool) -> Self {
        Measured { value, stderr: 0.0, method: method.into(), reliable }
    }
}

/// Risk measures at one realized point.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub f_emp: Measured,
    pub f_pop: Measured,
    /// `F − F_S`.
    pub gap_plain: Measured,
    pub primal_emp: Measured,
    pub primal_pop: Measured,
    pub weak_pd_emp: Measured,
    /// `R_S(w) − inf_w F_S(w, v)`, assembled from the primal and dual risks.
    pub strong_pd_emp: Measured,
    pub weak_pd_pop: Measured,
    /// `weak_pd_pop − weak_pd_emp`.
    pub weak_pd_gen: Measured,
}

impl RiskReport {
    pub fn entries(&self) -> [(&'static str, &Measured); 9] {
        [
            ("F_emp", &self.f_emp),
            ("F_pop", &self.f_pop),
            ("gap_plain", &self.gap_plain),
            ("primal_emp", &self.primal_emp),
            ("primal_pop", &self.primal_pop),
            ("weak_pd_emp", &self.weak_pd_emp),
            ("strong_pd_emp", &self.strong_pd_emp),
            ("weak_pd_pop", &self.weak_pd_pop),
            ("weak_pd_gen", &self.weak_pd_gen),
        ]
    }

    /// `|weak_pd_pop − (weak_pd_gen + weak_pd_emp)|`.
    pub fn decomposition_residual(&self) -> f64 {
        (self.weak_pd_pop.value - (self.weak_pd_gen.value + self.weak_pd_emp.value)).abs()
    }

    pub fn rows(&self) -> Vec<RiskRow> {
        self.entries()
            .iter()
            .map(|(name, m)| RiskRow {
                metric: name.to_string(),
                value: m.value,
                stderr: m.stderr,
                method: if m.reliable { m.method.clone() } else { format!("{}:unreliable", m.method) },
            })
            .collect()
    }
}

fn tag(a: EvalMethod, b: EvalMethod) -> String {
    if a == b { a.to_string() } else { format!("{a}+{b}") }
}

/// Fills a [`RiskReport`] for `pt` trained on `train`, against the given
/// population objective.
pub fn generalization_gap(
    problem: &MinimaxProblem,
    train: &Dataset,
    population: PopulationSource,
    pt: &Point,
    inner: &InnerSolverConfig,
) -> Result<RiskReport> {
    problem.check_point(pt)?;
    problem.check_dataset(train)?;
    inner.validate()?;
    let pop = resolve(problem, population)?;

    let f_emp = sample_mean(problem, pt, train, EvalMethod::Empirical)?;
    let f_pop = match &pop {
        Resolved::Model(model) => Estimate {
            value: model.value(&pt.w, &pt.v),
            stderr: 0.0,
            method: EvalMethod::Analytic,
        },
        Resolved::Sample(d, method) => sample_mean(problem, pt, d, *method)?,
    };

    let weak = empirical_weak_pd_gap(problem, train, pt, inner)?;
    let primal_emp = primal_risk(problem, &pt.w, RiskTarget::Empirical(train), inner)?;
    let dual_emp = dual_risk(problem, &pt.v, RiskTarget::Empirical(train), inner)?;
    let pop_sup = sup_resolved(problem, &pop, &pt.w, inner);
    let pop_inf = inf_resolved(problem, &pop, &pt.v, inner);
    let pop_method = match &pop {
        Resolved::Model(_) => EvalMethod::Analytic,
        Resolved::Sample(_, m) => *m,
    };
    let weak_pd_pop = pop_sup.value - pop_inf.value;
    let pop_reliable = pop_sup.converged && pop_inf.converged;

    Ok(RiskReport {
        f_emp: Measured::exact(f_emp.value, f_emp.method.as_str(), true),
        f_pop: Measured { value: f_pop.value, stderr: f_pop.stderr, method: f_pop.method.to_string(), reliable: true },
        gap_plain: Measured {
            value: f_pop.value - f_emp.value,
            stderr: f_pop.stderr,
            method: f_pop.method.to_string(),
            reliable: true,
        },
        primal_emp: Measured::exact(primal_emp.value, primal_emp.method.as_str(), primal_emp.converged),
        primal_pop: Measured::exact(pop_sup.value, tag(pop_method, pop_sup.method), pop_sup.converged),
        weak_pd_emp: Measured::exact(weak.gap, tag(weak.sup.method, weak.inf.method), weak.reliable),
        strong_pd_emp: Measured::exact(
            primal_emp.value - dual_emp.value,
            tag(primal_emp.method, dual_emp.method),
            primal_emp.converged && dual_emp.converged,
        ),
        weak_pd_pop: Measured::exact(weak_pd_pop, tag(pop_method, pop_sup.method), pop_reliable),
        weak_pd_gen: Measured::exact(
            weak_pd_pop - weak.gap,
            tag(pop_method, pop_sup.method),
            pop_reliable && weak.reliable,
        ),
    })
}

/// Repeat-mean estimate of the weak primal-dual population risk
/// `sup_v E[F(A_w, v)] − inf_w E[F(w, A_v)]`, the expectation replaced by the
/// mean over the supplied algorithm outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatGapEstimate {
    pub value: f64,
    pub sup: InnerResult,
    pub inf: InnerResult,
    /// Starting points scanned before refinement (empty for closed forms).
    pub candidates: Vec<Point>,
    pub reliable: bool,
}

pub fn weak_pd_risk_over_repeats(
    problem: &MinimaxProblem,
    population: PopulationSource,
    outputs: &[Point],
    inner: &InnerSolverConfig,
) -> Result<RepeatGapEstimate> {
    if outputs.is_empty() {
        return Err(Error::invalid("need at least one algorithm output"));
    }
    for pt in outputs {
        problem.check_point(pt)?;
    }
    inner.validate()?;
    let r = outputs.len() as f64;
    match resolve(problem, population)? {
        Resolved::Model(model) => {
            // The v-dependent part of mean_r F(w_r, v) only involves mean_r w_r.
            let mean_of = |f: fn(&Point) -> &Vec<f64>| -> Vec<f64> {
                let d = f(&outputs[0]).len();
                (0..d).map(|k| outputs.iter().map(|p| f(p)[k]).sum::<f64>() / r).collect()
            };
            let (v_star, _) = model.sup_v(&mean_of(|p| &p.w), problem.radius_v);
            let (w_star, _) = model.inf_w(&mean_of(|p| &p.v), problem.radius_w);
            let sup_val = outputs.iter().map(|p| model.value(&p.w, &v_star)).sum::<f64>() / r;
            let inf_val = outputs.iter().map(|p| model.value(&w_star, &p.v)).sum::<f64>() / r;
            Ok(RepeatGapEstimate {
                value: sup_val - inf_val,
                sup: InnerResult::closed(v_star, sup_val, EvalMethod::Analytic),
                inf: InnerResult::closed(w_star, inf_val, EvalMethod::Analytic),
                candidates: Vec::new(),
                reliable: true,
            })
        }
        Resolved::Sample(d, _) => {
            let convex = problem.kind() != ProblemKind::RobustMean;
            let (dw, dv) = (problem.primal_dim, problem.dual_dim);
            let mut tw = vec![0.0; dw];
            let mut tv = vec![0.0; dv];
            let sup = refine_from_candidates(
                |v, g| {
                    g.fill(0.0);
                    let mut total = 0.0;
                    for p in outputs {
                        problem.mean_grad_into(&p.w, v, &d, &mut tw, &mut tv);
                        g.iter_mut().zip(&tv).for_each(|(a, b)| *a -= b / r);
                        total -= problem.mean_value(&p.w, v, &d);
                    }
                    total / r
                },
                outputs.iter().map(|p| p.v.clone()).chain([vec![0.0; dv]]).collect(),
                problem.radius_v,
                inner,
                convex,
            );
            let mut tw = vec![0.0; dw];
            let mut tv = vec![0.0; dv];
            let inf = refine_from_candidates(
                |w, g| {
                    g.fill(0.0);
                    let mut total = 0.0;
                    for p in outputs {
                        problem.mean_grad_into(w, &p.v, &d, &mut tw, &mut tv);
                        g.iter_mut().zip(&tw).for_each(|(a, b)| *a += b / r);
                        total += problem.mean_value(w, &p.v, &d);
                    }
                    total / r
                },
                outputs.iter().map(|p| p.w.clone()).chain([vec![0.0; dw]]).collect(),
                problem.radius_w,
                inner,
                convex,
            );
            let method = if convex { EvalMethod::InnerSolver } else { EvalMethod::MultiStart };
            let sup = InnerResult::from_outcome(sup, true, method);
            let inf = InnerResult::from_outcome(inf, false, method);
            let mut candidates: Vec<Point> = outputs.to_vec();
            candidates.push(Point::zeros(dw, dv));
            Ok(RepeatGapEstimate {
                value: sup.value - inf.value,
                reliable: convex && sup.converged && inf.converged,
                sup,
                inf,
                candidates,
            })
        }
    }
}

fn refine_from_candidates<F>(
    mut fg: F,
    candidates: Vec<Vec<f64>>,
    radius: f64,
    inner: &InnerSolverConfig,
    convex: bool,
) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut scratch = vec![0.0; candidates[0].len()];
    let mut scored: Vec<(f64, usize)> =
        candidates.iter().enumerate().map(|(i, c)| (fg(c, &mut scratch), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let starts = if convex { 1 } else { inner.starts };
    let max_iters = if convex { inner.max_iters } else { inner.max_iters.min(NONCONVEX_REFINE_ITERS) };
    let cfg = InnerSolverConfig { step: StepRule::Armijo, max_iters, ..inner.clone() };
    let mut best: Option<Outcome> = None;
    for &(_, i) in scored.iter().take(starts) {
        let out = minimize_ball(&mut fg, &candidates[i], radius, None, &cfg, convex);
        if best.as_ref().is_none_or(|b| out.value < b.value) {
            best = Some(out);
        }
    }
    best.expect("at least one candidate")
}

/// Outcome of the PL-condition generalization check.
#[derive(Debug, Clone, PartialEq)]
pub struct PlGapReport {
    /// `|mean over resamples of F(u_S) − F_S(u_S)|`.
    pub lhs: f64,
    pub stderr: f64,
    /// Bound value including the distance term.
    pub rhs: f64,
    /// `2G·mean ‖u_S − u_S*‖`, with `u_S*` the empirical saddle.
    pub distance_term: f64,
    pub lipschitz: f64,
    pub beta: f64,
    pub n: usize,
    pub resamples: usize,
}

impl PlGapReport {
    /// `lhs ≤ rhs + 2·stderr`.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 2.0 * self.stderr
    }
}

/// Checks the PL-condition generalization bound on the quadratic family.
///
/// For each resample `r`, `sample(r)` draws a training set and `algo` maps
/// it to an output `u_S`. `G` is the largest Lipschitz constant over the
/// resampled problems and `β₁ = β₂ = ρ`.
pub fn verify_pl_gap<S, A>(
    spec: &ProblemSpec,
    population: &SyntheticSpec,
    resamples: usize,
    sample: S,
    algo: A,
) -> Result<PlGapReport>
where
    S: Fn(usize) -> Result<Dataset> + Sync,
    A: Fn(&MinimaxProblem, &Dataset, usize) -> Result<Point> + Sync,
{
    if spec.kind != ProblemKind::QuadraticScsc {
        return Err(Error::Unsupported(format!("{} does not satisfy the two-sided PL condition", spec.kind)));
    }
    if resamples < 2 {
        return Err(Error::invalid("need at least two resamples"));
    }
    let per: Vec<(usize, f64, f64, f64)> = pool()?.install(|| {
        (0..resamples)
            .into_par_iter()
            .map(|r| {
                let data = sample(r)?;
                let problem = spec.build(&data)?;
                let u = algo(&problem, &data, r)?;
                problem.check_point(&u)?;
                let saddle = problem.empirical_saddle(&data)?.point;
                let model = population_model(&problem, population)?;
                let gap = model.value(&u.w, &u.v) - problem.mean_value(&u.w, &u.v, &data);
                let g = problem
                    .lipschitz
                    .ok_or_else(|| Error::Unsupported("PL check needs a finite Lipschitz constant".into()))?;
                Ok((data.len(), gap, joint_norm(&u, &saddle)?, g))
            })
            .collect::<Result<_>>()
    })?;
    let n = per[0].0;
    if per.iter().any(|x| x.0 != n) {
        return Err(Error::invalid("every resample must have the same size"));
    }
    let k = resamples as f64;
    let mean_gap = per.iter().map(|x| x.1).sum::<f64>() / k;
    let var = per.iter().map(|x| (x.1 - mean_gap).powi(2)).sum::<f64>() / (k - 1.0);
    let mean_dist = per.iter().map(|x| x.2).sum::<f64>() / k;
    let g = per.iter().map(|x| x.3).fold(0.0, f64::max);
    let rhs = bounds::eval(
        &BoundQuery::new(BoundName::PlGap)
            .with("G", g)
            .with("n", n as f64)
            .with("beta1", spec.rho)
            .with("beta2", spec.rho)
            .with("dist", mean_dist),
    )?;
    Ok(PlGapReport {
        lhs: mean_gap.abs(),
        stderr: (var / k).sqrt(),
        rhs,
        distance_term: 2.0 * g * mean_dist,
        lipschitz: g,
        beta: spec.rho,
        n,
        resamples,
    })
}

#[cfg(test)]
mod tests;
