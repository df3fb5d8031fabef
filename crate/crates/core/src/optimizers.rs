//! Projected SGDA / AGDA with step-size schedules, iterate averaging and a
//! replayable index stream.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::{Dataset, Example, MinimaxProblem};
use crate::vecmath::{all_finite, project_ball_in_place, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sgda,
    Agda,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Sgda => "sgda",
            Algorithm::Agda => "agda",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgda" => Ok(Algorithm::Sgda),
            "agda" => Ok(Algorithm::Agda),
            other => Err(Error::config("algorithm", format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Constant,
    ConstOverSqrtT,
    COverT,
    InvRhoT,
    InvRhoTShifted,
    /// `mult · T^{−power}`, constant in `t`.
    PowT,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::ConstOverSqrtT => "const-over-sqrtT",
            ScheduleKind::COverT => "c-over-t",
            ScheduleKind::InvRhoT => "inv-rho-t",
            ScheduleKind::InvRhoTShifted => "inv-rho-t-shifted",
            ScheduleKind::PowT => "pow-T",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ScheduleKind::Constant),
            "const-over-sqrtT" => Ok(ScheduleKind::ConstOverSqrtT),
            "c-over-t" => Ok(ScheduleKind::COverT),
            "inv-rho-t" => Ok(ScheduleKind::InvRhoT),
            "inv-rho-t-shifted" => Ok(ScheduleKind::InvRhoTShifted),
            "pow-T" => Ok(ScheduleKind::PowT),
            other => Err(Error::config("schedule.kind", format!("unknown schedule '{other}'"))),
        }
    }
}

/// Step-size schedule `t ↦ η_t` for `1 ≤ t ≤ T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant { eta: f64 },
    ConstOverSqrtT { eta: f64 },
    COverT { c: f64 },
    InvRhoT { rho: f64 },
    InvRhoTShifted { rho: f64, t0: f64 },
    PowT { mult: f64, power: f64 },
}

/// Loose schedule parameters as they arrive from a config; see
/// [`Schedule::from_params`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScheduleParams {
    pub eta: Option<f64>,
    pub c: Option<f64>,
    pub rho: Option<f64>,
    pub t0: Option<f64>,
    pub mult: Option<f64>,
    pub power: Option<f64>,
}

fn positive(field: &str, value: Option<f64>) -> Result<f64> {
    match value {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(Error::config(field, format!("must be positive and finite, got {x}"))),
        None => Err(Error::config(field, "required by this schedule")),
    }
}

impl Schedule {
    /// Resolve a schedule kind against its parameters. `fallback_rho` is used
    /// by the `inv-rho-*` kinds when no `rho` is given (typically the
    /// problem's strong-convexity modulus).
    pub fn from_params(kind: ScheduleKind, p: &ScheduleParams, fallback_rho: Option<f64>) -> Result<Self> {
        let schedule = match kind {
            ScheduleKind::Constant => Schedule::Constant {
                eta: positive("schedule.eta", p.eta)?,
            },
            ScheduleKind::ConstOverSqrtT => Schedule::ConstOverSqrtT {
                eta: positive("schedule.eta", p.eta)?,
            },
            ScheduleKind::COverT => Schedule::COverT {
                c: positive("schedule.c", p.c)?,
            },
            ScheduleKind::InvRhoT => Schedule::InvRhoT {
                rho: positive("schedule.rho", p.rho.or(fallback_rho.filter(|r| *r > 0.0)))?,
            },
            ScheduleKind::InvRhoTShifted => {
                let t0 = p.t0.ok_or_else(|| Error::config("schedule.t0", "required by this schedule"))?;
                if !(t0.is_finite() && t0 >= 0.0) {
                    return Err(Error::config("schedule.t0", format!("must be nonnegative, got {t0}")));
                }
                Schedule::InvRhoTShifted {
                    rho: positive("schedule.rho", p.rho.or(fallback_rho.filter(|r| *r > 0.0)))?,
                    t0,
                }
            }
            ScheduleKind::PowT => Schedule::PowT {
                mult: positive("schedule.mult", Some(p.mult.unwrap_or(1.0)))?,
                power: positive("schedule.power", p.power)?,
            },
        };
        Ok(schedule)
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            Schedule::Constant { .. } => ScheduleKind::Constant,
            Schedule::ConstOverSqrtT { .. } => ScheduleKind::ConstOverSqrtT,
            Schedule::COverT { .. } => ScheduleKind::COverT,
            Schedule::InvRhoT { .. } => ScheduleKind::InvRhoT,
            Schedule::InvRhoTShifted { .. } => ScheduleKind::InvRhoTShifted,
            Schedule::PowT { .. } => ScheduleKind::PowT,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        let valid = match *self {
            Schedule::Constant { eta } | Schedule::ConstOverSqrtT { eta } => ok(eta),
            Schedule::COverT { c } => ok(c),
            Schedule::InvRhoT { rho } => ok(rho),
            Schedule::InvRhoTShifted { rho, t0 } => ok(rho) && t0.is_finite() && t0 >= 0.0,
            Schedule::PowT { mult, power } => ok(mult) && ok(power),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::config("schedule", format!("invalid parameters in {self:?}")))
        }
    }

    /// `η_t` for `1 ≤ t ≤ T`.
    pub fn eval(&self, t: usize, horizon: usize) -> Result<f64> {
        if t == 0 || t > horizon {
            return Err(Error::invalid(format!("step {t} outside 1..={horizon}")));
        }
        self.validate()?;
        Ok(self.eval_unchecked(t, horizon))
    }

    fn eval_unchecked(&self, t: usize, horizon: usize) -> f64 {
        let (t, big_t) = (t as f64, horizon as f64);
        match *self {
            Schedule::Constant { eta } => eta,
            Schedule::ConstOverSqrtT { eta } => eta / big_t.sqrt(),
            Schedule::COverT { c } => c / t,
            Schedule::InvRhoT { rho } => 1.0 / (rho * t),
            Schedule::InvRhoTShifted { rho, t0 } => 1.0 / (rho * (t + t0)),
            Schedule::PowT { mult, power } => mult * big_t.powf(-power),
        }
    }

    /// Smallest shift `t₀ = L²/ρ²` for which the shifted schedule keeps the
    /// first step below `ρ/L²`.
    pub fn min_shift(rho: f64, smooth: f64) -> f64 {
        (smooth / rho).powi(2)
    }
}

/// `schedule.eval(t, T)` as a free function.
pub fn schedule_eval(schedule: &Schedule, t: usize, horizon: usize) -> Result<f64> {
    schedule.eval(t, horizon)
}

/// splitmix64 generator; indices are `output mod n` (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    state: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            state: seed,
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of outputs drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        self.counter += 1;
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be nonempty");
        (self.next_u64() % n as u64) as usize
    }
}

impl Iterator for RngStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(self.next_u64())
    }
}

fn check_step(eta: f64) -> Result<()> {
    if eta.is_finite() && eta >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("step size must be finite and nonnegative, got {eta}")))
    }
}

/// One simultaneous projected step, both gradients taken at `pt`.
pub fn sgda_step(problem: &MinimaxProblem, pt: &Point, z: &Example, eta: f64) -> Result<Point> {
    check_step(eta)?;
    let (gw, gv) = problem.grad(pt, z)?;
    let mut next = pt.clone();
    for (x, g) in next.w.iter_mut().zip(&gw) {
        *x -= eta * g;
    }
    for (x, g) in next.v.iter_mut().zip(&gv) {
        *x += eta * g;
    }
    problem.project(&mut next);
    Ok(next)
}

/// One alternating step: `w` moves first, then `v` ascends at the new `w`.
pub fn agda_step(
    problem: &MinimaxProblem,
    pt: &Point,
    z_i: &Example,
    z_j: &Example,
    eta_w: f64,
    eta_v: f64,
) -> Result<Point> {
    check_step(eta_w)?;
    check_step(eta_v)?;
    let (gw, _) = problem.grad(pt, z_i)?;
    let mut w = pt.w.clone();
    for (x, g) in w.iter_mut().zip(&gw) {
        *x -= eta_w * g;
    }
    project_ball_in_place(&mut w, problem.radius_w);
    let half = Point::new(w, pt.v.clone());
    let (_, gv) = problem.grad(&half, z_j)?;
    let mut next = half;
    for (x, g) in next.v.iter_mut().zip(&gv) {
        *x += eta_v * g;
    }
    project_ball_in_place(&mut next.v, problem.radius_v);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub iterations: usize,
    pub seed: u64,
    pub store_history: bool,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, schedule: Schedule, iterations: usize, seed: u64) -> Self {
        RunConfig {
            algorithm,
            schedule,
            iterations,
            seed,
            store_history: false,
        }
    }

    pub fn with_history(mut self) -> Self {
        self.store_history = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("run.T", "iteration count must be at least 1"));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    /// `(w_1, v_1), …, (w_{T+1}, v_{T+1})` when history was requested.
    pub iterates: Option<Vec<Point>>,
    pub final_point: Point,
    /// `Σ_{t≤T} η_t (w_t, v_t) / Σ_{t≤T} η_t`.
    pub averaged: Point,
    pub seed: u64,
    pub iterations: usize,
    pub eta_log: Vec<f64>,
    /// `i_t` for each step (0-based).
    pub index_log: Vec<usize>,
    /// `j_t` for AGDA, empty for SGDA.
    pub dual_index_log: Vec<usize>,
}

/// Incremental driver that owns the current iterate and the running average.
/// Indices are supplied by the caller, so two drivers can share one stream.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    problem: &'a MinimaxProblem,
    data: &'a Dataset,
    algorithm: Algorithm,
    schedule: Schedule,
    horizon: usize,
    t: usize,
    point: Point,
    sum_w: Vec<f64>,
    sum_v: Vec<f64>,
    eta_sum: f64,
    gw: Vec<f64>,
    gv: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        problem: &'a MinimaxProblem,
        data: &'a Dataset,
        algorithm: Algorithm,
        schedule: Schedule,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("run.T", "iteration count must be at least 1"));
        }
        schedule.validate()?;
        problem.check_dataset(data)?;
        let (pd, dd) = (problem.primal_dim, problem.dual_dim);
        Ok(Stepper {
            problem,
            data,
            algorithm,
            schedule,
            horizon,
            t: 0,
            point: Point::zeros(pd, dd),
            sum_w: vec![0.0; pd],
            sum_v: vec![0.0; dd],
            eta_sum: 0.0,
            gw: vec![0.0; pd],
            gv: vec![0.0; dd],
        })
    }

    /// Steps taken so far.
    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn averaged(&self) -> Point {
        if self.eta_sum == 0.0 {
            return self.point.clone();
        }
        Point::new(
            self.sum_w.iter().map(|x| x / self.eta_sum).collect(),
            self.sum_v.iter().map(|x| x / self.eta_sum).collect(),
        )
    }

    /// Advance one step with example indices `i` (and `j` for AGDA; ignored
    /// by SGDA). Returns the step size used.
    pub fn step(&mut self, i: usize, j: usize) -> Result<f64> {
        if self.t >= self.horizon {
            return Err(Error::invalid(format!("horizon {} already reached", self.horizon)));
        }
        let n = self.data.len();
        if i >= n || j >= n {
            return Err(Error::invalid(format!("example index out of range for n = {n}")));
        }
        let eta = self.schedule.eval_unchecked(self.t + 1, self.horizon);
        let p = self.problem;
        for (s, x) in self.sum_w.iter_mut().zip(&self.point.w) {
            *s += eta * x;
        }
        for (s, x) in self.sum_v.iter_mut().zip(&self.point.v) {
            *s += eta * x;
        }
        self.eta_sum += eta;

        let examples = self.data.examples();
        let pt = &mut self.point;
        match self.algorithm {
            Algorithm::Sgda => {
                p.grad_into(&pt.w, &pt.v, &examples[i], &mut self.gw, &mut self.gv);
                for (x, g) in pt.w.iter_mut().zip(&self.gw) {
                    *x -= eta * g;
                }
                for (x, g) in pt.v.iter_mut().zip(&self.gv) {
                    *x += eta * g;
                }
            }
            Algorithm::Agda => {
                p.grad_into(&pt.w, &pt.v, &examples[i], &mut self.gw, &mut self.gv);
                for (x, g) in pt.w.iter_mut().zip(&self.gw) {
                    *x -= eta * g;
                }
                project_ball_in_place(&mut pt.w, p.radius_w);
                p.grad_into(&pt.w, &pt.v, &examples[j], &mut self.gw, &mut self.gv);
                for (x, g) in pt.v.iter_mut().zip(&self.gv) {
                    *x += eta * g;
                }
            }
        }
        p.project(pt);
        self.t += 1;
        if !(all_finite(&pt.w) && all_finite(&pt.v)) {
            return Err(Error::invalid(format!(
                "iterate became non-finite at step {}; reduce the step size or bound the domain",
                self.t
            )));
        }
        Ok(eta)
    }
}

fn drive<F>(problem: &MinimaxProblem, data: &Dataset, cfg: &RunConfig, mut next: F) -> Result<Trajectory>
where
    F: FnMut(usize) -> Result<(usize, usize)>,
{
    cfg.validate()?;
    let mut stepper = Stepper::new(problem, data, cfg.algorithm, cfg.schedule, cfg.iterations)?;
    let mut history = cfg.store_history.then(|| {
        let mut h = Vec::with_capacity(cfg.iterations + 1);
        h.push(stepper.point().clone());
        h
    });
    let agda = cfg.algorithm == Algorithm::Agda;
    let mut eta_log = Vec::with_capacity(cfg.iterations);
    let mut index_log = Vec::with_capacity(cfg.iterations);
    let mut dual_index_log = Vec::with_capacity(if agda { cfg.iterations } else { 0 });
    for t in 0..cfg.iterations {
        let (i, j) = next(t)?;
        eta_log.push(stepper.step(i, j)?);
        index_log.push(i);
        if agda {
            dual_index_log.push(j);
        }
        if let Some(h) = history.as_mut() {
            h.push(stepper.point().clone());
        }
    }
    Ok(Trajectory {
        algorithm: cfg.algorithm,
        iterates: history,
        final_point: stepper.point().clone(),
        averaged: stepper.averaged(),
        seed: cfg.seed,
        iterations: cfg.iterations,
        eta_log,
        index_log,
        dual_index_log,
    })
}

/// Draw the step's indices: `i_t`, then `j_t` for AGDA.
pub(crate) fn draw_indices(rng: &mut RngStream, algorithm: Algorithm, n: usize) -> (usize, usize) {
    let i = rng.next_index(n);
    let j = match algorithm {
        Algorithm::Sgda => i,
        Algorithm::Agda => rng.next_index(n),
    };
    (i, j)
}

/// Run `cfg.iterations` steps from `w₁ = v₁ = 0` with indices from
/// `RngStream::new(cfg.seed)`.
pub fn run(problem: &MinimaxProblem, data: &Dataset, cfg: &RunConfig) -> Result<Trajectory> {
    let mut rng = RngStream::new(cfg.seed);
    let n = data.len();
    drive(problem, data, cfg, |_| Ok(draw_indices(&mut rng, cfg.algorithm, n)))
}

/// Rerun with a recorded index stream instead of the generator.
pub fn replay(
    problem: &MinimaxProblem,
    data: &Dataset,
    cfg: &RunConfig,
    index_log: &[usize],
    dual_index_log: &[usize],
) -> Result<Trajectory> {
    if index_log.len() != cfg.iterations {
        return Err(Error::invalid(format!(
            "index log has {} entries, expected {}",
            index_log.len(),
            cfg.iterations
        )));
    }
    if cfg.algorithm == Algorithm::Agda && dual_index_log.len() != cfg.iterations {
        return Err(Error::invalid(format!(
            "dual index log has {} entries, expected {}",
            dual_index_log.len(),
            cfg.iterations
        )));
    }
    let mut traj = drive(problem, data, cfg, |t| {
        let i = index_log[t];
        let j = if cfg.algorithm == Algorithm::Agda {
            dual_index_log[t]
        } else {
            i
        };
        Ok((i, j))
    })?;
    traj.seed = cfg.seed;
    Ok(traj)
}
