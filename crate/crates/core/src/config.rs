//! Flat `key=value` experiment configuration with dotted keys.
//!
//! Files hold one assignment per line; `#` starts a comment. Command-line
//! overrides replace file values. Every key a command reads is recorded with
//! its effective value (defaults included) so outputs can echo the resolved
//! configuration and be replayed from that echo.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bounds::BoundName;
use crate::dataio::{read_libsvm, gen_synthetic, LabelMode, LibsvmOptions, SyntheticFamily, SyntheticSpec};
use crate::error::{Error, Result};
use crate::optimizers::{Algorithm, Schedule, ScheduleKind, ScheduleParams};
use crate::problems::{Dataset, ProblemKind, ProblemSpec};
use crate::risk::{InnerSolverConfig, StepRule, DEFAULT_MC_SAMPLES};

/// Every key any subcommand understands.
pub const KNOWN_KEYS: &[&str] = &[
    "algorithm",
    "bounds.compare",
    "convergence.horizons",
    "data.dim",
    "data.family",
    "data.kappa",
    "data.labels",
    "data.loc",
    "data.n",
    "data.noise",
    "data.normalize",
    "data.nu",
    "data.path",
    "data.scale",
    "data.seed",
    "data.shift",
    "data.source",
    "grid.etas",
    "inner.max_iters",
    "inner.starts",
    "inner.step",
    "inner.tolerance",
    "output.path",
    "problem.kind",
    "problem.p",
    "problem.radius_v",
    "problem.radius_w",
    "problem.reg",
    "problem.rho",
    "risk.holdout",
    "risk.mc_samples",
    "risk.point",
    "risk.population",
    "run.T",
    "run.passes",
    "run.record_every",
    "run.repeats",
    "run.seed",
    "schedule.c",
    "schedule.eta",
    "schedule.kind",
    "schedule.mult",
    "schedule.power",
    "schedule.rho",
    "schedule.t0",
    "stability.neighbor",
];

/// Unresolved assignments from a file and overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty()).then_some((k, v))
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::new();
        for (k, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = split_assignment(body)
                .ok_or_else(|| Error::config(format!("line {}", k + 1), format!("expected key=value, got '{body}'")))?;
            if cfg.entries.contains_key(key) {
                return Err(Error::config(key, "set more than once"));
            }
            cfg.insert(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Configuration recovered from the `# key=value` header of an output
    /// file written by the command line tool.
    pub fn from_echo(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::new();
        for line in text.lines() {
            let Some(body) = line.strip_prefix("# ") else { break };
            if let Some((key, value)) = split_assignment(body) {
                cfg.insert(key, value)?;
            }
        }
        if cfg.entries.is_empty() {
            return Err(Error::config("--replay", "no configuration header found"));
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = split_assignment(assignment)
            .ok_or_else(|| Error::config("--set", format!("expected key=value, got '{assignment}'")))?;
        self.insert(key, value)
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> Result<()> {
        self.insert(key, &value.to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn resolver(&self) -> Resolver<'_> {
        Resolver {
            raw: self,
            used: RefCell::new(BTreeMap::new()),
        }
    }
}

/// Typed reads from a [`RawConfig`] that remember what was read.
pub struct Resolver<'a> {
    raw: &'a RawConfig,
    used: RefCell<BTreeMap<String, String>>,
}

impl Resolver<'_> {
    fn record(&self, key: &str, value: String) {
        self.used.borrow_mut().insert(key.to_string(), value);
    }

    pub fn opt<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(s) = self.raw.get(key) else { return Ok(None) };
        let v = s
            .parse::<T>()
            .map_err(|e| Error::config(key, format!("cannot parse '{s}': {e}")))?;
        self.record(key, s.to_string());
        Ok(Some(v))
    }

    pub fn or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn req<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.opt(key)?.ok_or_else(|| Error::config(key, "required"))
    }

    /// Comma-separated list.
    pub fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(s) = self.raw.get(key) else { return Ok(None) };
        let items = s
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<T>().map_err(|e| Error::config(key, format!("cannot parse '{t}': {e}"))))
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(Error::config(key, "empty list"));
        }
        self.record(key, s.to_string());
        Ok(Some(items))
    }

    /// `key=value` lines for every key read so far, sorted.
    pub fn echo(&self) -> Vec<String> {
        self.used.borrow().iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

fn nonneg_finite(key: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::config(key, format!("must be finite and nonnegative, got {x}")))
    }
}

fn positive_radius(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::config(key, format!("must be positive (inf allowed), got {x}")))
    }
}

pub fn read_problem(r: &Resolver) -> Result<ProblemSpec> {
    let kind: ProblemKind = r.req("problem.kind")?;
    let mut spec = ProblemSpec::new(kind);
    match kind {
        ProblemKind::QuadraticScsc => {
            spec.rho = r.or("problem.rho", 1.0)?;
            if !(spec.rho.is_finite() && spec.rho > 0.0) {
                return Err(Error::config("problem.rho", format!("must be positive, got {}", spec.rho)));
            }
        }
        ProblemKind::BilinearCc => spec.reg = nonneg_finite("problem.reg", r.or("problem.reg", 0.0)?)?,
        ProblemKind::AucSolam => {
            spec.p_override = r.opt("problem.p")?;
            if let Some(p) = spec.p_override {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::config("problem.p", format!("must lie in (0, 1), got {p}")));
                }
            }
        }
        ProblemKind::RobustMean => {}
    }
    spec.radius_w = positive_radius("problem.radius_w", r.or("problem.radius_w", 10.0)?)?;
    spec.radius_v = positive_radius("problem.radius_v", r.or("problem.radius_v", 10.0)?)?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SourceName {
    Synthetic,
    Libsvm,
}

impl FromStr for SourceName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "synthetic" => Ok(SourceName::Synthetic),
            "libsvm" => Ok(SourceName::Libsvm),
            _ => Err("expected synthetic or libsvm".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LabelName(LabelMode);

impl FromStr for LabelName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "binary" => Ok(LabelName(LabelMode::Binary)),
            "real" => Ok(LabelName(LabelMode::Real)),
            _ => Err("expected binary or real".into()),
        }
    }
}

impl Display for LabelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self.0 {
            LabelMode::Binary => "binary",
            LabelMode::Real => "real",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Libsvm { path: PathBuf, options: LibsvmOptions },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    /// Scale features to unit norm after loading.
    pub normalize: bool,
}

impl DataConfig {
    /// The configured dataset. Synthetic data is drawn with `data.seed`.
    pub fn load(&self) -> Result<Dataset> {
        self.load_with_seed(None)
    }

    /// Synthetic data drawn with `seed` instead of `data.seed`; file data is
    /// unaffected.
    pub fn load_with_seed(&self, seed: Option<u64>) -> Result<Dataset> {
        self.load_sized(None, seed)
    }

    /// Like [`load_with_seed`](Self::load_with_seed) with the synthetic
    /// sample size replaced by `n`.
    pub fn load_sized(&self, n: Option<usize>, seed: Option<u64>) -> Result<Dataset> {
        let data = match &self.source {
            DataSource::Synthetic(spec) => {
                let mut spec = *spec;
                if let Some(n) = n {
                    spec.n = n;
                }
                if let Some(s) = seed {
                    spec.seed = s;
                }
                gen_synthetic(&spec)?
            }
            DataSource::Libsvm { path, options } => read_libsvm(path, *options)?,
        };
        Ok(if self.normalize { data.normalized() } else { data })
    }

    pub fn synthetic(&self) -> Option<&SyntheticSpec> {
        match &self.source {
            DataSource::Synthetic(s) => Some(s),
            DataSource::Libsvm { .. } => None,
        }
    }
}

fn default_family(kind: Option<ProblemKind>) -> &'static str {
    match kind {
        Some(ProblemKind::QuadraticScsc) => "quadratic",
        Some(ProblemKind::RobustMean) => "heavy-tailed",
        _ => "gaussian",
    }
}

/// Reads `data.*`. `kind` picks defaults (family, label mode) when given.
pub fn read_data(r: &Resolver, kind: Option<ProblemKind>) -> Result<DataConfig> {
    use crate::dataio::FamilyName;
    let source = r.or("data.source", "synthetic".to_string())?;
    let source = match source.parse::<SourceName>().map_err(|e| Error::config("data.source", e))? {
        SourceName::Synthetic => {
            let family: String = r.or("data.family", default_family(kind).to_string())?;
            let family: FamilyName = family.parse().map_err(|e: Error| Error::config("data.family", e.to_string()))?;
            let n: usize = r.or("data.n", 100)?;
            let seed: u64 = r.or("data.seed", 0)?;
            let family = match family {
                FamilyName::Gaussian => SyntheticFamily::GaussianLinear {
                    dim: r.or("data.dim", 5)?,
                    noise: r.or("data.noise", 0.5)?,
                },
                FamilyName::Quadratic => SyntheticFamily::QuadraticSaddle {
                    dim: r.or("data.dim", 5)?,
                    kappa: r.or("data.kappa", 1.0)?,
                    shift: r.or("data.shift", 0.0)?,
                },
                FamilyName::HeavyTailed => SyntheticFamily::HeavyTailed {
                    nu: r.or("data.nu", 3.0)?,
                    loc: r.or("data.loc", 0.0)?,
                    scale: r.or("data.scale", 1.0)?,
                },
            };
            let spec = SyntheticSpec { family, n, seed };
            spec.validate()?;
            DataSource::Synthetic(spec)
        }
        SourceName::Libsvm => {
            let path: PathBuf = r.req("data.path")?;
            let default_labels = if kind == Some(ProblemKind::RobustMean) { LabelMode::Real } else { LabelMode::Binary };
            let labels: LabelName = r.or("data.labels", LabelName(default_labels))?;
            let dim: Option<usize> = r.opt("data.dim")?;
            DataSource::Libsvm {
                path,
                options: LibsvmOptions { labels: labels.0, dim },
            }
        }
    };
    Ok(DataConfig {
        source,
        normalize: r.or("data.normalize", false)?,
    })
}

/// Iteration budget as configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Iterations(usize),
    /// `T = passes · n`.
    Passes(f64),
}

impl Horizon {
    pub fn iterations(&self, n: usize) -> Result<usize> {
        match *self {
            Horizon::Iterations(t) => Ok(t),
            Horizon::Passes(p) => {
                let t = (p * n as f64).round();
                if t < 1.0 {
                    return Err(Error::config("run.passes", format!("{p} passes over {n} examples is less than one step")));
                }
                Ok(t as usize)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub algorithm: Algorithm,
    pub schedule_kind: ScheduleKind,
    pub schedule_params: ScheduleParams,
    /// `None` when neither `run.T` nor `run.passes` is set.
    pub horizon: Option<Horizon>,
    pub seed: u64,
    pub repeats: usize,
    pub record_every: Option<usize>,
}

impl RunSection {
    pub fn schedule(&self, fallback_rho: Option<f64>) -> Result<Schedule> {
        Schedule::from_params(self.schedule_kind, &self.schedule_params, fallback_rho)
    }

    /// Iteration count for a training set of size `n`.
    pub fn iterations(&self, n: usize) -> Result<usize> {
        self.horizon
            .ok_or_else(|| Error::config("run.T", "set run.T or run.passes"))?
            .iterations(n)
    }
}

pub fn read_run(r: &Resolver) -> Result<RunSection> {
    let algorithm: Algorithm = r.or("algorithm", Algorithm::Sgda)?;
    let schedule_kind: ScheduleKind = r.req("schedule.kind")?;
    let schedule_params = ScheduleParams {
        eta: r.opt("schedule.eta")?,
        c: r.opt("schedule.c")?,
        rho: r.opt("schedule.rho")?,
        t0: r.opt("schedule.t0")?,
        mult: r.opt("schedule.mult")?,
        power: r.opt("schedule.power")?,
    };
    let horizon = match (r.opt::<usize>("run.T")?, r.opt::<f64>("run.passes")?) {
        (Some(_), Some(_)) => return Err(Error::config("run.passes", "set either run.T or run.passes, not both")),
        (Some(0), None) => return Err(Error::config("run.T", "must be at least 1")),
        (Some(t), None) => Some(Horizon::Iterations(t)),
        (None, Some(p)) if p.is_finite() && p > 0.0 => Some(Horizon::Passes(p)),
        (None, Some(p)) => return Err(Error::config("run.passes", format!("must be positive, got {p}"))),
        (None, None) => None,
    };
    let repeats: usize = r.or("run.repeats", 1)?;
    if repeats == 0 {
        return Err(Error::config("run.repeats", "must be at least 1"));
    }
    let record_every: Option<usize> = r.opt("run.record_every")?;
    if record_every == Some(0) {
        return Err(Error::config("run.record_every", "must be at least 1"));
    }
    Ok(RunSection {
        algorithm,
        schedule_kind,
        schedule_params,
        horizon,
        seed: r.or("run.seed", 0)?,
        repeats,
        record_every,
    })
}

/// Schedule parameter a step-size grid varies for each schedule kind.
pub fn grid_parameter(kind: ScheduleKind) -> Result<&'static str> {
    match kind {
        ScheduleKind::Constant | ScheduleKind::ConstOverSqrtT => Ok("eta"),
        ScheduleKind::COverT => Ok("c"),
        ScheduleKind::PowT => Ok("mult"),
        ScheduleKind::InvRhoT | ScheduleKind::InvRhoTShifted => {
            Err(Error::config("grid.etas", format!("a step-size grid is not defined for {kind}")))
        }
    }
}

/// `params` with its grid parameter replaced by `value`.
pub fn with_grid_value(kind: ScheduleKind, params: &ScheduleParams, value: f64) -> Result<ScheduleParams> {
    let mut p = *params;
    match grid_parameter(kind)? {
        "eta" => p.eta = Some(value),
        "c" => p.c = Some(value),
        _ => p.mult = Some(value),
    }
    Ok(p)
}

/// Label written in the `eta` column for a schedule.
pub fn schedule_label(schedule: &Schedule) -> f64 {
    match *schedule {
        Schedule::Constant { eta } | Schedule::ConstOverSqrtT { eta } => eta,
        Schedule::COverT { c } => c,
        Schedule::InvRhoT { rho } | Schedule::InvRhoTShifted { rho, .. } => 1.0 / rho,
        Schedule::PowT { mult, .. } => mult,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborChoice {
    /// Replace one example with a fresh draw (or another example for file data).
    Replace,
    /// `S′ = S`.
    Identical,
}

impl FromStr for NeighborChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "replace" => Ok(NeighborChoice::Replace),
            "identical" => Ok(NeighborChoice::Identical),
            _ => Err("expected replace or identical".into()),
        }
    }
}

impl Display for NeighborChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NeighborChoice::Replace => "replace",
            NeighborChoice::Identical => "identical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationChoice {
    /// Analytic when the moments are known, Monte Carlo for other synthetic
    /// data, holdout for file data.
    Auto,
    Analytic,
    MonteCarlo,
    Holdout,
}

impl FromStr for PopulationChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(PopulationChoice::Auto),
            "analytic" => Ok(PopulationChoice::Analytic),
            "monte-carlo" => Ok(PopulationChoice::MonteCarlo),
            "holdout" => Ok(PopulationChoice::Holdout),
            _ => Err("expected auto, analytic, monte-carlo or holdout".into()),
        }
    }
}

impl Display for PopulationChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PopulationChoice::Auto => "auto",
            PopulationChoice::Analytic => "analytic",
            PopulationChoice::MonteCarlo => "monte-carlo",
            PopulationChoice::Holdout => "holdout",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointChoice {
    Averaged,
    Final,
}

impl FromStr for PointChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "averaged" => Ok(PointChoice::Averaged),
            "final" => Ok(PointChoice::Final),
            _ => Err("expected averaged or final".into()),
        }
    }
}

impl Display for PointChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointChoice::Averaged => "averaged",
            PointChoice::Final => "final",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskSection {
    pub population: PopulationChoice,
    pub mc_samples: usize,
    /// Examples held out from file data as the population sample.
    pub holdout: Option<usize>,
    pub point: PointChoice,
}

pub fn read_risk(r: &Resolver) -> Result<RiskSection> {
    let mc_samples: usize = r.or("risk.mc_samples", DEFAULT_MC_SAMPLES)?;
    if mc_samples == 0 {
        return Err(Error::config("risk.mc_samples", "must be at least 1"));
    }
    Ok(RiskSection {
        population: r.or("risk.population", PopulationChoice::Auto)?,
        mc_samples,
        holdout: r.opt("risk.holdout")?,
        point: r.or("risk.point", PointChoice::Averaged)?,
    })
}

struct StepName(StepRule);

impl FromStr for StepName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(StepName(StepRule::InverseSmoothness)),
            "armijo" => Ok(StepName(StepRule::Armijo)),
            other => other
                .parse::<f64>()
                .map(|x| StepName(StepRule::Fixed(x)))
                .map_err(|_| "expected auto, armijo or a fixed step".into()),
        }
    }
}

impl Display for StepName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            StepRule::InverseSmoothness => f.write_str("auto"),
            StepRule::Armijo => f.write_str("armijo"),
            StepRule::Fixed(x) => write!(f, "{x}"),
        }
    }
}

pub fn read_inner(r: &Resolver) -> Result<InnerSolverConfig> {
    let d = InnerSolverConfig::default();
    let cfg = InnerSolverConfig {
        max_iters: r.or("inner.max_iters", d.max_iters)?,
        tolerance: r.or("inner.tolerance", d.tolerance)?,
        step: r.or("inner.step", StepName(d.step))?.0,
        starts: r.or("inner.starts", d.starts)?,
        prefer_closed_form: true,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_bounds(r: &Resolver) -> Result<Vec<BoundName>> {
    Ok(r.list::<BoundName>("bounds.compare")?.unwrap_or_default())
}
