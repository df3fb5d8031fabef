//! Command-line experiment driver.
//!
//! Every subcommand resolves its configuration before doing any work, echoes
//! the resolved keys as `# key=value` lines at the top of its output, and is
//! deterministic given that configuration.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{self, BoundName, BoundQuery};
use crate::config::{
    grid_parameter, read_bounds, read_data, read_inner, read_problem, read_risk, read_run, schedule_label,
    with_grid_value, DataConfig, DataSource, NeighborChoice, PointChoice, PopulationChoice, RawConfig, RunSection,
};
use crate::dataio::{fmt_f64, write_libsvm, write_risk_csv_to, write_trace_csv_to, RiskRow};
use crate::error::{Error, Result};
use crate::optimizers::{run, RunConfig, Schedule};
use crate::parallel::{derive_seed, pool};
use crate::problems::{Dataset, MinimaxProblem, ProblemKind};
use crate::risk::{self, empirical_weak_pd_gap, generalization_gap, PopulationSource};
use crate::stability::{make_last_neighbor, make_neighbor, stability_experiment, GridPoint, NeighborPair, StabilityConfig};

const MC_SALT: u64 = 0x6d63_5f73_616c_7400;
const HOLDOUT_SALT: u64 = 0x686f_6c64_6f75_7400;
const NEIGHBOR_SALT: u64 = 0x6e65_6967_6862_6f72;

#[derive(Debug, Parser)]
#[command(name = "minimax-stab", version, about = "Stability and risk experiments for stochastic minimax learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct ConfigArgs {
    /// Configuration file, one `key=value` per line.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one key; repeatable and applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Take the configuration from the header of an earlier output file.
    #[arg(long, value_name = "FILE", conflicts_with = "config")]
    replay: Option<PathBuf>,
    /// Write the output here instead of standard output.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Paired runs on neighbouring datasets; writes mean/std of Δ_t per pass.
    RunStability(ConfigArgs),
    /// Trains, then reports empirical and population risks at the output.
    RunRisk(ConfigArgs),
    /// Weak primal-dual gap of the averaged and last iterates per horizon.
    RunConvergence(ConfigArgs),
    /// Evaluates one closed-form bound and prints `name,params,value`, e.g. `compute-bound argstab_scsc G=1 rho=1 t=100 n=100`.
    ComputeBound {
        name: String,
        #[arg(value_name = "SYMBOL=VALUE")]
        params: Vec<String>,
    },
    /// Draws a synthetic dataset and writes it in LIBSVM format.
    GenData(ConfigArgs),
    /// Parses a LIBSVM file, prints a summary and optionally rewrites it.
    ParseData {
        /// Shorthand for `--set data.source=libsvm --set data.path=PATH`.
        path: Option<PathBuf>,
        #[command(flatten)]
        args: ConfigArgs,
    },
}

/// Runs the tool on `args` (program name first). Returns the exit code:
/// 0 on success, 2 for configuration errors, 1 for everything else.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::RunStability(a) => run_stability(&load_raw(&a)?, out, err),
        Command::RunRisk(a) => run_risk(&load_raw(&a)?, out, err),
        Command::RunConvergence(a) => run_convergence(&load_raw(&a)?, out, err),
        Command::ComputeBound { name, params } => {
            let name: BoundName = name.parse()?;
            let q = BoundQuery::parse_assignments(name, params.iter().map(String::as_str))?;
            let v = bounds::eval(&q)?;
            let mut params: Vec<String> = q.params.iter().map(|(k, x)| format!("{k}={x}")).collect();
            if let Some(etas) = &q.etas {
                params.push(format!("etas[{}]", etas.len()));
            }
            if let Some(rhos) = &q.rhos {
                params.push(format!("rhos[{}]", rhos.len()));
            }
            say(out, format!("{name},{},{}", params.join(";"), fmt_f64(v)))
        }
        Command::GenData(a) => gen_data(&load_raw(&a)?, out, err),
        Command::ParseData { path, args } => {
            let mut raw = load_raw(&args)?;
            if let Some(p) = path {
                raw.set("data.source", "libsvm")?;
                raw.set("data.path", p.display())?;
            }
            parse_data(&raw, out, err)
        }
    }
}

fn load_raw(a: &ConfigArgs) -> Result<RawConfig> {
    let mut raw = match (&a.replay, &a.config) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::config("--replay", format!("cannot read {}: {e}", p.display())))?;
            RawConfig::from_echo(&text)?
        }
        (None, Some(p)) => RawConfig::from_file(p)?,
        (None, None) => RawConfig::new(),
    };
    for s in &a.set {
        raw.set_override(s)?;
    }
    if let Some(p) = &a.output {
        raw.set("output.path", p.display())?;
    }
    Ok(raw)
}

fn output_path(raw: &RawConfig) -> Option<PathBuf> {
    raw.get("output.path").map(PathBuf::from)
}

fn header(command: &str, echo: Vec<String>) -> Vec<String> {
    let mut lines = vec![format!("minimax-stab {} {command}", env!("CARGO_PKG_VERSION"))];
    lines.extend(echo);
    lines
}

/// Writes the artifact to `path` (or `out`), then returns the stream that
/// summaries should go to: `out` when the artifact went to a file.
fn emit<'a, F>(
    path: Option<&Path>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    write: F,
) -> Result<&'a mut dyn Write>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))?;
            Ok(out)
        }
        None => {
            write(out).and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))?;
            Ok(err)
        }
    }
}

fn say(w: &mut dyn Write, line: String) -> Result<()> {
    writeln!(w, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Training set of repeat `rep`: a fresh synthetic draw, or the file data.
fn repeat_data(data: &DataConfig, base: &Dataset, rep: usize) -> Result<Dataset> {
    match &data.source {
        DataSource::Synthetic(spec) => data.load_with_seed(Some(derive_seed(spec.seed, rep as u64))),
        DataSource::Libsvm { .. } => Ok(base.clone()),
    }
}

/// Largest Lipschitz constant over the problems built from `datasets`.
fn lipschitz_over(problems: &[MinimaxProblem]) -> Result<f64> {
    problems.iter().try_fold(0.0f64, |g, p| {
        p.lipschitz
            .map(|l| g.max(l))
            .ok_or_else(|| Error::Unsupported("problem has no finite Lipschitz constant".into()))
    })
}

/// Bound parameters implied by a problem, a schedule and a horizon.
fn bound_query(name: BoundName, problem: &MinimaxProblem, g: f64, schedule: &Schedule, big_t: usize, n: usize) -> Result<BoundQuery> {
    let mut q = BoundQuery::new(name)
        .with("G", g)
        .with("n", n as f64)
        .with("t", big_t as f64)
        .with("T", big_t as f64)
        .with("B_W", problem.radius_w)
        .with("B_V", problem.radius_v);
    if let Some(l) = problem.smooth {
        q = q.with("L", l);
    }
    let modulus = if problem.sc_rho > 0.0 { problem.sc_rho } else { problem.wc_rho };
    if modulus > 0.0 {
        q = q.with("rho", modulus);
    }
    match *schedule {
        Schedule::Constant { eta } => q = q.with("eta", eta),
        Schedule::ConstOverSqrtT { .. } | Schedule::PowT { .. } => q = q.with("eta", schedule.eval(1, big_t)?),
        Schedule::COverT { c } => q = q.with("c", c),
        Schedule::InvRhoT { .. } => {}
        Schedule::InvRhoTShifted { t0, .. } => q = q.with("t0", t0),
    }
    if !matches!(schedule, Schedule::Constant { .. }) {
        let etas = (1..=big_t).map(|t| schedule.eval(t, big_t)).collect::<Result<Vec<_>>>()?;
        q = q.with_etas(etas);
    }
    Ok(q)
}

fn eval_bound(q: &BoundQuery) -> Result<f64> {
    bounds::eval(q).map_err(|e| match e {
        Error::Config { field, message } => {
            Error::config("bounds.compare", format!("{} needs `{field}`: {message}", q.name))
        }
        other => other,
    })
}

fn neighbor_pair(
    data: &DataConfig,
    base: &Dataset,
    choice: NeighborChoice,
    run_seed: u64,
    rep: usize,
) -> Result<NeighborPair> {
    let n = base.len();
    match (&data.source, choice) {
        (DataSource::Synthetic(spec), NeighborChoice::Replace) => {
            let all = data.load_sized(Some(n + 1), Some(derive_seed(spec.seed, rep as u64)))?;
            let (s, held) = all.split_tail(1)?;
            make_last_neighbor(&s, held[0].clone())
        }
        (DataSource::Synthetic(_), NeighborChoice::Identical) => {
            let s = repeat_data(data, base, rep)?;
            let first = s.examples()[0].clone();
            make_neighbor(&s, 0, first)
        }
        (DataSource::Libsvm { .. }, NeighborChoice::Replace) => {
            if n < 2 {
                return Err(Error::invalid("replacing an example needs at least two examples"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed ^ NEIGHBOR_SALT, rep as u64));
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            make_neighbor(base, i, base.examples()[j].clone())
        }
        (DataSource::Libsvm { .. }, NeighborChoice::Identical) => make_neighbor(base, 0, base.examples()[0].clone()),
    }
}

fn schedule_grid(run: &RunSection, etas: &Option<Vec<f64>>, fallback_rho: f64) -> Result<Vec<GridPoint>> {
    match etas {
        Some(values) => {
            grid_parameter(run.schedule_kind)?;
            values
                .iter()
                .map(|&v| {
                    let p = with_grid_value(run.schedule_kind, &run.schedule_params, v)?;
                    let schedule = Schedule::from_params(run.schedule_kind, &p, Some(fallback_rho))
                        .map_err(|e| Error::config("grid.etas", e.to_string()))?;
                    Ok(GridPoint { label: v, schedule })
                })
                .collect()
        }
        None => {
            let schedule = run.schedule(Some(fallback_rho))?;
            Ok(vec![GridPoint { label: schedule_label(&schedule), schedule }])
        }
    }
}

fn run_stability(raw: &RawConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let r = raw.resolver();
    let mut pspec = read_problem(&r)?;
    let data = read_data(&r, Some(pspec.kind))?;
    let run = read_run(&r)?;
    let neighbor: NeighborChoice = r.or("stability.neighbor", NeighborChoice::Replace)?;
    let etas = r.list::<f64>("grid.etas")?;
    let bound_names = read_bounds(&r)?;
    let echo = header("run-stability", r.echo());

    let base = data.load()?;
    if pspec.kind == ProblemKind::AucSolam && pspec.p_override.is_none() {
        pspec.p_override = Some(base.positive_fraction());
    }
    let n = base.len();
    let big_t = run.iterations(n)?;
    let pairs: Vec<NeighborPair> =
        (0..run.repeats).map(|rep| neighbor_pair(&data, &base, neighbor, run.seed, rep)).collect::<Result<_>>()?;
    let problems: Vec<MinimaxProblem> = pairs.iter().map(|p| pspec.build(&p.s)).collect::<Result<_>>()?;
    let grid = schedule_grid(&run, &etas, problems[0].sc_rho)?;

    let mut bound_values = Vec::new();
    if !bound_names.is_empty() {
        let g = lipschitz_over(&problems)?;
        for gp in &grid {
            let vals = bound_names
                .iter()
                .map(|&b| eval_bound(&bound_query(b, &problems[0], g, &gp.schedule, big_t, n)?))
                .collect::<Result<Vec<_>>>()?;
            bound_values.push(vals);
        }
    }

    let cfg = StabilityConfig {
        algorithm: run.algorithm,
        grid,
        iterations: big_t,
        record_every: run.record_every,
        repeats: run.repeats,
        seed: run.seed,
        keep_per_repeat: false,
    };
    let traces = stability_experiment(|rep| Ok(pairs[rep].clone()), |d| pspec.build(d), &cfg)?;
    let rows: Vec<_> = traces.iter().flat_map(|t| t.rows()).collect();
    let log = emit(output_path(raw).as_deref(), out, err, |w| write_trace_csv_to(&rows, w, &echo))?;
    for (k, t) in traces.iter().enumerate() {
        let last = t.steps.len() - 1;
        let mut line = format!(
            "eta={} T={} passes={} mean_delta={} std_delta={} repeats={}",
            t.eta_label, big_t, t.passes[last], fmt_f64(t.delta_mean[last]), fmt_f64(t.delta_std[last]), t.repeats
        );
        for (b, v) in bound_names.iter().zip(bound_values.get(k).into_iter().flatten()) {
            line.push_str(&format!(" {b}={}", fmt_f64(*v)));
        }
        say(log, line)?;
    }
    Ok(())
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn run_convergence(raw: &RawConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let r = raw.resolver();
    let pspec = read_problem(&r)?;
    let data = read_data(&r, Some(pspec.kind))?;
    let run_cfg = read_run(&r)?;
    let horizons = r.list::<usize>("convergence.horizons")?;
    let inner = read_inner(&r)?;
    let bound_names = read_bounds(&r)?;
    let echo = header("run-convergence", r.echo());

    let base = data.load()?;
    let n = base.len();
    let horizons = match horizons {
        Some(h) => h,
        None => vec![run_cfg.iterations(n)?],
    };
    if horizons.contains(&0) {
        return Err(Error::config("convergence.horizons", "horizons must be at least 1"));
    }
    let sets: Vec<Dataset> = (0..run_cfg.repeats).map(|rep| repeat_data(&data, &base, rep)).collect::<Result<_>>()?;
    let problems: Vec<MinimaxProblem> = sets.iter().map(|d| pspec.build(d)).collect::<Result<_>>()?;
    let schedule = run_cfg.schedule(Some(problems[0].sc_rho))?;
    let g = if bound_names.is_empty() { 0.0 } else { lipschitz_over(&problems)? };
    let mut bound_rows = Vec::new();
    for &big_t in &horizons {
        for &b in &bound_names {
            let v = eval_bound(&bound_query(b, &problems[0], g, &schedule, big_t, n)?)?;
            bound_rows.push((big_t, b, v));
        }
    }

    let jobs: Vec<(usize, usize)> = horizons.iter().flat_map(|&t| (0..run_cfg.repeats).map(move |rep| (t, rep))).collect();
    let gaps: Vec<(risk::GapEstimate, risk::GapEstimate)> = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(big_t, rep)| {
                let cfg = RunConfig::new(run_cfg.algorithm, schedule, big_t, derive_seed(run_cfg.seed, rep as u64));
                let traj = run(&problems[rep], &sets[rep], &cfg)?;
                Ok((
                    empirical_weak_pd_gap(&problems[rep], &sets[rep], &traj.averaged, &inner)?,
                    empirical_weak_pd_gap(&problems[rep], &sets[rep], &traj.final_point, &inner)?,
                ))
            })
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (k, &big_t) in horizons.iter().enumerate() {
        let chunk = &gaps[k * run_cfg.repeats..(k + 1) * run_cfg.repeats];
        let mut means = Vec::new();
        for (label, pick) in [("avg", 0usize), ("last", 1)] {
            let ests: Vec<&risk::GapEstimate> = chunk.iter().map(|p| if pick == 0 { &p.0 } else { &p.1 }).collect();
            let (mean, se) = mean_and_stderr(&ests.iter().map(|e| e.gap).collect::<Vec<_>>());
            let reliable = ests.iter().all(|e| e.reliable);
            let mut method = format!("{}+{}", ests[0].sup.method, ests[0].inf.method);
            if !reliable {
                method.push_str(":unreliable");
            }
            rows.push(RiskRow { metric: format!("weak_pd_emp_{label}@T={big_t}"), value: mean, stderr: se, method });
            means.push(mean);
        }
        let mut line = format!("T={big_t} weak_pd_emp_avg={} weak_pd_emp_last={}", fmt_f64(means[0]), fmt_f64(means[1]));
        for (_, b, v) in bound_rows.iter().filter(|x| x.0 == big_t) {
            rows.push(RiskRow { metric: format!("bound:{b}@T={big_t}"), value: *v, stderr: 0.0, method: "bound".into() });
            line.push_str(&format!(" {b}={}", fmt_f64(*v)));
        }
        summaries.push(line);
    }
    let log = emit(output_path(raw).as_deref(), out, err, |w| write_risk_csv_to(&rows, w, &echo))?;
    for line in summaries {
        say(log, line)?;
    }
    Ok(())
}

fn run_risk(raw: &RawConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let r = raw.resolver();
    let pspec = read_problem(&r)?;
    let data = read_data(&r, Some(pspec.kind))?;
    let run_cfg = read_run(&r)?;
    let risk_cfg = read_risk(&r)?;
    let inner = read_inner(&r)?;
    let echo = header("run-risk", r.echo());

    let base = data.load()?;
    let synthetic = data.synthetic().copied();
    if synthetic.is_none() && matches!(risk_cfg.population, PopulationChoice::Analytic | PopulationChoice::MonteCarlo) {
        return Err(Error::config("risk.population", format!("{} needs synthetic data", risk_cfg.population)));
    }
    let (file_train, file_held) = match synthetic {
        Some(_) => (None, None),
        None => {
            let k = risk_cfg.holdout.unwrap_or(base.len() / 5);
            if k == 0 || k >= base.len() {
                return Err(Error::config("risk.holdout", format!("must lie in 1..{}, got {k}", base.len())));
            }
            let (train, held) = base.split_tail(k)?;
            (Some(train), Some(Dataset::new(held)?))
        }
    };
    let n = file_train.as_ref().map_or(base.len(), Dataset::len);
    let big_t = run_cfg.iterations(n)?;

    let reports: Vec<risk::RiskReport> = pool()?.install(|| {
        (0..run_cfg.repeats)
            .into_par_iter()
            .map(|rep| {
                let train = match &file_train {
                    Some(t) => t.clone(),
                    None => repeat_data(&data, &base, rep)?,
                };
                let problem = pspec.build(&train)?;
                let schedule = run_cfg.schedule(Some(problem.sc_rho))?;
                let cfg = RunConfig::new(run_cfg.algorithm, schedule, big_t, derive_seed(run_cfg.seed, rep as u64));
                let traj = run(&problem, &train, &cfg)?;
                let pt = match risk_cfg.point {
                    PointChoice::Averaged => traj.averaged,
                    PointChoice::Final => traj.final_point,
                };
                let fresh;
                let source = match (synthetic.as_ref(), risk_cfg.population) {
                    (None, _) => PopulationSource::Holdout(file_held.as_ref().expect("file holdout")),
                    (Some(spec), PopulationChoice::Analytic) => PopulationSource::Analytic(spec),
                    (Some(spec), PopulationChoice::Auto) if risk::population_model(&problem, spec).is_ok() => {
                        PopulationSource::Analytic(spec)
                    }
                    (Some(spec), PopulationChoice::Auto | PopulationChoice::MonteCarlo) => PopulationSource::MonteCarlo {
                        spec,
                        m: risk_cfg.mc_samples,
                        seed: derive_seed(run_cfg.seed ^ MC_SALT, rep as u64),
                    },
                    (Some(spec), PopulationChoice::Holdout) => {
                        let m = risk_cfg.holdout.unwrap_or(n);
                        fresh = data.load_sized(Some(m), Some(derive_seed(spec.seed ^ HOLDOUT_SALT, rep as u64)))?;
                        PopulationSource::Holdout(&fresh)
                    }
                };
                generalization_gap(&problem, &train, source, &pt, &inner)
            })
            .collect::<Result<_>>()
    })?;

    let per_rep: Vec<Vec<RiskRow>> = reports.iter().map(|rep| rep.rows()).collect();
    let rows: Vec<RiskRow> = (0..per_rep[0].len())
        .map(|k| {
            let values: Vec<f64> = per_rep.iter().map(|rows| rows[k].value).collect();
            let (mean, se) = mean_and_stderr(&values);
            let stderr = if values.len() > 1 { se } else { per_rep[0][k].stderr };
            let method = per_rep
                .iter()
                .map(|rows| rows[k].method.clone())
                .find(|m| m.ends_with(":unreliable"))
                .unwrap_or_else(|| per_rep[0][k].method.clone());
            RiskRow { metric: per_rep[0][k].metric.clone(), value: mean, stderr, method }
        })
        .collect();
    let log = emit(output_path(raw).as_deref(), out, err, |w| write_risk_csv_to(&rows, w, &echo))?;
    let pick = |m: &str| rows.iter().find(|r| r.metric == m).map_or(f64::NAN, |r| r.value);
    say(
        log,
        format!(
            "repeats={} T={big_t} gap_plain={} weak_pd_emp={} weak_pd_pop={} primal_pop={}",
            run_cfg.repeats,
            fmt_f64(pick("gap_plain")),
            fmt_f64(pick("weak_pd_emp")),
            fmt_f64(pick("weak_pd_pop")),
            fmt_f64(pick("primal_pop"))
        ),
    )
}

fn data_summary(d: &Dataset) -> String {
    format!(
        "n={} dim={} positive_fraction={} max_feature_norm={}",
        d.len(),
        d.dim(),
        fmt_f64(d.positive_fraction()),
        fmt_f64(d.max_feature_norm())
    )
}

fn gen_data(raw: &RawConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let r = raw.resolver();
    let kind = r.opt("problem.kind")?;
    let data = read_data(&r, kind)?;
    if data.synthetic().is_none() {
        return Err(Error::config("data.source", "gen-data needs synthetic data"));
    }
    let echo = header("gen-data", r.echo());
    let d = data.load()?;
    let log = emit(output_path(raw).as_deref(), out, err, |w| write_libsvm(&d, w, &echo))?;
    say(log, data_summary(&d))
}

fn parse_data(raw: &RawConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let r = raw.resolver();
    let kind = r.opt("problem.kind")?;
    let data = read_data(&r, kind)?;
    if data.synthetic().is_some() {
        return Err(Error::config("data.source", "parse-data needs data.source=libsvm"));
    }
    let echo = header("parse-data", r.echo());
    let d = data.load()?;
    match output_path(raw) {
        Some(p) => {
            let log = emit(Some(&p), out, err, |w| write_libsvm(&d, w, &echo))?;
            say(log, data_summary(&d))
        }
        None => say(out, data_summary(&d)),
    }
}
