//! Paired runs on neighbouring datasets and the resulting distance traces.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimizers::{draw_indices, Algorithm, RngStream, Schedule, Stepper};
use crate::parallel::{derive_seed, pool};
use crate::problems::{Dataset, Example, MinimaxProblem};
use crate::vecmath::joint_norm;

/// Two datasets that differ at most in `changed_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPair {
    pub s: Dataset,
    pub s_prime: Dataset,
    pub changed_index: usize,
}

impl NeighborPair {
    /// Positions where the two datasets differ.
    pub fn differing_positions(&self) -> Vec<usize> {
        self.s
            .iter()
            .zip(&self.s_prime)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn make_neighbor(data: &Dataset, index: usize, replacement: Example) -> Result<NeighborPair> {
    let s_prime = data.with_replaced(index, replacement)?;
    Ok(NeighborPair {
        s: data.clone(),
        s_prime,
        changed_index: index,
    })
}

/// Neighbour obtained by swapping the last example for `replacement`.
pub fn make_last_neighbor(data: &Dataset, replacement: Example) -> Result<NeighborPair> {
    make_neighbor(data, data.len() - 1, replacement)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedConfig {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub iterations: usize,
    /// Record `Δ_t` every this many steps; `None` means once per pass (`n`).
    pub record_every: Option<usize>,
}

impl PairedConfig {
    fn record_steps(&self, n: usize) -> Result<Vec<usize>> {
        let every = self.record_every.unwrap_or(n);
        if every == 0 {
            return Err(Error::config("run.record_every", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("run.T", "iteration count must be at least 1"));
        }
        let mut steps: Vec<usize> = (1..=self.iterations / every).map(|k| k * every).collect();
        if steps.last() != Some(&self.iterations) {
            steps.push(self.iterations);
        }
        Ok(steps)
    }
}

/// `Δ_t` of one paired run at the recorded steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedTrace {
    pub steps: Vec<usize>,
    pub deltas: Vec<f64>,
    /// Indices consumed by the run on `S`, then by the run on `S′`.
    pub stream_s: Vec<(usize, usize)>,
    pub stream_s_prime: Vec<(usize, usize)>,
}

fn same_structure(a: &MinimaxProblem, b: &MinimaxProblem) -> bool {
    a.kind() == b.kind()
        && a.primal_dim == b.primal_dim
        && a.dual_dim == b.dual_dim
        && a.radius_w.to_bits() == b.radius_w.to_bits()
        && a.radius_v.to_bits() == b.radius_v.to_bits()
        && a.auc_p().map(f64::to_bits) == b.auc_p().map(f64::to_bits)
        && a.bilinear_reg().map(f64::to_bits) == b.bilinear_reg().map(f64::to_bits)
}

/// Run the same algorithm on `S` and `S′` with one shared index stream and
/// record the joint distance of the current iterates.
pub fn paired_run<F>(factory: F, pair: &NeighborPair, cfg: &PairedConfig, seed: u64) -> Result<PairedTrace>
where
    F: Fn(&Dataset) -> Result<MinimaxProblem>,
{
    let p = factory(&pair.s)?;
    let q = factory(&pair.s_prime)?;
    if !same_structure(&p, &q) {
        return Err(Error::Internal(
            "problem factory built different structures for S and S'".into(),
        ));
    }
    let n = pair.s.len();
    if pair.s_prime.len() != n {
        return Err(Error::invalid("neighbouring datasets must have equal size"));
    }
    let steps = cfg.record_steps(n)?;
    let mut a = Stepper::new(&p, &pair.s, cfg.algorithm, cfg.schedule, cfg.iterations)?;
    let mut b = Stepper::new(&q, &pair.s_prime, cfg.algorithm, cfg.schedule, cfg.iterations)?;
    let mut rng = RngStream::new(seed);
    let mut stream_s = Vec::with_capacity(cfg.iterations);
    let mut stream_s_prime = Vec::with_capacity(cfg.iterations);
    let mut deltas = Vec::with_capacity(steps.len());
    let mut next_record = steps.iter().peekable();
    for t in 1..=cfg.iterations {
        let ij = draw_indices(&mut rng, cfg.algorithm, n);
        a.step(ij.0, ij.1)?;
        stream_s.push(ij);
        b.step(ij.0, ij.1)?;
        stream_s_prime.push(ij);
        if next_record.peek() == Some(&&t) {
            next_record.next();
            deltas.push(joint_norm(a.point(), b.point())?);
        }
    }
    Ok(PairedTrace {
        steps,
        deltas,
        stream_s,
        stream_s_prime,
    })
}

/// Mean and spread of `Δ_t` over repeats for one step-size setting.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTrace {
    pub eta_label: f64,
    pub steps: Vec<usize>,
    /// `t / n`.
    pub passes: Vec<f64>,
    pub delta_mean: Vec<f64>,
    /// Sample standard deviation (denominator `r − 1`; zero for one repeat).
    pub delta_std: Vec<f64>,
    pub per_repeat: Option<Vec<Vec<f64>>>,
    pub repeats: usize,
}

impl StabilityTrace {
    pub fn from_repeats(eta_label: f64, steps: Vec<usize>, n: usize, runs: Vec<Vec<f64>>, keep: bool) -> Result<Self> {
        let r = runs.len();
        if r == 0 {
            return Err(Error::config("run.repeats", "must be at least 1"));
        }
        if runs.iter().any(|d| d.len() != steps.len()) {
            return Err(Error::Internal("repeat traces have inconsistent lengths".into()));
        }
        let (mean, std) = mean_std_columns(&runs, steps.len());
        Ok(StabilityTrace {
            eta_label,
            passes: steps.iter().map(|t| *t as f64 / n as f64).collect(),
            steps,
            delta_mean: mean,
            delta_std: std,
            per_repeat: keep.then_some(runs),
            repeats: r,
        })
    }

    /// `std / √repeats` per recorded step.
    pub fn stderr(&self) -> Vec<f64> {
        let r = (self.repeats as f64).sqrt();
        self.delta_std.iter().map(|s| s / r).collect()
    }

    pub fn rows(&self) -> Vec<crate::dataio::TraceRow> {
        (0..self.steps.len())
            .map(|k| crate::dataio::TraceRow {
                pass: self.passes[k],
                eta: self.eta_label,
                mean_delta: self.delta_mean[k],
                std_delta: self.delta_std[k],
            })
            .collect()
    }
}

pub(crate) fn mean_std_columns(runs: &[Vec<f64>], width: usize) -> (Vec<f64>, Vec<f64>) {
    let r = runs.len() as f64;
    let mut mean = vec![0.0; width];
    for run in runs {
        for (m, x) in mean.iter_mut().zip(run) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let std = if runs.len() < 2 {
        vec![0.0; width]
    } else {
        (0..width)
            .map(|k| {
                let ss: f64 = runs.iter().map(|run| (run[k] - mean[k]).powi(2)).sum();
                (ss / (r - 1.0)).sqrt()
            })
            .collect()
    };
    (mean, std)
}

/// One step-size setting of an experiment; `label` is what goes in the
/// `eta` column (e.g. the multiplier of `η/√T`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub label: f64,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub algorithm: Algorithm,
    pub grid: Vec<GridPoint>,
    pub iterations: usize,
    pub record_every: Option<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub keep_per_repeat: bool,
}

impl StabilityConfig {
    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config("grid.etas", "must contain at least one step size"));
        }
        if self.repeats == 0 {
            return Err(Error::config("run.repeats", "must be at least 1"));
        }
        Ok(())
    }

    /// Index-stream seed of repeat `r`; shared by every grid point.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        derive_seed(self.seed, r as u64)
    }
}

/// Run every `(grid point, repeat)` pair concurrently and fold the traces
/// in a fixed order. `pair_for` supplies the neighbouring datasets of each
/// repeat; all grid points of a repeat share its pair and index stream.
pub fn stability_experiment<P, F>(pair_for: P, factory: F, cfg: &StabilityConfig) -> Result<Vec<StabilityTrace>>
where
    P: Fn(usize) -> Result<NeighborPair> + Sync,
    F: Fn(&Dataset) -> Result<MinimaxProblem> + Sync,
{
    cfg.validate()?;
    let pool = pool()?;
    let pairs: Vec<NeighborPair> = pool.install(|| (0..cfg.repeats).into_par_iter().map(&pair_for).collect::<Result<_>>())?;
    let n = pairs[0].s.len();
    if pairs.iter().any(|p| p.s.len() != n) {
        return Err(Error::invalid("every repeat must use datasets of the same size"));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|g| (0..cfg.repeats).map(move |r| (g, r)))
        .collect();
    let traces: Vec<PairedTrace> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, r)| {
                let pc = PairedConfig {
                    algorithm: cfg.algorithm,
                    schedule: cfg.grid[g].schedule,
                    iterations: cfg.iterations,
                    record_every: cfg.record_every,
                };
                paired_run(&factory, &pairs[r], &pc, cfg.repeat_seed(r))
            })
            .collect::<Result<_>>()
    })?;
    let mut traces = traces.into_iter();
    cfg.grid
        .iter()
        .map(|gp| {
            let runs: Vec<PairedTrace> = traces.by_ref().take(cfg.repeats).collect();
            let steps = runs[0].steps.clone();
            let deltas = runs.into_iter().map(|t| t.deltas).collect();
            StabilityTrace::from_repeats(gp.label, steps, n, deltas, cfg.keep_per_repeat)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{gen_synthetic, SyntheticSpec};
    use crate::problems::ProblemSpec;
    use crate::problems::ProblemKind;

    fn quad_pair(seed: u64, n: usize) -> NeighborPair {
        let all = gen_synthetic(&SyntheticSpec::quadratic(2, n + 1, seed)).unwrap();
        let (s, held) = all.split_tail(1).unwrap();
        make_last_neighbor(&s, held[0].clone()).unwrap()
    }

    fn quad_factory(d: &Dataset) -> Result<MinimaxProblem> {
        ProblemSpec::new(ProblemKind::QuadraticScsc).build(d)
    }

    #[test]
    fn neighbor_examples() {
        let d = gen_synthetic(&SyntheticSpec::gaussian(2, 2, 1)).unwrap();
        let same = make_neighbor(&d, 1, d.get(1).unwrap().clone()).unwrap();
        assert_eq!(same.s, same.s_prime);
        assert!(same.differing_positions().is_empty());
        let other = make_neighbor(&d, 1, Example::new(vec![9.0, 9.0], 1.0)).unwrap();
        assert_eq!(other.s.get(0).unwrap(), other.s_prime.get(0).unwrap());
        assert_eq!(other.differing_positions(), vec![1]);
        assert!(matches!(make_neighbor(&d, 2, Example::new(vec![0.0, 0.0], 1.0)), Err(Error::InvalidArgument(_))));
        assert!(make_neighbor(&d, 0, Example::new(vec![0.0], 1.0)).is_err());
    }

    #[test]
    fn identical_datasets_give_zero_distance() {
        let d = gen_synthetic(&SyntheticSpec::quadratic(2, 30, 3)).unwrap();
        let pair = make_neighbor(&d, 29, d.get(29).unwrap().clone()).unwrap();
        for alg in [Algorithm::Sgda, Algorithm::Agda] {
            let cfg = PairedConfig {
                algorithm: alg,
                schedule: Schedule::Constant { eta: 0.2 },
                iterations: 300,
                record_every: None,
            };
            let tr = paired_run(quad_factory, &pair, &cfg, 5).unwrap();
            assert_eq!(tr.steps, (1..=10).map(|k| 30 * k).collect::<Vec<_>>());
            assert!(tr.deltas.iter().all(|d| d.to_bits() == 0));
        }
    }

    #[test]
    fn streams_are_shared() {
        let pair = quad_pair(4, 20);
        let cfg = PairedConfig {
            algorithm: Algorithm::Agda,
            schedule: Schedule::InvRhoT { rho: 1.0 },
            iterations: 95,
            record_every: Some(7),
        };
        let tr = paired_run(quad_factory, &pair, &cfg, 11).unwrap();
        assert_eq!(tr.stream_s, tr.stream_s_prime);
        assert_eq!(tr.steps.last(), Some(&95));
        assert_eq!(tr.steps.len(), 14);
        assert!(tr.deltas.iter().any(|d| *d > 0.0));
    }

    #[test]
    fn mismatched_structure_is_internal_error() {
        let pair = quad_pair(4, 10);
        let cfg = PairedConfig {
            algorithm: Algorithm::Sgda,
            schedule: Schedule::Constant { eta: 0.1 },
            iterations: 10,
            record_every: None,
        };
        let flaky = |d: &Dataset| {
            let mut spec = ProblemSpec::new(ProblemKind::QuadraticScsc);
            if d == &pair.s_prime {
                spec.radius_w = 3.0;
            }
            spec.build(d)
        };
        assert!(matches!(paired_run(flaky, &pair, &cfg, 1), Err(Error::Internal(_))));
    }

    #[test]
    fn single_repeat_has_zero_std() {
        let cfg = StabilityConfig {
            algorithm: Algorithm::Sgda,
            grid: vec![GridPoint {
                label: 0.1,
                schedule: Schedule::Constant { eta: 0.1 },
            }],
            iterations: 100,
            record_every: None,
            repeats: 1,
            seed: 3,
            keep_per_repeat: true,
        };
        let out = stability_experiment(|r| Ok(quad_pair(r as u64, 20)), quad_factory, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].delta_std.iter().all(|s| *s == 0.0));
        assert_eq!(out[0].passes, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(out[0].per_repeat.as_ref().unwrap()[0], out[0].delta_mean);
    }

    #[test]
    fn experiment_is_deterministic_and_ordered() {
        let cfg = StabilityConfig {
            algorithm: Algorithm::Sgda,
            grid: [0.05, 0.2]
                .iter()
                .map(|&e| GridPoint {
                    label: e,
                    schedule: Schedule::Constant { eta: e },
                })
                .collect(),
            iterations: 200,
            record_every: Some(50),
            repeats: 6,
            seed: 9,
            keep_per_repeat: false,
        };
        let a = stability_experiment(|r| Ok(quad_pair(r as u64, 20)), quad_factory, &cfg).unwrap();
        let b = stability_experiment(|r| Ok(quad_pair(r as u64, 20)), quad_factory, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].eta_label, 0.05);
        assert_eq!(a[1].eta_label, 0.2);
        assert_eq!(a[0].rows().len(), 4);
        let bad = StabilityConfig { repeats: 0, ..cfg.clone() };
        assert!(stability_experiment(|r| Ok(quad_pair(r as u64, 20)), quad_factory, &bad).is_err());
        let bad = StabilityConfig { grid: vec![], ..cfg };
        assert!(stability_experiment(|r| Ok(quad_pair(r as u64, 20)), quad_factory, &bad).is_err());
    }

    #[test]
    fn doubling_repeats_keeps_means_consistent() {
        let mk = |repeats| StabilityConfig {
            algorithm: Algorithm::Sgda,
            grid: vec![GridPoint {
                label: 0.1,
                schedule: Schedule::Constant { eta: 0.1 },
            }],
            iterations: 200,
            record_every: None,
            repeats,
            seed: 21,
            keep_per_repeat: false,
        };
        let pair = quad_pair(8, 40);
        let small = stability_experiment(|_| Ok(pair.clone()), quad_factory, &mk(20)).unwrap();
        let big = stability_experiment(|_| Ok(pair.clone()), quad_factory, &mk(40)).unwrap();
        for k in 0..small[0].steps.len() {
            let se = small[0].delta_std[k] / 20f64.sqrt();
            assert!((small[0].delta_mean[k] - big[0].delta_mean[k]).abs() <= 3.0 * se);
        }
    }

    #[test]
    fn mean_std_oracle() {
        let runs = vec![vec![1.0, 2.0], vec![3.0, 2.0], vec![5.0, 2.0]];
        let (m, s) = mean_std_columns(&runs, 2);
        assert_eq!(m, vec![3.0, 2.0]);
        assert_eq!(s, vec![2.0, 0.0]);
    }
}
