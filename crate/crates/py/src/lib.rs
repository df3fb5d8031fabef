//! Python bindings: datasets, problems, SGDA/AGDA runs, paired stability
//! runs, gap estimates and bound evaluation.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use minimax_stab::bounds::{self, BoundName, BoundQuery};
use minimax_stab::dataio::{self, LabelMode, LibsvmOptions, SyntheticFamily, SyntheticSpec};
use minimax_stab::optimizers::{self, Algorithm, RunConfig, Schedule, ScheduleKind, ScheduleParams};
use minimax_stab::problems::{self, Example, ProblemKind, ProblemSpec};
use minimax_stab::risk::{self, InnerSolverConfig};
use minimax_stab::stability::{self, PairedConfig};
use minimax_stab::{Error, Point};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for minimax_stab::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A labelled dataset with dense features.
#[pyclass(name = "Dataset", module = "pyminimax", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: problems::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> PyResult<Self> {
        if features.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let examples = features.into_iter().zip(labels).map(|(x, y)| Example::new(x, y)).collect();
        Ok(PyDataset { inner: problems::Dataset::new(examples).py()? })
    }

    /// Reads a LIBSVM file. `labels` is "binary" (map to ±1) or "real".
    #[staticmethod]
    #[pyo3(signature = (path, labels = "binary", dim = None))]
    fn from_libsvm(path: &str, labels: &str, dim: Option<usize>) -> PyResult<Self> {
        let labels = match labels {
            "binary" => LabelMode::Binary,
            "real" => LabelMode::Real,
            other => return Err(PyValueError::new_err(format!("labels must be 'binary' or 'real', got '{other}'"))),
        };
        let inner = dataio::read_libsvm(path, LibsvmOptions { labels, dim }).py()?;
        Ok(PyDataset { inner })
    }

    /// Draws a synthetic dataset: family "gaussian", "quadratic" or "heavy-tailed".
    #[staticmethod]
    #[pyo3(signature = (family, n, seed = 0, dim = 5, noise = 0.5, kappa = 1.0, shift = 0.0, nu = 3.0, loc = 0.0, scale = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn synthetic(
        family: &str,
        n: usize,
        seed: u64,
        dim: usize,
        noise: f64,
        kappa: f64,
        shift: f64,
        nu: f64,
        loc: f64,
        scale: f64,
    ) -> PyResult<Self> {
        let family = match family.parse::<dataio::FamilyName>().py()? {
            dataio::FamilyName::Gaussian => SyntheticFamily::GaussianLinear { dim, noise },
            dataio::FamilyName::Quadratic => SyntheticFamily::QuadraticSaddle { dim, kappa, shift },
            dataio::FamilyName::HeavyTailed => SyntheticFamily::HeavyTailed { nu, loc, scale },
        };
        let inner = dataio::gen_synthetic(&SyntheticSpec { family, n, seed }).py()?;
        Ok(PyDataset { inner })
    }

    fn save_libsvm(&self, path: &str) -> PyResult<()> {
        dataio::save_libsvm(&self.inner, path, &[]).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.iter().map(|z| z.features.clone()).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<f64> {
        self.inner.iter().map(|z| z.label).collect()
    }

    fn positive_fraction(&self) -> f64 {
        self.inner.positive_fraction()
    }

    /// Copy with every feature vector scaled to unit norm.
    fn normalized(&self) -> Self {
        PyDataset { inner: self.inner.normalized() }
    }

    /// Copy with example `index` replaced by `(features, label)`.
    fn with_replaced(&self, index: usize, features: Vec<f64>, label: f64) -> PyResult<Self> {
        let pair = stability::make_neighbor(&self.inner, index, Example::new(features, label)).py()?;
        Ok(PyDataset { inner: pair.s_prime })
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

/// Problem family plus its parameters; bind it to data with `build`.
#[pyclass(name = "ProblemSpec", module = "pyminimax", skip_from_py_object)]
#[derive(Clone)]
struct PyProblemSpec {
    inner: ProblemSpec,
}

#[pymethods]
impl PyProblemSpec {
    #[new]
    #[pyo3(signature = (kind, rho = 1.0, reg = 0.0, p = None, radius_w = 10.0, radius_v = 10.0))]
    fn new(kind: &str, rho: f64, reg: f64, p: Option<f64>, radius_w: f64, radius_v: f64) -> PyResult<Self> {
        let kind: ProblemKind = kind.parse().py()?;
        Ok(PyProblemSpec { inner: ProblemSpec { kind, rho, reg, p_override: p, radius_w, radius_v } })
    }

    fn build(&self, data: &PyDataset) -> PyResult<PyProblem> {
        Ok(PyProblem { inner: self.inner.build(&data.inner).py()? })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }

    fn __repr__(&self) -> String {
        format!("ProblemSpec(kind='{}')", self.inner.kind)
    }
}

/// A minimax objective over two Euclidean balls.
#[pyclass(name = "Problem", module = "pyminimax")]
struct PyProblem {
    inner: problems::MinimaxProblem,
}

#[pymethods]
impl PyProblem {
    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }
    #[getter]
    fn primal_dim(&self) -> usize {
        self.inner.primal_dim
    }
    #[getter]
    fn dual_dim(&self) -> usize {
        self.inner.dual_dim
    }
    #[getter]
    fn radius_w(&self) -> f64 {
        self.inner.radius_w
    }
    #[getter]
    fn radius_v(&self) -> f64 {
        self.inner.radius_v
    }
    #[getter]
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz
    }
    #[getter]
    fn smooth(&self) -> Option<f64> {
        self.inner.smooth
    }
    #[getter]
    fn sc_rho(&self) -> f64 {
        self.inner.sc_rho
    }
    #[getter]
    fn wc_rho(&self) -> f64 {
        self.inner.wc_rho
    }

    /// `F_S(w, v)`.
    fn value(&self, w: Vec<f64>, v: Vec<f64>, data: &PyDataset) -> PyResult<f64> {
        self.inner.empirical_value(&Point::new(w, v), &data.inner).py()
    }

    /// `(∇_w F_S, ∇_v F_S)`.
    fn grad(&self, w: Vec<f64>, v: Vec<f64>, data: &PyDataset) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.inner.empirical_grad(&Point::new(w, v), &data.inner).py()
    }

    /// Empirical saddle point `(w, v)`.
    fn saddle(&self, data: &PyDataset) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let s = self.inner.empirical_saddle(&data.inner).py()?;
        Ok((s.point.w, s.point.v))
    }

    /// Weak primal-dual gap `sup_v F_S(w, ·) − inf_w F_S(·, v)`.
    fn weak_gap(&self, w: Vec<f64>, v: Vec<f64>, data: &PyDataset) -> PyResult<f64> {
        let gap = risk::empirical_weak_pd_gap(&self.inner, &data.inner, &Point::new(w, v), &InnerSolverConfig::default())
            .py()?;
        Ok(gap.gap)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(kind='{}', primal_dim={}, dual_dim={})",
            self.inner.kind(),
            self.inner.primal_dim,
            self.inner.dual_dim
        )
    }
}

/// Step-size schedule, e.g. `schedule("constant", eta=0.1)` or `schedule("inv-rho-t", rho=1)`.
#[pyfunction]
#[pyo3(signature = (kind, eta = None, c = None, rho = None, t0 = None, mult = None, power = None))]
fn schedule(
    kind: &str,
    eta: Option<f64>,
    c: Option<f64>,
    rho: Option<f64>,
    t0: Option<f64>,
    mult: Option<f64>,
    power: Option<f64>,
) -> PyResult<PySchedule> {
    let kind: ScheduleKind = kind.parse().py()?;
    let params = ScheduleParams { eta, c, rho, t0, mult, power };
    Ok(PySchedule { inner: Schedule::from_params(kind, &params, None).py()? })
}

#[pyclass(name = "Schedule", module = "pyminimax", skip_from_py_object)]
#[derive(Clone)]
struct PySchedule {
    inner: Schedule,
}

#[pymethods]
impl PySchedule {
    /// `η_t` for step `t` of a `horizon`-step run.
    fn eta(&self, t: usize, horizon: usize) -> PyResult<f64> {
        self.inner.eval(t, horizon).py()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Result of one run.
#[pyclass(name = "Trajectory", module = "pyminimax", get_all)]
struct PyTrajectory {
    final_w: Vec<f64>,
    final_v: Vec<f64>,
    averaged_w: Vec<f64>,
    averaged_v: Vec<f64>,
    iterations: usize,
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().py()
}

/// Runs SGDA or AGDA for `iterations` steps from the origin.
#[pyfunction]
#[pyo3(signature = (problem, data, schedule, iterations, seed = 0, algorithm = "sgda"))]
fn run(
    problem: &PyProblem,
    data: &PyDataset,
    schedule: &PySchedule,
    iterations: usize,
    seed: u64,
    algorithm: &str,
) -> PyResult<PyTrajectory> {
    let cfg = RunConfig::new(self::algorithm(algorithm)?, schedule.inner, iterations, seed);
    let t = optimizers::run(&problem.inner, &data.inner, &cfg).py()?;
    Ok(PyTrajectory {
        final_w: t.final_point.w,
        final_v: t.final_point.v,
        averaged_w: t.averaged.w,
        averaged_v: t.averaged.v,
        iterations: t.iterations,
    })
}

/// Runs one algorithm on `s` and on `s` with example `index` replaced by
/// `(features, label)`, sharing the index stream. Returns `(steps, deltas)`,
/// the joint iterate distance at each recorded step.
#[pyfunction]
#[pyo3(signature = (spec, s, index, features, label, schedule, iterations, seed = 0, algorithm = "sgda", record_every = None))]
#[allow(clippy::too_many_arguments)]
fn paired_run(
    spec: &PyProblemSpec,
    s: &PyDataset,
    index: usize,
    features: Vec<f64>,
    label: f64,
    schedule: &PySchedule,
    iterations: usize,
    seed: u64,
    algorithm: &str,
    record_every: Option<usize>,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let pair = stability::make_neighbor(&s.inner, index, Example::new(features, label)).py()?;
    let cfg = PairedConfig { algorithm: self::algorithm(algorithm)?, schedule: schedule.inner, iterations, record_every };
    let trace = stability::paired_run(|d| spec.inner.build(d), &pair, &cfg, seed).py()?;
    Ok((trace.steps, trace.deltas))
}

/// Evaluates a named bound, e.g. `bound("argstab_scsc", G=1, rho=1, t=100, n=100)`.
/// Step-size and modulus sequences go in `etas=[...]` and `rhos=[...]`.
#[pyfunction]
#[pyo3(signature = (name, **params))]
fn bound(name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<f64> {
    let name: BoundName = name.parse().py()?;
    let mut q = BoundQuery::new(name);
    if let Some(params) = params {
        for (k, v) in params.iter() {
            let key: String = k.extract()?;
            match key.as_str() {
                "etas" => q.etas = Some(v.extract()?),
                "rhos" => q.rhos = Some(v.extract()?),
                _ => q.set(&key, v.extract()?).py()?,
            }
        }
    }
    bounds::eval(&q).py()
}

/// Names accepted by `bound`.
#[pyfunction]
fn bound_names() -> Vec<&'static str> {
    BoundName::ALL.iter().map(|b| b.as_str()).collect()
}

#[pymodule]
fn pyminimax(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyProblemSpec>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(schedule, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(paired_run, m)?)?;
    m.add_function(wrap_pyfunction!(bound, m)?)?;
    m.add_function(wrap_pyfunction!(bound_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
