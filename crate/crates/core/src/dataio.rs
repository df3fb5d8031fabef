//! LIBSVM parsing, synthetic data generation and CSV emission.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::problems::{Dataset, Example};

pub const TRACE_HEADER: [&str; 4] = ["pass", "eta", "mean_delta", "std_delta"];
pub const RISK_HEADER: [&str; 4] = ["metric", "value", "stderr", "method"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Labels must be `+1`, `0` or `−1`; `0` maps to `−1`.
    #[default]
    Binary,
    /// Any finite real label, kept as is.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LibsvmOptions {
    pub labels: LabelMode,
    /// Force the feature dimension instead of inferring the largest index.
    pub dim: Option<usize>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parse LIBSVM text (`<label> <idx>:<val> ...`, 1-based strictly increasing
/// indices). Blank lines and `#` comments are skipped; features are stored
/// dense with the dimension set by the largest index in the whole input.
pub fn parse_libsvm<R: Read>(reader: R, opts: LibsvmOptions) -> Result<Dataset> {
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let raw: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("unparsable label '{label_tok}'")))?;
        let label = match opts.labels {
            LabelMode::Binary if raw == 1.0 => 1.0,
            LabelMode::Binary if raw == 0.0 || raw == -1.0 => -1.0,
            LabelMode::Binary => return Err(parse_err(lineno, format!("label {raw} is not one of +1, 0, -1"))),
            LabelMode::Real if raw.is_finite() => raw,
            LabelMode::Real => return Err(parse_err(lineno, format!("label {raw} is not finite"))),
        };
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("unparsable index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("unparsable value '{val}'")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_err(lineno, format!("index {idx} does not increase after {last}")));
            }
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("value at index {idx} is not finite")));
            }
            if let Some(d) = opts.dim {
                if idx > d {
                    return Err(parse_err(lineno, format!("index {idx} exceeds dimension {d}")));
                }
            }
            last = idx;
            entries.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(parse_err(0, "empty dataset"));
    }
    let dim = opts.dim.unwrap_or(max_index);
    let examples = rows
        .into_iter()
        .map(|(label, entries)| {
            let mut x = vec![0.0; dim];
            for (i, v) in entries {
                x[i - 1] = v;
            }
            Example::new(x, label)
        })
        .collect();
    Dataset::new(examples)
}

pub fn parse_libsvm_str(text: &str, opts: LibsvmOptions) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), opts)
}

pub fn read_libsvm(path: impl AsRef<Path>, opts: LibsvmOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(file, opts)
}

/// Serialize in LIBSVM format. Values use the shortest round-trip decimal
/// form; `+0.0` entries are omitted except the last coordinate, which is
/// always written so the dimension survives a round trip. `comments` become
/// leading `# ` lines.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W, comments: &[String]) -> std::io::Result<()> {
    write_comments(&mut out, comments)?;
    let dim = data.dim();
    for ex in data {
        write!(out, "{}", ex.label)?;
        for (k, x) in ex.features.iter().enumerate() {
            if x.to_bits() != 0 || k + 1 == dim {
                write!(out, " {}:{}", k + 1, x)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_libsvm(data: &Dataset, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_libsvm(data, &mut w, comments)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticFamily {
    /// `x ~ N(0, I_d)`, `y = sign(⟨θ, x⟩ + σε)` with `θ = 1/√d` and `ε ~ N(0, 1)`.
    GaussianLinear { dim: usize, noise: f64 },
    /// Coefficient triples `(z₁, z₂, z₃)`: `z₁ ~ U[−κ, κ]`,
    /// `z₂, z₃ ~ N(shift·1, I_d)`; labels are 0.
    QuadraticSaddle { dim: usize, kappa: f64, shift: f64 },
    /// Feature `[1.0]`, label `loc + scale·t_ν`.
    HeavyTailed { nu: f64, loc: f64, scale: f64 },
}

impl SyntheticFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticFamily::GaussianLinear { .. } => "gaussian",
            SyntheticFamily::QuadraticSaddle { .. } => "quadratic",
            SyntheticFamily::HeavyTailed { .. } => "heavy-tailed",
        }
    }
}

impl fmt::Display for SyntheticFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Family names accepted for `data.family`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    Gaussian,
    Quadratic,
    HeavyTailed,
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian-features-linear-labels" => Ok(FamilyName::Gaussian),
            "quadratic" | "quadratic-saddle-coeffs" => Ok(FamilyName::Quadratic),
            "heavy-tailed" | "heavy-tailed-scalar" => Ok(FamilyName::HeavyTailed),
            other => Err(Error::config("data.family", format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub family: SyntheticFamily,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn gaussian(dim: usize, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            family: SyntheticFamily::GaussianLinear { dim, noise: 0.5 },
            n,
            seed,
        }
    }

    pub fn quadratic(dim: usize, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            family: SyntheticFamily::QuadraticSaddle {
                dim,
                kappa: 1.0,
                shift: 0.0,
            },
            n,
            seed,
        }
    }

    pub fn heavy_tailed(nu: f64, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            family: SyntheticFamily::HeavyTailed {
                nu,
                loc: 0.0,
                scale: 1.0,
            },
            n,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("data.n", "must be at least 1"));
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        match self.family {
            SyntheticFamily::GaussianLinear { dim, noise } => {
                if dim == 0 {
                    return Err(Error::config("data.dim", "must be at least 1"));
                }
                if !finite_nonneg(noise) {
                    return Err(Error::config("data.noise", format!("must be nonnegative, got {noise}")));
                }
            }
            SyntheticFamily::QuadraticSaddle { dim, kappa, shift } => {
                if dim == 0 {
                    return Err(Error::config("data.dim", "must be at least 1"));
                }
                if !finite_nonneg(kappa) {
                    return Err(Error::config("data.kappa", format!("must be nonnegative, got {kappa}")));
                }
                if !shift.is_finite() {
                    return Err(Error::config("data.shift", "must be finite"));
                }
            }
            SyntheticFamily::HeavyTailed { nu, loc, scale } => {
                if !(nu.is_finite() && nu > 1.0) {
                    return Err(Error::config("data.nu", format!("must exceed 1 so the mean exists, got {nu}")));
                }
                if !loc.is_finite() {
                    return Err(Error::config("data.loc", "must be finite"));
                }
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::config("data.scale", format!("must be positive, got {scale}")));
                }
            }
        }
        Ok(())
    }

    /// Feature dimension of generated examples.
    pub fn example_dim(&self) -> usize {
        match self.family {
            SyntheticFamily::GaussianLinear { dim, .. } => dim,
            SyntheticFamily::QuadraticSaddle { dim, .. } => 2 * dim + 1,
            SyntheticFamily::HeavyTailed { .. } => 1,
        }
    }

    /// `E[y·x]` for the gaussian family: `√(2/π)·θ/√(1+σ²)`.
    pub fn gaussian_cross_moment(dim: usize, noise: f64) -> Vec<f64> {
        let theta = 1.0 / (dim as f64).sqrt();
        let scale = (2.0 / std::f64::consts::PI).sqrt() / (1.0 + noise * noise).sqrt();
        vec![scale * theta; dim]
    }
}

fn draw_example<R: Rng>(family: &SyntheticFamily, rng: &mut R) -> Example {
    match *family {
        SyntheticFamily::GaussianLinear { dim, noise } => {
            let x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let theta = 1.0 / (dim as f64).sqrt();
            let eps: f64 = StandardNormal.sample(rng);
            let s = theta * x.iter().sum::<f64>() + noise * eps;
            Example::new(x, if s >= 0.0 { 1.0 } else { -1.0 })
        }
        SyntheticFamily::QuadraticSaddle { dim, kappa, shift } => {
            let mut f = Vec::with_capacity(2 * dim + 1);
            f.push(if kappa > 0.0 { rng.random_range(-kappa..=kappa) } else { 0.0 });
            for _ in 0..2 * dim {
                let g: f64 = StandardNormal.sample(rng);
                f.push(shift + g);
            }
            Example::new(f, 0.0)
        }
        SyntheticFamily::HeavyTailed { nu, loc, scale } => {
            let t: f64 = StudentT::new(nu).expect("validated degrees of freedom").sample(rng);
            Example::new(vec![1.0], loc + scale * t)
        }
    }
}

/// Generate `spec.n` examples, deterministic in `spec.seed`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let examples = (0..spec.n).map(|_| draw_example(&spec.family, &mut rng)).collect();
    Dataset::new(examples)
}

/// One row of a stability trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub pass: f64,
    pub eta: f64,
    pub mean_delta: f64,
    pub std_delta: f64,
}

/// One row of a risk report file.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow {
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub method: String,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

fn csv_writer<W: Write>(mut out: W, comments: &[String]) -> std::io::Result<csv::Writer<W>> {
    write_comments(&mut out, comments)?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out))
}

/// Write trace rows, sorted by `(pass, eta)`, after optional `# ` comment
/// lines.
pub fn write_trace_csv_to<W: Write>(rows: &[TraceRow], out: W, comments: &[String]) -> std::io::Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.pass.total_cmp(&b.pass).then(a.eta.total_cmp(&b.eta)));
    let mut w = csv_writer(out, comments)?;
    w.write_record(TRACE_HEADER)?;
    for r in &sorted {
        w.write_record([fmt_f64(r.pass), fmt_f64(r.eta), fmt_f64(r.mean_delta), fmt_f64(r.std_delta)])?;
    }
    w.flush()
}

pub fn write_risk_csv_to<W: Write>(rows: &[RiskRow], out: W, comments: &[String]) -> std::io::Result<()> {
    let mut w = csv_writer(out, comments)?;
    w.write_record(RISK_HEADER)?;
    for r in rows {
        w.write_record([r.metric.clone(), fmt_f64(r.value), fmt_f64(r.stderr), r.method.clone()])?;
    }
    w.flush()
}

fn to_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_trace_csv(rows: &[TraceRow], path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    to_file(path.as_ref(), |w| write_trace_csv_to(rows, w, comments))
}

pub fn write_risk_csv(rows: &[RiskRow], path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    to_file(path.as_ref(), |w| write_risk_csv_to(rows, w, comments))
}

fn csv_records<R: Read>(reader: R, header: [&str; 4]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(reader);
    let found = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_err(1, format!("unexpected header {:?}", found.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, got {}", rec.len())));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn field_f64(rec: &csv::StringRecord, k: usize, line: usize) -> Result<f64> {
    rec[k]
        .parse()
        .map_err(|_| parse_err(line, format!("unparsable number '{}'", &rec[k])))
}

/// Read a trace file written by [`write_trace_csv`]; `#` lines are skipped.
pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    csv_records(reader, TRACE_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(TraceRow {
                pass: field_f64(&rec, 0, line)?,
                eta: field_f64(&rec, 1, line)?,
                mean_delta: field_f64(&rec, 2, line)?,
                std_delta: field_f64(&rec, 3, line)?,
            })
        })
        .collect()
}

pub fn read_risk_csv<R: Read>(reader: R) -> Result<Vec<RiskRow>> {
    csv_records(reader, RISK_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(RiskRow {
                metric: rec[0].to_string(),
                value: field_f64(&rec, 1, line)?,
                stderr: field_f64(&rec, 2, line)?,
                method: rec[3].to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_example_line() {
        let d = parse_libsvm_str("+1 1:0.5 3:-2\n", LibsvmOptions::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(0).unwrap(), &Example::new(vec![0.5, 0.0, -2.0], 1.0));
    }

    #[test]
    fn parse_skips_comments_and_maps_labels() {
        let text = "# header\n\n0 2:1\n-1 1:3 # trailing\n1 4:2\n";
        let d = parse_libsvm_str(text, LibsvmOptions::default()).unwrap();
        assert_eq!(d.dim(), 4);
        let labels: Vec<f64> = d.iter().map(|e| e.label).collect();
        assert_eq!(labels, vec![-1.0, -1.0, 1.0]);
        assert_eq!(d.get(0).unwrap().features, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("", 0),
            ("# only a comment\n", 0),
            ("1 1:1\n1 3:1 2:1\n", 2),
            ("1 1:1\n1 2:1 2:3\n", 2),
            ("1 1:1\n\n2 1:1\n", 3),
            ("1 1:x\n", 1),
            ("1 0:1\n", 1),
            ("abc 1:1\n", 1),
            ("1 1\n", 1),
        ];
        for (text, line) in cases {
            match parse_libsvm_str(text, LibsvmOptions::default()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        match parse_libsvm_str("", LibsvmOptions::default()) {
            Err(Error::Parse { message, .. }) => assert_eq!(message, "empty dataset"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forced_dimension() {
        let opts = LibsvmOptions {
            dim: Some(5),
            ..Default::default()
        };
        assert_eq!(parse_libsvm_str("1 2:1\n", opts).unwrap().dim(), 5);
        assert!(parse_libsvm_str("1 6:1\n", opts).is_err());
    }

    #[test]
    fn real_labels() {
        let opts = LibsvmOptions {
            labels: LabelMode::Real,
            ..Default::default()
        };
        let d = parse_libsvm_str("2.5 1:1\n-7e3 1:1\n", opts).unwrap();
        assert_eq!(d.get(1).unwrap().label, -7000.0);
        assert!(parse_libsvm_str("2.5 1:1\n", LibsvmOptions::default()).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        for spec in [
            SyntheticSpec::gaussian(3, 50, 1),
            SyntheticSpec::quadratic(2, 50, 1),
            SyntheticSpec::heavy_tailed(2.5, 50, 1),
        ] {
            assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
            assert_ne!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec.with_seed(2)).unwrap());
            assert_eq!(gen_synthetic(&spec).unwrap().dim(), spec.example_dim());
        }
    }

    #[test]
    fn synthetic_rejects_bad_params() {
        assert!(gen_synthetic(&SyntheticSpec::heavy_tailed(1.0, 5, 1)).is_err());
        assert!(gen_synthetic(&SyntheticSpec::gaussian(0, 5, 1)).is_err());
        assert!(gen_synthetic(&SyntheticSpec::gaussian(2, 0, 1)).is_err());
        match gen_synthetic(&SyntheticSpec::heavy_tailed(0.5, 5, 1)) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "data.nu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gaussian_feature_means_are_centered() {
        let d = gen_synthetic(&SyntheticSpec::gaussian(4, 10_000, 7)).unwrap();
        for k in 0..4 {
            let m: f64 = d.iter().map(|e| e.features[k]).sum::<f64>() / 1e4;
            assert!(m.abs() <= 4.0 / 100.0, "coordinate {k}: mean {m}");
        }
    }

    #[test]
    fn gaussian_cross_moment_matches_sample() {
        let d = gen_synthetic(&SyntheticSpec::gaussian(3, 200_000, 3)).unwrap();
        let want = SyntheticSpec::gaussian_cross_moment(3, 0.5);
        for (k, w) in want.iter().enumerate() {
            let m: f64 = d.iter().map(|e| e.label * e.features[k]).sum::<f64>() / 2e5;
            assert!((m - w).abs() < 4.0 / 2e5f64.sqrt(), "{m} vs {w}");
        }
    }

    #[test]
    fn heavy_tailed_moments() {
        let d = gen_synthetic(&SyntheticSpec::heavy_tailed(2.5, 20_000, 11)).unwrap();
        let ys: Vec<f64> = d.iter().map(|e| e.label).collect();
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = ys.iter().map(|y| (y - mean).powi(4)).sum::<f64>() / n;
        assert!(var.is_finite() && var > 0.0);
        assert!(m4 / (var * var) > 10.0, "kurtosis {}", m4 / (var * var));
    }

    fn trace_rows() -> Vec<TraceRow> {
        vec![
            TraceRow {
                pass: 2.0,
                eta: 0.1,
                mean_delta: 0.3,
                std_delta: 1.0 / 3.0,
            },
            TraceRow {
                pass: 1.0,
                eta: 0.3,
                mean_delta: 1e-300,
                std_delta: 0.0,
            },
            TraceRow {
                pass: 1.0,
                eta: 0.1,
                mean_delta: std::f64::consts::PI,
                std_delta: 2.5e10,
            },
        ]
    }

    #[test]
    fn trace_csv_layout() {
        let mut buf = Vec::new();
        write_trace_csv_to(&trace_rows(), &mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split_terminator('\n').collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "pass,eta,mean_delta,std_delta");
        assert!(lines[1].starts_with("1.0000000000000000e0,1.0000000000000001e-1,"));
        assert!(!text.contains('\r'));

        let mut empty = Vec::new();
        write_trace_csv_to(&[], &mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "pass,eta,mean_delta,std_delta\n");
    }

    #[test]
    fn trace_csv_round_trip_with_comments() {
        let mut buf = Vec::new();
        let comments = vec!["seed=4".to_string(), "a=1\nb=2".to_string()];
        write_trace_csv_to(&trace_rows(), &mut buf, &comments).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=4\n# a=1\n# b=2\npass,"));
        let back = read_trace_csv(buf.as_slice()).unwrap();
        let mut want = trace_rows();
        want.sort_by(|a, b| a.pass.total_cmp(&b.pass).then(a.eta.total_cmp(&b.eta)));
        assert_eq!(back, want);
    }

    #[test]
    fn risk_csv_round_trip() {
        let rows = vec![
            RiskRow {
                metric: "weak_pd_emp".into(),
                value: 0.125,
                stderr: 0.0,
                method: "closed-form".into(),
            },
            RiskRow {
                metric: "F_pop".into(),
                value: -1.0 / 7.0,
                stderr: 1e-4,
                method: "monte-carlo,m=1000".into(),
            },
        ];
        let mut buf = Vec::new();
        write_risk_csv_to(&rows, &mut buf, &[]).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("metric,value,stderr,method\n"));
        assert_eq!(read_risk_csv(buf.as_slice()).unwrap(), rows);
        assert!(read_trace_csv(buf.as_slice()).is_err());
    }

    #[test]
    fn file_writers_report_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing").join("x.csv");
        match write_trace_csv(&[], &bad, &[]) {
            Err(Error::Io { path, .. }) => assert_eq!(path, bad),
            other => panic!("{other:?}"),
        }
        let good = dir.path().join("t.csv");
        write_trace_csv(&trace_rows(), &good, &[]).unwrap();
        assert_eq!(read_trace_csv(File::open(&good).unwrap()).unwrap().len(), 3);
    }

    fn arb_value() -> impl Strategy<Value = f64> {
        prop_oneof![
            Just(0.0),
            Just(-0.0),
            Just(1.0),
            Just(-1.0),
            -1e6f64..1e6,
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
        ]
    }

    proptest! {
        #[test]
        fn libsvm_round_trip_is_bitwise(
            rows in prop::collection::vec(
                (prop::collection::vec(arb_value(), 4), prop_oneof![Just(1.0), Just(-1.0)]),
                1..20,
            )
        ) {
            let data = Dataset::new(rows.into_iter().map(|(x, y)| Example::new(x, y)).collect()).unwrap();
            let mut buf = Vec::new();
            write_libsvm(&data, &mut buf, &[]).unwrap();
            let back = parse_libsvm(buf.as_slice(), LibsvmOptions::default()).unwrap();
            prop_assert_eq!(back.len(), data.len());
            for (a, b) in data.iter().zip(&back) {
                prop_assert_eq!(a.label.to_bits(), b.label.to_bits());
                for (x, y) in a.features.iter().zip(&b.features) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }

        #[test]
        fn real_label_round_trip(labels in prop::collection::vec(arb_value(), 1..10)) {
            let data = Dataset::new(labels.iter().map(|y| Example::new(vec![1.0], *y)).collect()).unwrap();
            let mut buf = Vec::new();
            write_libsvm(&data, &mut buf, &[]).unwrap();
            let opts = LibsvmOptions { labels: LabelMode::Real, ..Default::default() };
            let back = parse_libsvm(buf.as_slice(), opts).unwrap();
            for (a, b) in data.iter().zip(&back) {
                prop_assert_eq!(a.label.to_bits(), b.label.to_bits());
            }
        }

        #[test]
        fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
