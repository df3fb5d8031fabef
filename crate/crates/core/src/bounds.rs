//! Closed-form stability, generalization and optimization-error bounds.

use std::collections::BTreeMap;
use std::f64::consts::{E, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundName {
    /// `4ηG(√t + t/n)`
    ArgstabCcNonsmooth,
    /// `√(8e(1+t/n))G/√n · exp(½L²Ση²)(Ση²)^{1/2}`
    ArgstabCcSmooth,
    /// `√(8e)Gη(√t + t/n + log(1/δ) + √(2t log(1/δ)/n))`
    ArgstabCcNonsmoothHp,
    /// `√(8e)Gη exp(½L²tη²)(1 + t/n + log(1/δ) + √(2t log(1/δ)/n))`
    ArgstabCcSmoothHp,
    /// `(2√2G/ρ)(log(et)/t + 1/(n(n−2)))^{1/2}`
    ArgstabScsc,
    /// `4√2ηG²(√T + T/n)` plus the optimization terms.
    WeakPdRiskCc,
    /// `4√(e(T+T²/n))G²η exp(LTη²/2)/√n` plus the optimization terms.
    WeakPdRiskCcSmooth,
    /// `(1+L/ρ)√(32e(T+T²/n))G²η exp(L²Tη²/2)/√n` plus the optimization terms.
    ExcessPrimalSmooth,
    /// `ηG² + (B_W²+B_V²)/(2ηT) + G(B_W+B_V)/√T`
    OptErrCc,
    /// `G²log(eT)/(ρT) + (B_W+B_V)G/√T`, or with a shift `t₀`
    /// `2ρt₀(B_W²+B_V²)/T + G²log(eT)/(ρT)`.
    OptErrScsc,
    /// `(1+L/ρ)Gε`
    StabToPrimalGen,
    /// `(1+L/ρ)G√2ε`
    StabToStrongGen,
    /// `8(√e·cG²/√(2cρ+1)·(1+√T/n)·T^{cρ})^{2/(2cρ+3)}·n^{−(2cρ+1)/(2cρ+3)}`
    WcwcWeakGen,
    /// `16(G²/(4L))^{1/(cL+1)}·T^{cL/(cL+1)}/n`
    AgdaWeakGen,
    /// `2√2G/√n·(Σ_j (η_j² + 1/n)·exp(Σ_{k>j} 2ρ_kη_k + (L²+1)η_k²))^{1/2}`,
    /// an argument-stability bound for step and modulus sequences.
    WcwcDiminishingGen,
    /// `2G²/n·max(1/β₁, 1/β₂) + 2G·dist`
    PlGap,
}

impl BoundName {
    pub const ALL: [BoundName; 16] = [
        BoundName::ArgstabCcNonsmooth,
        BoundName::ArgstabCcSmooth,
        BoundName::ArgstabCcNonsmoothHp,
        BoundName::ArgstabCcSmoothHp,
        BoundName::ArgstabScsc,
        BoundName::WeakPdRiskCc,
        BoundName::WeakPdRiskCcSmooth,
        BoundName::ExcessPrimalSmooth,
        BoundName::OptErrCc,
        BoundName::OptErrScsc,
        BoundName::StabToPrimalGen,
        BoundName::StabToStrongGen,
        BoundName::WcwcWeakGen,
        BoundName::AgdaWeakGen,
        BoundName::WcwcDiminishingGen,
        BoundName::PlGap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundName::ArgstabCcNonsmooth => "argstab_cc_nonsmooth",
            BoundName::ArgstabCcSmooth => "argstab_cc_smooth",
            BoundName::ArgstabCcNonsmoothHp => "argstab_cc_nonsmooth_hp",
            BoundName::ArgstabCcSmoothHp => "argstab_cc_smooth_hp",
            BoundName::ArgstabScsc => "argstab_scsc",
            BoundName::WeakPdRiskCc => "weak_pd_risk_cc",
            BoundName::WeakPdRiskCcSmooth => "weak_pd_risk_cc_smooth",
            BoundName::ExcessPrimalSmooth => "excess_primal_smooth",
            BoundName::OptErrCc => "opt_err_cc",
            BoundName::OptErrScsc => "opt_err_scsc",
            BoundName::StabToPrimalGen => "stab_to_primal_gen",
            BoundName::StabToStrongGen => "stab_to_strong_gen",
            BoundName::WcwcWeakGen => "wcwc_weak_gen",
            BoundName::AgdaWeakGen => "agda_weak_gen",
            BoundName::WcwcDiminishingGen => "wcwc_diminishing_gen",
            BoundName::PlGap => "pl_gap",
        }
    }
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundName::ALL
            .iter()
            .copied()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::config("name", format!("unknown bound '{s}'")))
    }
}

/// Canonical spelling of a parameter symbol. Accepts ASCII names and the
/// usual Greek / subscript forms (`η`, `ρ`, `δ`, `ε`, `β₁`, `t₀`, ...).
pub fn canonical_symbol(s: &str) -> Option<&'static str> {
    let sym = match s {
        "eta" | "η" => "eta",
        "c" => "c",
        "t" => "t",
        "T" => "T",
        "n" => "n",
        "G" => "G",
        "L" => "L",
        "rho" | "ρ" => "rho",
        "B_W" | "BW" | "B_w" => "B_W",
        "B_V" | "BV" | "B_v" => "B_V",
        "t0" | "t₀" | "t_0" => "t0",
        "delta" | "δ" => "delta",
        "beta1" | "β₁" | "beta_1" => "beta1",
        "beta2" | "β₂" | "beta_2" => "beta2",
        "eps" | "epsilon" | "ε" => "eps",
        "dist" => "dist",
        _ => return None,
    };
    Some(sym)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    pub name: BoundName,
    pub params: BTreeMap<&'static str, f64>,
    /// Step sizes `η_1..η_T` (diminishing and smooth stability bounds).
    pub etas: Option<Vec<f64>>,
    /// Weak-convexity moduli `ρ_1..ρ_T`.
    pub rhos: Option<Vec<f64>>,
}

impl BoundQuery {
    pub fn new(name: BoundName) -> Self {
        BoundQuery {
            name,
            params: BTreeMap::new(),
            etas: None,
            rhos: None,
        }
    }

    /// Set a parameter by any accepted spelling.
    pub fn set(&mut self, symbol: &str, value: f64) -> Result<()> {
        let key = canonical_symbol(symbol)
            .ok_or_else(|| Error::config(symbol, "unknown bound parameter"))?;
        self.params.insert(key, value);
        Ok(())
    }

    /// Builder form of [`BoundQuery::set`]; panics on an unknown symbol.
    pub fn with(mut self, symbol: &str, value: f64) -> Self {
        self.set(symbol, value).expect("known bound parameter");
        self
    }

    pub fn with_etas(mut self, etas: Vec<f64>) -> Self {
        self.etas = Some(etas);
        self
    }

    pub fn with_rhos(mut self, rhos: Vec<f64>) -> Self {
        self.rhos = Some(rhos);
        self
    }

    /// Parse `key=value` tokens, e.g. `["eta=0.01", "G=1"]`.
    pub fn parse_assignments<'a>(name: BoundName, tokens: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut q = BoundQuery::new(name);
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::config(tok, "expected key=value"))?;
            let k = k.trim();
            let v = v.trim();
            if k == "etas" || k == "rhos" {
                let seq = v
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::config(k, format!("bad number list: {e}")))?;
                if k == "etas" {
                    q.etas = Some(seq);
                } else {
                    q.rhos = Some(seq);
                }
                continue;
            }
            let x: f64 = v
                .parse()
                .map_err(|e| Error::config(k, format!("bad number '{v}': {e}")))?;
            q.set(k, x)?;
        }
        Ok(q)
    }

    fn raw(&self, sym: &'static str) -> Result<f64> {
        let x = *self
            .params
            .get(sym)
            .ok_or_else(|| Error::config(sym, format!("missing parameter for {}", self.name)))?;
        if !x.is_finite() {
            return Err(Error::config(sym, format!("must be finite, got {x}")));
        }
        Ok(x)
    }

    fn pos(&self, sym: &'static str) -> Result<f64> {
        let x = self.raw(sym)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(Error::config(sym, format!("must be positive, got {x}")))
        }
    }

    fn nonneg(&self, sym: &'static str) -> Result<f64> {
        let x = self.raw(sym)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(Error::config(sym, format!("must be nonnegative, got {x}")))
        }
    }

    fn delta(&self) -> Result<f64> {
        let d = self.raw("delta")?;
        if d > 0.0 && d < 1.0 {
            Ok(d)
        } else {
            Err(Error::config("delta", format!("must lie in (0, 1), got {d}")))
        }
    }

    fn optional_nonneg(&self, sym: &'static str) -> Result<Option<f64>> {
        if self.params.contains_key(sym) {
            self.nonneg(sym).map(Some)
        } else {
            Ok(None)
        }
    }
}

fn sequence<'a>(seq: &'a Option<Vec<f64>>, sym: &'static str, nonneg: bool) -> Result<Option<&'a [f64]>> {
    let Some(s) = seq.as_deref() else {
        return Ok(None);
    };
    if let Some(x) = s.iter().find(|x| !x.is_finite() || (nonneg && **x < 0.0)) {
        return Err(Error::config(sym, format!("sequence entry {x} is not a valid value")));
    }
    Ok(Some(s))
}

/// `ηG² + (B_W²+B_V²)/(2ηT) + G(B_W+B_V)/√T`
fn optimization_terms(q: &BoundQuery) -> Result<f64> {
    let eta = q.pos("eta")?;
    let g = q.nonneg("G")?;
    let big_t = q.pos("T")?;
    let bw = q.nonneg("B_W")?;
    let bv = q.nonneg("B_V")?;
    Ok(eta * g * g + (bw * bw + bv * bv) / (2.0 * eta * big_t) + g * (bw + bv) / big_t.sqrt())
}

/// `exp(log_scale)` with `log_scale` built from nonnegative factors; a zero
/// factor is passed as `None` so the product is exactly zero.
fn exp_or_zero(log_scale: Option<f64>) -> f64 {
    log_scale.map_or(0.0, f64::exp)
}

fn ln_nonneg(x: f64) -> Option<f64> {
    (x > 0.0).then(|| x.ln())
}

/// Evaluate a bound. Missing or invalid parameters are configuration errors
/// naming the offending symbol.
pub fn eval(q: &BoundQuery) -> Result<f64> {
    let value = match q.name {
        BoundName::ArgstabCcNonsmooth => {
            let (eta, g, t, n) = (q.pos("eta")?, q.nonneg("G")?, q.nonneg("t")?, q.pos("n")?);
            4.0 * eta * g * (t.sqrt() + t / n)
        }
        BoundName::ArgstabCcSmooth => {
            let (g, l, n) = (q.nonneg("G")?, q.nonneg("L")?, q.pos("n")?);
            let (t, sum_sq) = match sequence(&q.etas, "etas", true)? {
                Some(etas) => {
                    let t = etas.len() as f64;
                    if let Some(tp) = q.params.get("t") {
                        if *tp != t {
                            return Err(Error::config("t", format!("{tp} disagrees with {t} step sizes")));
                        }
                    }
                    (t, etas.iter().map(|e| e * e).sum::<f64>())
                }
                None => {
                    let (eta, t) = (q.pos("eta")?, q.nonneg("t")?);
                    (t, t * eta * eta)
                }
            };
            let log = ln_nonneg(g).zip(ln_nonneg(sum_sq)).map(|(lg, ls)| {
                0.5 * (8.0 * E * (1.0 + t / n)).ln() + lg - 0.5 * n.ln() + 0.5 * l * l * sum_sq + 0.5 * ls
            });
            exp_or_zero(log)
        }
        BoundName::ArgstabCcNonsmoothHp => {
            let (eta, g, t, n, d) = (q.pos("eta")?, q.nonneg("G")?, q.nonneg("t")?, q.pos("n")?, q.delta()?);
            let ld = (1.0 / d).ln();
            (8.0 * E).sqrt() * g * eta * (t.sqrt() + t / n + ld + (2.0 * t * ld / n).sqrt())
        }
        BoundName::ArgstabCcSmoothHp => {
            let (eta, g, l, t, n, d) = (
                q.pos("eta")?,
                q.nonneg("G")?,
                q.nonneg("L")?,
                q.nonneg("t")?,
                q.pos("n")?,
                q.delta()?,
            );
            let ld = (1.0 / d).ln();
            let bracket = 1.0 + t / n + ld + (2.0 * t * ld / n).sqrt();
            let log = ln_nonneg(g)
                .map(|lg| 0.5 * (8.0 * E).ln() + lg + eta.ln() + 0.5 * l * l * t * eta * eta + bracket.ln());
            exp_or_zero(log)
        }
        BoundName::ArgstabScsc => {
            let (g, rho, t) = (q.nonneg("G")?, q.pos("rho")?, q.pos("t")?);
            let n = q.raw("n")?;
            if n <= 2.0 {
                return Err(Error::invalid(format!("argstab_scsc needs n ≥ 3, got n = {n}")));
            }
            2.0 * SQRT_2 * g / rho * ((E * t).ln() / t + 1.0 / (n * (n - 2.0))).sqrt()
        }
        BoundName::WeakPdRiskCc => {
            let (eta, g, big_t, n) = (q.pos("eta")?, q.nonneg("G")?, q.pos("T")?, q.pos("n")?);
            4.0 * SQRT_2 * eta * g * g * (big_t.sqrt() + big_t / n) + optimization_terms(q)?
        }
        BoundName::WeakPdRiskCcSmooth => {
            let (eta, g, l, big_t, n) = (q.pos("eta")?, q.nonneg("G")?, q.nonneg("L")?, q.pos("T")?, q.pos("n")?);
            let log = ln_nonneg(g).map(|lg| {
                0.5 * (E * (big_t + big_t * big_t / n)).ln() + 2.0 * lg + eta.ln() + l * big_t * eta * eta / 2.0
                    - 0.5 * n.ln()
            });
            4.0 * exp_or_zero(log) + optimization_terms(q)?
        }
        BoundName::ExcessPrimalSmooth => {
            let (eta, g, l, rho, big_t, n) = (
                q.pos("eta")?,
                q.nonneg("G")?,
                q.nonneg("L")?,
                q.pos("rho")?,
                q.pos("T")?,
                q.pos("n")?,
            );
            let log = ln_nonneg(g).map(|lg| {
                (1.0 + l / rho).ln()
                    + 0.5 * (32.0 * E * (big_t + big_t * big_t / n)).ln()
                    + 2.0 * lg
                    + eta.ln()
                    + l * l * big_t * eta * eta / 2.0
                    - 0.5 * n.ln()
            });
            exp_or_zero(log) + optimization_terms(q)?
        }
        BoundName::OptErrCc => optimization_terms(q)?,
        BoundName::OptErrScsc => {
            let (g, rho, big_t) = (q.nonneg("G")?, q.pos("rho")?, q.pos("T")?);
            let (bw, bv) = (q.nonneg("B_W")?, q.nonneg("B_V")?);
            let head = g * g * (E * big_t).ln() / (rho * big_t);
            match q.optional_nonneg("t0")? {
                Some(t0) => 2.0 * rho * t0 * (bw * bw + bv * bv) / big_t + head,
                None => head + (bw + bv) * g / big_t.sqrt(),
            }
        }
        BoundName::StabToPrimalGen => {
            let (l, rho, g, eps) = (q.nonneg("L")?, q.pos("rho")?, q.nonneg("G")?, q.nonneg("eps")?);
            (1.0 + l / rho) * g * eps
        }
        BoundName::StabToStrongGen => {
            let (l, rho, g, eps) = (q.nonneg("L")?, q.pos("rho")?, q.nonneg("G")?, q.nonneg("eps")?);
            (1.0 + l / rho) * g * SQRT_2 * eps
        }
        BoundName::WcwcWeakGen => {
            let (c, g, rho, big_t, n) = (q.pos("c")?, q.nonneg("G")?, q.nonneg("rho")?, q.pos("T")?, q.pos("n")?);
            let cr = c * rho;
            let log = ln_nonneg(g).map(|lg| {
                let inner = 0.5 + c.ln() + 2.0 * lg - 0.5 * (2.0 * cr + 1.0).ln()
                    + (1.0 + big_t.sqrt() / n).ln()
                    + cr * big_t.ln();
                8f64.ln() + 2.0 / (2.0 * cr + 3.0) * inner - (2.0 * cr + 1.0) / (2.0 * cr + 3.0) * n.ln()
            });
            exp_or_zero(log)
        }
        BoundName::AgdaWeakGen => {
            let (c, g, l, big_t, n) = (q.pos("c")?, q.nonneg("G")?, q.pos("L")?, q.pos("T")?, q.pos("n")?);
            let cl = c * l;
            let log = ln_nonneg(g).map(|lg| {
                16f64.ln() + (2.0 * lg - (4.0 * l).ln()) / (cl + 1.0) - n.ln() + cl / (cl + 1.0) * big_t.ln()
            });
            exp_or_zero(log)
        }
        BoundName::WcwcDiminishingGen => {
            let (g, l, n) = (q.nonneg("G")?, q.nonneg("L")?, q.pos("n")?);
            let etas = sequence(&q.etas, "etas", true)?
                .ok_or_else(|| Error::config("etas", "step-size sequence required"))?;
            let rhos: Vec<f64> = match sequence(&q.rhos, "rhos", true)? {
                Some(r) if r.len() == etas.len() => r.to_vec(),
                Some(r) => {
                    return Err(Error::config(
                        "rhos",
                        format!("has {} entries but etas has {}", r.len(), etas.len()),
                    ))
                }
                None => vec![q.nonneg("rho")?; etas.len()],
            };
            if etas.is_empty() {
                return Err(Error::config("etas", "sequence must be nonempty"));
            }
            // log of each summand, then a log-sum-exp.
            let mut tail = 0.0;
            let mut logs = vec![0.0; etas.len()];
            for j in (0..etas.len()).rev() {
                logs[j] = (etas[j] * etas[j] + 1.0 / n).ln() + tail;
                tail += 2.0 * rhos[j] * etas[j] + (l * l + 1.0) * etas[j] * etas[j];
            }
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logs.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            let log = ln_nonneg(g).map(|lg| (2.0 * SQRT_2).ln() + lg - 0.5 * n.ln() + 0.5 * lse);
            exp_or_zero(log)
        }
        BoundName::PlGap => {
            let (g, n, b1) = (q.nonneg("G")?, q.pos("n")?, q.pos("beta1")?);
            let b2 = if q.params.contains_key("beta2") { q.pos("beta2")? } else { b1 };
            let dist = q.optional_nonneg("dist")?.unwrap_or(0.0);
            2.0 * g * g / n * (1.0 / b1).max(1.0 / b2) + 2.0 * g * dist
        }
    };
    if value.is_nan() {
        return Err(Error::invalid(format!("{} evaluated to NaN", q.name)));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(name: BoundName, kv: &[(&str, f64)]) -> BoundQuery {
        let mut q = BoundQuery::new(name);
        for (k, v) in kv {
            q.set(k, *v).unwrap();
        }
        q
    }

    fn full(name: BoundName) -> BoundQuery {
        q(
            name,
            &[
                ("eta", 0.01),
                ("c", 0.5),
                ("t", 100.0),
                ("T", 100.0),
                ("n", 100.0),
                ("G", 1.5),
                ("L", 2.0),
                ("rho", 0.5),
                ("B_W", 1.0),
                ("B_V", 2.0),
                ("delta", 0.05),
                ("beta1", 0.5),
                ("eps", 0.1),
            ],
        )
        .with_etas(vec![0.1; 100])
    }

    #[test]
    fn nonsmooth_example() {
        let v = eval(&q(
            BoundName::ArgstabCcNonsmooth,
            &[("eta", 0.01), ("G", 1.0), ("t", 100.0), ("n", 100.0)],
        ))
        .unwrap();
        assert!((v - 0.44).abs() < 1e-15);
    }

    #[test]
    fn scsc_example() {
        let v = eval(&q(BoundName::ArgstabScsc, &[("G", 1.0), ("rho", 1.0), ("t", 1.0), ("n", 100.0)])).unwrap();
        let oracle = 2.0 * 2f64.sqrt() * (1.0 + 1.0 / 9800.0f64).sqrt();
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 2.8285).abs() < 1e-3);
        for n in [0.0, 1.0, 2.0] {
            let r = eval(&q(BoundName::ArgstabScsc, &[("G", 1.0), ("rho", 1.0), ("t", 1.0), ("n", n)]));
            assert!(matches!(r, Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn zero_stability_gives_zero_gap() {
        for name in [BoundName::StabToPrimalGen, BoundName::StabToStrongGen] {
            let v = eval(&q(name, &[("L", 3.0), ("rho", 0.5), ("G", 2.0), ("eps", 0.0)])).unwrap();
            assert_eq!(v, 0.0);
        }
        let v = eval(&q(BoundName::StabToStrongGen, &[("L", 1.0), ("rho", 1.0), ("G", 1.0), ("eps", 1.0)])).unwrap();
        assert!((v - 2.0 * SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn opt_err_halves_under_sqrt_scaling() {
        let at = |big_t: f64| {
            let eta = big_t.powf(-0.5);
            let g = 1.3;
            let qq = q(
                BoundName::OptErrCc,
                &[("eta", eta), ("G", g), ("T", big_t), ("B_W", 1.0), ("B_V", 1.0)],
            );
            eval(&qq).unwrap()
        };
        assert!((at(4000.0) / at(1000.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_symbol_is_named() {
        match eval(&q(BoundName::ArgstabCcNonsmooth, &[("eta", 0.1), ("G", 1.0), ("n", 10.0)])) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "t"),
            other => panic!("unexpected {other:?}"),
        }
        match eval(&q(BoundName::ArgstabCcNonsmoothHp, &[("eta", 0.1), ("G", 1.0), ("t", 3.0), ("n", 10.0), ("delta", 1.5)])) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "delta"),
            other => panic!("unexpected {other:?}"),
        }
        match eval(&BoundQuery::new(BoundName::WcwcDiminishingGen).with("G", 1.0).with("L", 1.0).with("n", 5.0)) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "etas"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(BoundQuery::new(BoundName::PlGap).set("zeta", 1.0).is_err());
        assert!("argstab_nothing".parse::<BoundName>().is_err());
    }

    #[test]
    fn names_round_trip() {
        for b in BoundName::ALL {
            assert_eq!(b.as_str().parse::<BoundName>().unwrap(), b);
            assert!(eval(&full(b)).unwrap() >= 0.0, "{b}");
        }
    }

    #[test]
    fn parse_assignments_accepts_greek_and_sequences() {
        let qq = BoundQuery::parse_assignments(BoundName::ArgstabCcNonsmooth, ["η=0.01", "G=1", "t=100", "n=100"]).unwrap();
        assert!((eval(&qq).unwrap() - 0.44).abs() < 1e-15);
        let qq = BoundQuery::parse_assignments(
            BoundName::WcwcDiminishingGen,
            ["G=1", "L=0", "n=4", "etas=0.5,0.5", "rhos=0,0"],
        )
        .unwrap();
        assert_eq!(qq.etas, Some(vec![0.5, 0.5]));
        assert!(BoundQuery::parse_assignments(BoundName::PlGap, ["G"]).is_err());
        assert!(BoundQuery::parse_assignments(BoundName::PlGap, ["G=x"]).is_err());
    }

    #[test]
    fn smooth_stability_matches_direct_product() {
        let (g, l, n, eta, t) = (1.2, 0.7, 50.0, 0.05, 40.0);
        let direct = (8.0 * E * (1.0 + t / n)).sqrt() * g / n.sqrt()
            * (0.5 * l * l * t * eta * eta).exp()
            * (t * eta * eta).sqrt();
        let v = eval(&q(BoundName::ArgstabCcSmooth, &[("G", g), ("L", l), ("n", n), ("eta", eta), ("t", t)])).unwrap();
        assert!((v / direct - 1.0).abs() < 1e-13);
        let seq = BoundQuery::new(BoundName::ArgstabCcSmooth)
            .with("G", g)
            .with("L", l)
            .with("n", n)
            .with_etas(vec![eta; 40]);
        assert!((eval(&seq).unwrap() / direct - 1.0).abs() < 1e-12);
        // Stress parameters stay finite in log space until the result itself overflows.
        let big = eval(&q(BoundName::ArgstabCcSmooth, &[("G", 1.0), ("L", 10.0), ("n", 10.0), ("eta", 1.0), ("t", 14.0)]))
            .unwrap();
        assert!(big.is_finite());
    }

    #[test]
    fn smooth_risk_and_primal_match_direct_products() {
        let (eta, g, l, rho, big_t, n, bw, bv): (f64, f64, f64, f64, f64, f64, f64, f64) = (0.03, 1.1, 0.8, 0.4, 200.0, 100.0, 1.0, 2.0);
        let opt = eta * g * g + (bw * bw + bv * bv) / (2.0 * eta * big_t) + g * (bw + bv) / big_t.sqrt();
        let risk = 4.0 * (E * (big_t + big_t * big_t / n)).sqrt() * g * g * eta * (l * big_t * eta * eta / 2.0).exp()
            / n.sqrt()
            + opt;
        let primal = (1.0 + l / rho) * (32.0 * E * (big_t + big_t * big_t / n)).sqrt() * g * g * eta
            * (l * l * big_t * eta * eta / 2.0).exp()
            / n.sqrt()
            + opt;
        let base = [("eta", eta), ("G", g), ("L", l), ("rho", rho), ("T", big_t), ("n", n), ("B_W", bw), ("B_V", bv)];
        assert!((eval(&q(BoundName::WeakPdRiskCcSmooth, &base)).unwrap() / risk - 1.0).abs() < 1e-13);
        assert!((eval(&q(BoundName::ExcessPrimalSmooth, &base)).unwrap() / primal - 1.0).abs() < 1e-13);
    }

    #[test]
    fn high_probability_forms_match_direct_products() {
        let (eta, g, l, t, n, d) = (0.02, 1.4, 1.5, 80.0, 60.0, 0.1);
        let ld = (1.0f64 / d).ln();
        let tail = t / n + ld + (2.0 * t * ld / n).sqrt();
        let ns = (8.0 * E).sqrt() * g * eta * (t.sqrt() + tail);
        let sm = (8.0 * E).sqrt() * g * eta * (0.5 * l * l * t * eta * eta).exp() * (1.0 + tail);
        let base = [("eta", eta), ("G", g), ("L", l), ("t", t), ("n", n), ("delta", d)];
        assert!((eval(&q(BoundName::ArgstabCcNonsmoothHp, &base)).unwrap() / ns - 1.0).abs() < 1e-13);
        assert!((eval(&q(BoundName::ArgstabCcSmoothHp, &base)).unwrap() / sm - 1.0).abs() < 1e-13);
    }

    #[test]
    fn weakly_convex_forms_match_direct_products() {
        let (c, g, rho, big_t, n, l): (f64, f64, f64, f64, f64, f64) = (0.3, 1.2, 0.9, 400.0, 20.0, 1.7);
        let cr = c * rho;
        let wc = 8.0
            * (E.sqrt() * c * g * g / (2.0 * cr + 1.0).sqrt() * (1.0 + big_t.sqrt() / n) * big_t.powf(cr))
                .powf(2.0 / (2.0 * cr + 3.0))
            * (1.0 / n).powf((2.0 * cr + 1.0) / (2.0 * cr + 3.0));
        let v = eval(&q(BoundName::WcwcWeakGen, &[("c", c), ("G", g), ("rho", rho), ("T", big_t), ("n", n)])).unwrap();
        assert!((v / wc - 1.0).abs() < 1e-13);

        let cl = c * l;
        let ag = 16.0 * (g * g / (4.0 * l)).powf(1.0 / (cl + 1.0)) / n * big_t.powf(cl / (cl + 1.0));
        let v = eval(&q(BoundName::AgdaWeakGen, &[("c", c), ("G", g), ("L", l), ("T", big_t), ("n", n)])).unwrap();
        assert!((v / ag - 1.0).abs() < 1e-13);
    }

    #[test]
    fn diminishing_matches_direct_sum() {
        let etas = vec![0.5, 0.3, 0.2, 0.1];
        let rhos = vec![0.4, 0.2, 0.1, 0.0];
        let (g, l, n) = (1.3, 0.9, 7.0);
        let mut s = 0.0;
        for j in 0..4 {
            let mut e = 0.0;
            for k in j + 1..4 {
                e += 2.0 * rhos[k] * etas[k] + (l * l + 1.0) * etas[k] * etas[k];
            }
            s += (etas[j] * etas[j] + 1.0 / n) * f64::exp(e);
        }
        let direct = 2.0 * SQRT_2 * g / n.sqrt() * s.sqrt();
        let qq = BoundQuery::new(BoundName::WcwcDiminishingGen)
            .with("G", g)
            .with("L", l)
            .with("n", n)
            .with_etas(etas.clone())
            .with_rhos(rhos);
        assert!((eval(&qq).unwrap() / direct - 1.0).abs() < 1e-13);
        let bad = BoundQuery::new(BoundName::WcwcDiminishingGen)
            .with("G", g)
            .with("L", l)
            .with("n", n)
            .with_etas(etas)
            .with_rhos(vec![0.1]);
        assert!(eval(&bad).is_err());
    }

    #[test]
    fn opt_err_scsc_variants() {
        let (g, rho, big_t, bw, bv) = (1.0, 2.0, 1000.0, 1.0, 3.0);
        let base = [("G", g), ("rho", rho), ("T", big_t), ("B_W", bw), ("B_V", bv)];
        let head = g * g * (E * big_t).ln() / (rho * big_t);
        assert!((eval(&q(BoundName::OptErrScsc, &base)).unwrap() - (head + (bw + bv) * g / big_t.sqrt())).abs() < 1e-15);
        let mut shifted = q(BoundName::OptErrScsc, &base);
        shifted.set("t0", 4.0).unwrap();
        let want = 2.0 * rho * 4.0 * (bw * bw + bv * bv) / big_t + head;
        assert!((eval(&shifted).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn pl_gap_formula() {
        let v = eval(&q(BoundName::PlGap, &[("G", 2.0), ("n", 100.0), ("beta1", 1.0)])).unwrap();
        assert!((v - 0.08).abs() < 1e-15);
        let v = eval(&q(BoundName::PlGap, &[("G", 2.0), ("n", 100.0), ("beta1", 1.0), ("beta2", 0.5), ("dist", 0.01)]))
            .unwrap();
        assert!((v - (0.16 + 0.04)).abs() < 1e-15);
        let half = eval(&q(BoundName::PlGap, &[("G", 2.0), ("n", 200.0), ("beta1", 1.0)])).unwrap();
        assert!((half - 0.04).abs() < 1e-15);
    }

    #[test]
    fn weak_pd_risk_decomposes_into_stability_and_optimization() {
        for (eta, g, big_t, n, bw, bv) in [
            (0.01, 1.0, 100.0, 100.0, 1.0, 1.0),
            (0.003, 2.5, 1000.0, 40.0, 0.5, 3.0),
            (0.2, 0.1, 10.0, 1000.0, 10.0, 0.0),
        ] {
            let risk = eval(&q(
                BoundName::WeakPdRiskCc,
                &[("eta", eta), ("G", g), ("T", big_t), ("n", n), ("B_W", bw), ("B_V", bv)],
            ))
            .unwrap();
            let stab = eval(&q(BoundName::ArgstabCcNonsmooth, &[("eta", eta), ("G", g), ("t", big_t), ("n", n)])).unwrap();
            let opt = eval(&q(BoundName::OptErrCc, &[("eta", eta), ("G", g), ("T", big_t), ("B_W", bw), ("B_V", bv)]))
                .unwrap();
            assert!(((SQRT_2 * g * stab + opt) - risk).abs() <= 1e-12 * risk);
        }
    }

    /// Direction in which each bound moves as a symbol grows.
    #[derive(Clone, Copy)]
    enum Dir {
        Up,
        Down,
    }

    fn monotone_cases() -> Vec<(BoundName, &'static str, Dir)> {
        use BoundName::*;
        use Dir::*;
        vec![
            (ArgstabCcNonsmooth, "eta", Up),
            (ArgstabCcNonsmooth, "t", Up),
            (ArgstabCcNonsmooth, "n", Down),
            (ArgstabCcSmooth, "eta", Up),
            (ArgstabCcSmooth, "t", Up),
            (ArgstabCcSmooth, "n", Down),
            (ArgstabCcNonsmoothHp, "eta", Up),
            (ArgstabCcNonsmoothHp, "t", Up),
            (ArgstabCcNonsmoothHp, "n", Down),
            (ArgstabCcSmoothHp, "eta", Up),
            (ArgstabCcSmoothHp, "t", Up),
            (ArgstabCcSmoothHp, "n", Down),
            (ArgstabScsc, "t", Down),
            (ArgstabScsc, "n", Down),
            (ExcessPrimalSmooth, "n", Down),
            (WeakPdRiskCc, "n", Down),
            (WeakPdRiskCcSmooth, "n", Down),
            (StabToPrimalGen, "eps", Up),
            (StabToStrongGen, "eps", Up),
            (WcwcWeakGen, "T", Up),
            (WcwcWeakGen, "n", Down),
            (AgdaWeakGen, "T", Up),
            (AgdaWeakGen, "n", Down),
            (PlGap, "n", Down),
        ]
    }

    #[test]
    fn monotone_parameter_sweeps() {
        for (name, sym, dir) in monotone_cases() {
            let mut prev: Option<f64> = None;
            for k in 0..30 {
                let x = 3.0 * 1.4f64.powi(k);
                let x = if sym == "eta" { x * 1e-4 } else { x };
                let mut qq = full(name);
                if name == BoundName::ArgstabCcSmooth {
                    qq.etas = None;
                }
                qq.set(sym, x).unwrap();
                let v = eval(&qq).unwrap();
                if let Some(p) = prev {
                    match dir {
                        Dir::Up => assert!(v >= p, "{name} not nondecreasing in {sym}: {p} -> {v}"),
                        Dir::Down => assert!(v <= p, "{name} not nonincreasing in {sym}: {p} -> {v}"),
                    }
                }
                prev = Some(v);
            }
        }
    }

    proptest! {
        #[test]
        fn decomposition_holds_on_random_parameters(
            eta in 1e-4f64..1.0,
            g in 0.0f64..10.0,
            big_t in 1.0f64..1e6,
            n in 1.0f64..1e5,
            bw in 0.0f64..10.0,
            bv in 0.0f64..10.0,
        ) {
            let risk = eval(&q(
                BoundName::WeakPdRiskCc,
                &[("eta", eta), ("G", g), ("T", big_t), ("n", n), ("B_W", bw), ("B_V", bv)],
            )).unwrap();
            let stab = eval(&q(BoundName::ArgstabCcNonsmooth, &[("eta", eta), ("G", g), ("t", big_t), ("n", n)])).unwrap();
            let opt = eval(&q(BoundName::OptErrCc, &[("eta", eta), ("G", g), ("T", big_t), ("B_W", bw), ("B_V", bv)])).unwrap();
            prop_assert!(((SQRT_2 * g * stab + opt) - risk).abs() <= 1e-12 * risk.max(1e-300));
        }

        #[test]
        fn every_bound_is_nonnegative(eta in 1e-4f64..0.5, t in 1.0f64..1e4, n in 3.0f64..1e4, g in 0.0f64..5.0) {
            for b in BoundName::ALL {
                let mut qq = full(b);
                qq.set("eta", eta).unwrap();
                qq.set("t", t).unwrap();
                qq.set("T", t).unwrap();
                qq.set("n", n).unwrap();
                qq.set("G", g).unwrap();
                if b == BoundName::ArgstabCcSmooth {
                    qq.etas = None;
                }
                let v = eval(&qq).unwrap();
                prop_assert!(v >= 0.0, "{} = {}", b, v);
            }
        }
    }
}
