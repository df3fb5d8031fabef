use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, MinimaxProblem};
use crate::vecmath::{dist_sq, dot};

/// Truncated loss `ψ(x) = log(1 + |x| + x²/2)·sign(x)`.
pub fn psi(x: f64) -> f64 {
    let a = x.abs();
    (a + 0.5 * a * a).ln_1p() * sign(x)
}

/// `ψ′(x) = (1 + |x|) / (1 + |x| + x²/2)`, which lies in `(0, 1]`.
pub fn psi_prime(x: f64) -> f64 {
    let a = x.abs();
    (1.0 + a) / (1.0 + a + 0.5 * a * a)
}

/// Sign with `sign(0) = 0`, the midpoint subgradient of `|·|` at the kink.
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Largest monotonicity defect
/// `−⟨u − u′, Φ(u) − Φ(u′)⟩ / ‖u − u′‖²` with `Φ = (∇_w f, −∇_v f)`,
/// over random point pairs and random examples. Pairs are drawn at mixed
/// separations so both local curvature and kink crossings are seen.
pub(crate) fn estimate_weak_convexity(
    problem: &MinimaxProblem,
    data: &Dataset,
    pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = data
        .iter()
        .map(|e| e.label.abs())
        .fold(1.0f64, f64::max);
    let (pd, dd) = (problem.primal_dim, problem.dual_dim);
    let mut g1 = (vec![0.0; pd], vec![0.0; dd]);
    let mut g2 = (vec![0.0; pd], vec![0.0; dd]);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let a = problem.random_feasible_point(&mut rng, scale);
        let mut b = a.clone();
        let step = 10f64.powf(rng.random_range(-3.0..0.5));
        for c in b.w.iter_mut().chain(b.v.iter_mut()) {
            *c += step * rng.random_range(-1.0..1.0);
        }
        problem.project(&mut b);
        let z = &data.examples()[rng.random_range(0..data.len())];
        problem.grad_into(&a.w, &a.v, z, &mut g1.0, &mut g1.1);
        problem.grad_into(&b.w, &b.v, z, &mut g2.0, &mut g2.1);
        let d2 = dist_sq(&a.w, &b.w) + dist_sq(&a.v, &b.v);
        if d2 == 0.0 {
            continue;
        }
        let dw: Vec<f64> = a.w.iter().zip(&b.w).map(|(x, y)| x - y).collect();
        let dv: Vec<f64> = a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect();
        let gdw: Vec<f64> = g1.0.iter().zip(&g2.0).map(|(x, y)| x - y).collect();
        let gdv: Vec<f64> = g1.1.iter().zip(&g2.1).map(|(x, y)| y - x).collect();
        let inner = dot(&dw, &gdw) + dot(&dv, &gdv);
        worst = worst.max(-inner / d2);
    }
    worst
}
