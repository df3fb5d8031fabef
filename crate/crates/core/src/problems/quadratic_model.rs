use nalgebra::{DMatrix, DVector};

use crate::vecmath::{dot, norm, norm_sq, project_ball_in_place, Point};

/// Averaged coefficients of an objective that is quadratic in `(w, v)`.
///
/// Built either from a dataset (empirical `F_S`) or from distribution moments
/// (population `F`). Both quadratic-scsc and bilinear-cc objectives are linear
/// in `z`, so the mean of `f` is the same formula at the mean coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadraticModel {
    /// `½ρ‖w‖² + c⟨w,v⟩ − ½ρ‖v‖² + ⟨b_w,w⟩ − ⟨b_v,v⟩`
    Coupled {
        rho: f64,
        coupling: f64,
        lin_w: Vec<f64>,
        lin_v: Vec<f64>,
    },
    /// `wᵀAv + ⟨m, w − v⟩ + ½λ(‖w‖² − ‖v‖²)` with symmetric `A` (row-major).
    Bilinear {
        reg: f64,
        second_moment: Vec<f64>,
        cross: Vec<f64>,
    },
}

impl QuadraticModel {
    pub fn dim(&self) -> usize {
        match self {
            QuadraticModel::Coupled { lin_w, .. } => lin_w.len(),
            QuadraticModel::Bilinear { cross, .. } => cross.len(),
        }
    }

    /// Lipschitz constant of the field `(∇_w F, −∇_v F)` (Frobenius bound on `A`).
    pub fn operator_lipschitz(&self) -> f64 {
        match self {
            QuadraticModel::Coupled { rho, coupling, .. } => (rho * rho + coupling * coupling).sqrt(),
            QuadraticModel::Bilinear {
                reg, second_moment, ..
            } => (reg * reg + norm_sq(second_moment)).sqrt(),
        }
    }

    fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..d).map(|i| dot(&a[i * d..(i + 1) * d], x)).collect()
    }

    pub fn value(&self, w: &[f64], v: &[f64]) -> f64 {
        match self {
            QuadraticModel::Coupled {
                rho,
                coupling,
                lin_w,
                lin_v,
            } => {
                0.5 * rho * norm_sq(w) + coupling * dot(w, v) - 0.5 * rho * norm_sq(v)
                    + dot(lin_w, w)
                    - dot(lin_v, v)
            }
            QuadraticModel::Bilinear {
                reg,
                second_moment,
                cross,
            } => {
                let av = Self::mat_vec(second_moment, v);
                dot(w, &av) + dot(cross, w) - dot(cross, v) + 0.5 * reg * (norm_sq(w) - norm_sq(v))
            }
        }
    }

    pub fn grad(&self, w: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            QuadraticModel::Coupled {
                rho,
                coupling,
                lin_w,
                lin_v,
            } => {
                let gw = (0..w.len())
                    .map(|k| rho * w[k] + coupling * v[k] + lin_w[k])
                    .collect();
                let gv = (0..w.len())
                    .map(|k| coupling * w[k] - rho * v[k] - lin_v[k])
                    .collect();
                (gw, gv)
            }
            QuadraticModel::Bilinear {
                reg,
                second_moment,
                cross,
            } => {
                let av = Self::mat_vec(second_moment, v);
                let aw = Self::mat_vec(second_moment, w);
                let gw = (0..w.len()).map(|k| av[k] + cross[k] + reg * w[k]).collect();
                let gv = (0..w.len()).map(|k| aw[k] - cross[k] - reg * v[k]).collect();
                (gw, gv)
            }
        }
    }

    /// Maximizer and value of `v ↦ F(w, v)` over the ball of radius `radius_v`.
    /// Returns an infinite value when the supremum is unbounded.
    pub fn sup_v(&self, w: &[f64], radius_v: f64) -> (Vec<f64>, f64) {
        // F(w, ·) = −½κ‖v‖² + ⟨g, v⟩ + const with κ ≥ 0.
        let (kappa, g) = match self {
            QuadraticModel::Coupled {
                rho,
                coupling,
                lin_v,
                ..
            } => (
                *rho,
                w.iter().zip(lin_v).map(|(wk, bk)| coupling * wk - bk).collect::<Vec<_>>(),
            ),
            QuadraticModel::Bilinear {
                reg,
                second_moment,
                cross,
            } => {
                let aw = Self::mat_vec(second_moment, w);
                (*reg, aw.iter().zip(cross).map(|(a, m)| a - m).collect())
            }
        };
        let v = maximize_isotropic(kappa, &g, radius_v);
        let val = if v.iter().any(|x| x.is_infinite()) {
            f64::INFINITY
        } else {
            self.value(w, &v)
        };
        (v, val)
    }

    /// Minimizer and value of `w ↦ F(w, v)` over the ball of radius `radius_w`.
    pub fn inf_w(&self, v: &[f64], radius_w: f64) -> (Vec<f64>, f64) {
        // F(·, v) = ½κ‖w‖² + ⟨g, w⟩ + const; minimizing it maximizes −F.
        let (kappa, g) = match self {
            QuadraticModel::Coupled {
                rho,
                coupling,
                lin_w,
                ..
            } => (
                *rho,
                v.iter().zip(lin_w).map(|(vk, bk)| -(coupling * vk + bk)).collect::<Vec<_>>(),
            ),
            QuadraticModel::Bilinear {
                reg,
                second_moment,
                cross,
            } => {
                let av = Self::mat_vec(second_moment, v);
                (*reg, av.iter().zip(cross).map(|(a, m)| -(a + m)).collect())
            }
        };
        let w = maximize_isotropic(kappa, &g, radius_w);
        let val = if w.iter().any(|x| x.is_infinite()) {
            f64::NEG_INFINITY
        } else {
            self.value(&w, v)
        };
        (w, val)
    }

    /// Stationary point of the unconstrained objective, if the stationarity
    /// system is nonsingular.
    pub fn stationary_point(&self) -> Option<Point> {
        match self {
            QuadraticModel::Coupled {
                rho,
                coupling,
                lin_w,
                lin_v,
            } => {
                // Per coordinate: [ρ c; c −ρ][w; v] = [−b_w; b_v].
                let det = -rho * rho - coupling * coupling;
                if det == 0.0 {
                    return None;
                }
                let w = lin_w
                    .iter()
                    .zip(lin_v)
                    .map(|(bw, bv)| (rho * bw - coupling * bv) / det)
                    .collect();
                let v = lin_w
                    .iter()
                    .zip(lin_v)
                    .map(|(bw, bv)| (rho * bv + coupling * bw) / det)
                    .collect();
                Some(Point::new(w, v))
            }
            QuadraticModel::Bilinear {
                reg,
                second_moment,
                cross,
            } => {
                let d = cross.len();
                let mut m = DMatrix::<f64>::zeros(2 * d, 2 * d);
                let mut rhs = DVector::<f64>::zeros(2 * d);
                for i in 0..d {
                    m[(i, i)] = *reg;
                    m[(d + i, d + i)] = -*reg;
                    for j in 0..d {
                        m[(i, d + j)] = second_moment[i * d + j];
                        m[(d + i, j)] = second_moment[i * d + j];
                    }
                    rhs[i] = -cross[i];
                    rhs[d + i] = cross[i];
                }
                let sv = m.clone().singular_values();
                let (lo, hi) = (sv.min(), sv.max());
                if hi.is_nan() || hi <= 0.0 || lo <= 1e-12 * hi {
                    return None;
                }
                let sol = m.lu().solve(&rhs)?;
                let sol: Vec<f64> = sol.iter().copied().collect();
                Some(Point::from_flat(&sol, d))
            }
        }
    }
}

/// `argmax_{‖x‖ ≤ r} −½κ‖x‖² + ⟨g, x⟩` for `κ ≥ 0`.
fn maximize_isotropic(kappa: f64, g: &[f64], radius: f64) -> Vec<f64> {
    if kappa > 0.0 {
        let mut x: Vec<f64> = g.iter().map(|gk| gk / kappa).collect();
        project_ball_in_place(&mut x, radius);
        return x;
    }
    let gn = norm(g);
    if gn == 0.0 {
        return vec![0.0; g.len()];
    }
    if radius.is_infinite() {
        return vec![f64::INFINITY; g.len()];
    }
    g.iter().map(|gk| radius * gk / gn).collect()
}
