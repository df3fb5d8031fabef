use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataio::gen_synthetic;
use crate::vecmath::{dist_sq, norm, norm_sq};

fn quad_setup(n: usize, seed: u64) -> (MinimaxProblem, Dataset) {
    let data = gen_synthetic(&SyntheticSpec::quadratic(3, n, seed)).unwrap();
    let p = MinimaxProblem::quadratic_scsc(1.0, 3, &data, 10.0, 10.0).unwrap();
    (p, data)
}

fn bilinear_setup(reg: f64) -> (MinimaxProblem, Dataset) {
    let data = gen_synthetic(&SyntheticSpec::gaussian(3, 80, 4)).unwrap();
    let p = MinimaxProblem::bilinear_cc(&data, reg, 2.0, 2.0).unwrap();
    (p, data)
}

fn auc_setup() -> (MinimaxProblem, Dataset) {
    let data = gen_synthetic(&SyntheticSpec::gaussian(4, 120, 9)).unwrap();
    let p = MinimaxProblem::auc_solam(&data, None, 5.0, 50.0).unwrap();
    (p, data)
}

fn robust_setup() -> (MinimaxProblem, Dataset) {
    let data = gen_synthetic(&SyntheticSpec::heavy_tailed(2.5, 60, 3)).unwrap();
    let p = MinimaxProblem::robust_mean(&data, 5.0, 5.0).unwrap();
    (p, data)
}

fn iterative() -> InnerSolverConfig {
    InnerSolverConfig { prefer_closed_form: false, ..Default::default() }
}

fn random_points(p: &MinimaxProblem, k: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| p.random_feasible_point(&mut rng, 1.0)).collect()
}

#[test]
fn gap_vanishes_at_the_empirical_saddle() {
    let (p, data) = quad_setup(50, 1);
    let saddle = p.empirical_saddle(&data).unwrap().point;
    let g = empirical_weak_pd_gap(&p, &data, &saddle, &InnerSolverConfig::default()).unwrap();
    assert!(g.gap.abs() <= 1e-8, "{}", g.gap);
    assert!(g.reliable);
    assert_eq!(g.residual(), 0.0);

    let (p, data) = bilinear_setup(0.3);
    let saddle = p.empirical_saddle(&data).unwrap().point;
    let g = empirical_weak_pd_gap(&p, &data, &saddle, &InnerSolverConfig::default()).unwrap();
    assert!(g.gap.abs() <= 1e-8, "{}", g.gap);
}

#[test]
fn inner_solver_matches_closed_forms() {
    for (p, data) in [quad_setup(40, 2), bilinear_setup(0.0), bilinear_setup(0.5)] {
        for pt in random_points(&p, 10, 7) {
            let exact = empirical_weak_pd_gap(&p, &data, &pt, &InnerSolverConfig::default()).unwrap();
            let iter = empirical_weak_pd_gap(&p, &data, &pt, &iterative()).unwrap();
            assert_eq!(iter.sup.method, EvalMethod::InnerSolver);
            assert!(iter.reliable);
            assert!((exact.sup.value - iter.sup.value).abs() <= 1e-6, "{} vs {}", exact.sup.value, iter.sup.value);
            assert!((exact.inf.value - iter.inf.value).abs() <= 1e-6);
            assert!(dist_sq(&exact.sup.arg, &iter.sup.arg).sqrt() <= 1e-6);
            assert!(dist_sq(&exact.inf.arg, &iter.inf.arg).sqrt() <= 1e-6);
        }
    }
}

#[test]
fn auc_alpha_is_stationary() {
    let (p, data) = auc_setup();
    for pt in random_points(&p, 10, 3) {
        let r = sup_v(&p, &data, &pt.w, &InnerSolverConfig::default()).unwrap();
        assert_eq!(r.method, EvalMethod::ClosedForm);
        assert!(r.arg[0].abs() < p.radius_v);
        let (_, gv) = p.empirical_grad(&Point::new(pt.w.clone(), r.arg.clone()), &data).unwrap();
        assert!(gv[0].abs() <= 1e-12, "{}", gv[0]);
        let it = sup_v(&p, &data, &pt.w, &iterative()).unwrap();
        assert!((it.value - r.value).abs() <= 1e-6 && (it.arg[0] - r.arg[0]).abs() <= 1e-6);
    }
}

#[test]
fn auc_alpha_respects_the_dual_ball() {
    let data = gen_synthetic(&SyntheticSpec::gaussian(4, 120, 9)).unwrap();
    let p = MinimaxProblem::auc_solam(&data, None, 5.0, 1e-3).unwrap();
    let w = vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
    let r = sup_v(&p, &data, &w, &InnerSolverConfig::default()).unwrap();
    assert!((r.arg[0].abs() - 1e-3).abs() < 1e-15);
}

#[test]
fn auc_inner_minimum_is_first_order_optimal() {
    let (p, data) = auc_setup();
    for pt in random_points(&p, 5, 11) {
        let r = inf_w(&p, &data, &pt.v, &InnerSolverConfig::default()).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        let (gw, _) = p.empirical_grad(&Point::new(r.arg.clone(), pt.v.clone()), &data).unwrap();
        let on_boundary = (norm(&r.arg) - p.radius_w).abs() < 1e-6;
        if on_boundary {
            // gradient must point inward: −∇ is a nonnegative multiple of w
            let cos = -crate::vecmath::dot(&gw, &r.arg) / (norm(&gw) * norm(&r.arg));
            assert!(cos > 1.0 - 1e-6, "{cos}");
        } else {
            assert!(norm(&gw) <= 1e-6, "{}", norm(&gw));
        }
        assert!((r.value - p.mean_value(&r.arg, &pt.v, &data)).abs() < 1e-12);
    }
}

#[test]
fn weak_gap_is_nonnegative_everywhere() {
    let cfg = InnerSolverConfig::default();
    for (p, data) in [quad_setup(30, 5), bilinear_setup(0.1), auc_setup(), robust_setup()] {
        for pt in random_points(&p, 20, 13) {
            let g = empirical_weak_pd_gap(&p, &data, &pt, &cfg).unwrap();
            assert!(g.gap >= -1e-8, "{} at {:?}", g.gap, pt);
            let f = p.empirical_value(&pt, &data).unwrap();
            assert!(g.sup.value >= f - 1e-8 && g.inf.value <= f + 1e-8);
        }
    }
}

#[test]
fn primal_risk_dominates_the_objective() {
    let cfg = InnerSolverConfig::default();
    for (p, data) in [quad_setup(30, 6), bilinear_setup(0.0), auc_setup(), robust_setup()] {
        let w = random_points(&p, 1, 17)[0].w.clone();
        let r = primal_risk(&p, &w, RiskTarget::Empirical(&data), &cfg).unwrap();
        for pt in random_points(&p, 100, 19) {
            let f = p.mean_value(&w, &pt.v, &data);
            assert!(r.value >= f - 1e-9, "{} < {f}", r.value);
        }
    }
}

#[test]
fn robust_search_beats_a_dense_grid() {
    let (p, data) = robust_setup();
    let cfg = InnerSolverConfig::default();
    for pt in random_points(&p, 5, 23) {
        let g = empirical_weak_pd_gap(&p, &data, &pt, &cfg).unwrap();
        assert!(!g.reliable);
        assert_eq!(g.sup.method, EvalMethod::MultiStart);
        let grid: Vec<f64> = (0..=20_000).map(|k| -5.0 + 10.0 * k as f64 / 20_000.0).collect();
        let best_sup = grid.iter().map(|&v| p.mean_value(&pt.w, &[v], &data)).fold(f64::MIN, f64::max);
        let best_inf = grid.iter().map(|&w| p.mean_value(&[w], &pt.v, &data)).fold(f64::MAX, f64::min);
        assert!(g.sup.value >= best_sup - 1e-6, "{} vs {best_sup}", g.sup.value);
        assert!(g.inf.value <= best_inf + 1e-6, "{} vs {best_inf}", g.inf.value);
    }
}

#[test]
fn zero_moments_give_the_pure_quadratic() {
    let (p, _) = quad_setup(10, 1);
    let spec = SyntheticSpec::quadratic(3, 10, 0);
    let pt = Point::new(vec![1.0, -2.0, 0.5], vec![0.3, 0.0, 4.0]);
    let f = population_risk(&p, &pt, PopulationSource::Analytic(&spec)).unwrap();
    let expected = 0.5 * (norm_sq(&pt.w) - norm_sq(&pt.v));
    assert!((f.value - expected).abs() < 1e-14);
    assert_eq!((f.stderr, f.method), (0.0, EvalMethod::Analytic));

    let r = primal_risk(&p, &[0.0; 3], RiskTarget::Population(PopulationSource::Analytic(&spec)), &iterative()).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.arg, vec![0.0; 3]);
}

#[test]
fn analytic_population_needs_known_moments() {
    let (p, _) = robust_setup();
    let spec = SyntheticSpec::heavy_tailed(2.5, 10, 0);
    let pt = Point::zeros(1, 1);
    assert!(matches!(
        population_risk(&p, &pt, PopulationSource::Analytic(&spec)),
        Err(Error::Unsupported(_))
    ));
    let (p, _) = auc_setup();
    let spec = SyntheticSpec::gaussian(4, 10, 0);
    assert!(matches!(population_model(&p, &spec), Err(Error::Unsupported(_))));
    let (p, _) = quad_setup(10, 1);
    assert!(matches!(population_model(&p, &SyntheticSpec::quadratic(2, 10, 0)), Err(Error::InvalidArgument(_))));
}

#[test]
fn monte_carlo_stderr_scales_like_inverse_root_m() {
    let (p, _) = quad_setup(10, 1);
    let spec = SyntheticSpec::quadratic(3, 1, 0);
    let pt = Point::new(vec![1.0, 2.0, -1.0], vec![0.5, -0.5, 2.0]);
    let a = population_risk(&p, &pt, PopulationSource::MonteCarlo { spec: &spec, m: 20_000, seed: 1 }).unwrap();
    let b = population_risk(&p, &pt, PopulationSource::MonteCarlo { spec: &spec, m: 80_000, seed: 2 }).unwrap();
    let ratio = b.stderr / a.stderr;
    assert!((ratio - 0.5).abs() <= 0.1, "{ratio}");
}

#[test]
fn monte_carlo_agrees_with_analytic() {
    let (p, _) = quad_setup(10, 1);
    let mut spec = SyntheticSpec::quadratic(3, 1, 0);
    if let SyntheticFamily::QuadraticSaddle { shift, .. } = &mut spec.family {
        *shift = 0.4;
    }
    let pt = Point::new(vec![1.0, 2.0, -1.0], vec![0.5, -0.5, 2.0]);
    let exact = population_risk(&p, &pt, PopulationSource::Analytic(&spec)).unwrap();
    let mc = population_risk(&p, &pt, PopulationSource::MonteCarlo { spec: &spec, m: 1_000_000, seed: 5 }).unwrap();
    assert!((exact.value - mc.value).abs() <= 4.0 * mc.stderr, "{} vs {} ± {}", exact.value, mc.value, mc.stderr);

    let (p, _) = bilinear_setup(0.2);
    let spec = SyntheticSpec::gaussian(3, 1, 0);
    let pt = Point::new(vec![0.3, -0.2, 0.1], vec![-0.4, 0.5, 0.2]);
    let exact = population_risk(&p, &pt, PopulationSource::Analytic(&spec)).unwrap();
    let mc = population_risk(&p, &pt, PopulationSource::MonteCarlo { spec: &spec, m: 1_000_000, seed: 6 }).unwrap();
    assert!((exact.value - mc.value).abs() <= 4.0 * mc.stderr, "{} vs {} ± {}", exact.value, mc.value, mc.stderr);
}

#[test]
fn monte_carlo_is_deterministic() {
    let spec = SyntheticSpec::gaussian(2, 1, 0);
    let a = monte_carlo_sample(&spec, 25_001, 3).unwrap();
    let b = monte_carlo_sample(&spec, 25_001, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 25_001);
    assert!(matches!(monte_carlo_sample(&spec, 0, 3), Err(Error::Config { .. })));
}

#[test]
fn training_set_as_population_gives_zero_gap() {
    let cfg = InnerSolverConfig::default();
    for (p, data) in [quad_setup(30, 8), bilinear_setup(0.2), auc_setup(), robust_setup()] {
        let pt = random_points(&p, 1, 29).remove(0);
        let rep = generalization_gap(&p, &data, PopulationSource::Holdout(&data), &pt, &cfg).unwrap();
        assert_eq!(rep.gap_plain.value, 0.0);
        assert_eq!(rep.weak_pd_gen.value, 0.0);
        assert!(rep.decomposition_residual() <= 1e-12);
        assert_eq!(rep.strong_pd_emp.value, rep.weak_pd_emp.value);
        assert!(rep.primal_emp.value >= rep.f_emp.value - 1e-9);
    }
}

#[test]
fn report_against_analytic_population() {
    let (p, data) = quad_setup(200, 31);
    let spec = SyntheticSpec::quadratic(3, 1, 0);
    let pt = random_points(&p, 1, 37).remove(0);
    let rep = generalization_gap(&p, &data, PopulationSource::Analytic(&spec), &pt, &InnerSolverConfig::default()).unwrap();
    assert!(rep.decomposition_residual() <= 1e-12 * rep.weak_pd_pop.value.abs().max(1.0));
    assert_eq!(rep.strong_pd_emp.value, rep.weak_pd_emp.value);
    assert_eq!(rep.f_pop.method, "analytic");
    assert!(rep.weak_pd_pop.value >= 0.0);
    let rows = rep.rows();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0].metric, "F_emp");
    assert!(rows.iter().all(|r| !r.method.ends_with("unreliable")));
}

#[test]
fn robust_report_flags_unreliable_entries() {
    let (p, data) = robust_setup();
    let pt = Point::new(vec![0.1], vec![-0.2]);
    let rep = generalization_gap(&p, &data, PopulationSource::Holdout(&data), &pt, &InnerSolverConfig::default()).unwrap();
    assert!(!rep.weak_pd_emp.reliable);
    assert!(rep.rows().iter().any(|r| r.method == "multi-start:unreliable"));
}

#[test]
fn repeat_estimate_reduces_to_the_pointwise_gap() {
    let (p, data) = quad_setup(50, 41);
    let spec = SyntheticSpec::quadratic(3, 1, 0);
    let pt = random_points(&p, 1, 43).remove(0);
    let cfg = InnerSolverConfig::default();
    let single = weak_pd_risk_over_repeats(&p, PopulationSource::Analytic(&spec), std::slice::from_ref(&pt), &cfg).unwrap();
    let rep = generalization_gap(&p, &data, PopulationSource::Analytic(&spec), &pt, &cfg).unwrap();
    assert!((single.value - rep.weak_pd_pop.value).abs() < 1e-12);

    let (p, data) = bilinear_setup(0.5);
    let pt = random_points(&p, 1, 47).remove(0);
    let est = weak_pd_risk_over_repeats(&p, PopulationSource::Holdout(&data), std::slice::from_ref(&pt), &cfg).unwrap();
    let gap = empirical_weak_pd_gap(&p, &data, &pt, &cfg).unwrap();
    assert!((est.value - gap.gap).abs() <= 1e-6, "{} vs {}", est.value, gap.gap);
    assert_eq!(est.candidates.len(), 2);
}

#[test]
fn repeat_estimate_exact_for_quadratic_models() {
    // Brute-force oracle: maximize the repeat mean over a dense grid of v.
    let data = gen_synthetic(&SyntheticSpec::quadratic(1, 30, 2)).unwrap();
    let p = MinimaxProblem::quadratic_scsc(1.0, 1, &data, 3.0, 3.0).unwrap();
    let spec = SyntheticSpec::quadratic(1, 1, 0);
    let outs = vec![Point::new(vec![0.4], vec![-1.0]), Point::new(vec![-1.2], vec![0.7]), Point::new(vec![2.0], vec![0.1])];
    let est = weak_pd_risk_over_repeats(&p, PopulationSource::Analytic(&spec), &outs, &InnerSolverConfig::default()).unwrap();
    let model = population_model(&p, &spec).unwrap();
    let grid: Vec<f64> = (0..=60_000).map(|k| -3.0 + 6.0 * k as f64 / 60_000.0).collect();
    let mean = |f: &dyn Fn(&Point) -> f64| outs.iter().map(f).sum::<f64>() / 3.0;
    let sup = grid.iter().map(|&v| mean(&|o| model.value(&o.w, &[v]))).fold(f64::MIN, f64::max);
    let inf = grid.iter().map(|&w| mean(&|o| model.value(&[w], &o.v))).fold(f64::MAX, f64::min);
    assert!((est.value - (sup - inf)).abs() < 1e-8, "{} vs {}", est.value, sup - inf);
}

#[test]
fn pl_check_with_exact_saddle_has_no_distance_term() {
    let spec = ProblemSpec::new(ProblemKind::QuadraticScsc);
    let pop = SyntheticSpec::quadratic(2, 50, 0);
    let rep = verify_pl_gap(
        &spec,
        &pop,
        40,
        |r| gen_synthetic(&pop.with_seed(1000 + r as u64)),
        |p, d, _| Ok(p.empirical_saddle(d)?.point),
    )
    .unwrap();
    assert!(rep.distance_term < 1e-12);
    assert!(rep.holds(), "{rep:?}");
    let expected = 2.0 * rep.lipschitz.powi(2) / 50.0 + rep.distance_term;
    assert!((rep.rhs - expected).abs() <= 1e-12 * expected);
}

#[test]
fn pl_check_counts_the_distance_term() {
    let spec = ProblemSpec::new(ProblemKind::QuadraticScsc);
    let pop = SyntheticSpec::quadratic(2, 50, 0);
    let rep = verify_pl_gap(
        &spec,
        &pop,
        10,
        |r| gen_synthetic(&pop.with_seed(r as u64)),
        |p, d, _| {
            let mut s = p.empirical_saddle(d)?.point;
            s.w[0] += 0.1;
            Ok(s)
        },
    )
    .unwrap();
    assert!((rep.distance_term - 2.0 * rep.lipschitz * 0.1).abs() < 1e-9);
}

#[test]
fn pl_check_rejects_other_families() {
    let spec = ProblemSpec::new(ProblemKind::BilinearCc);
    let pop = SyntheticSpec::gaussian(2, 50, 0);
    let r = verify_pl_gap(&spec, &pop, 10, |_| gen_synthetic(&pop), |p, _, _| Ok(Point::zeros(p.primal_dim, p.dual_dim)));
    assert!(matches!(r, Err(Error::Unsupported(_))));
}

#[test]
fn dimension_mismatches_are_rejected() {
    let (p, data) = quad_setup(10, 1);
    assert!(sup_v(&p, &data, &[0.0; 2], &InnerSolverConfig::default()).is_err());
    assert!(inf_w(&p, &data, &[0.0; 4], &InnerSolverConfig::default()).is_err());
    let bad = InnerSolverConfig { max_iters: 0, ..Default::default() };
    assert!(matches!(sup_v(&p, &data, &[0.0; 3], &bad), Err(Error::Config { .. })));
}
