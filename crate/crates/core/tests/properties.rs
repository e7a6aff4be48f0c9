//! Randomized invariants of the maps, strategies and evaluators.

use num_complex::Complex64;
use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest, ProptestConfig};
use proptest::strategy::Strategy as Gen;
use spectator::analysis::{fixed_point, nc_coherence};
use spectator::bayes::{bayes_map, stats, MeasurementSetting, Outcome, StepPropagators};
use spectator::control::{greedy_objective, next_setting, GreedySearch, Strategy};
use spectator::engine::{run_exact_tree, run_monte_carlo, McOptions, Schedule, TreeOptions};
use spectator::linalg::{AVector, Mat2};
use spectator::rtp::{char_matrix, stationary_vector, NoiseParams};

fn params() -> impl Gen<Value = NoiseParams> {
    (0.2..5.0f64, 0.2..5.0f64, 0.01..1.0f64, 5.0..60.0f64)
        .prop_map(|(u, d, k, big)| NoiseParams::new(u, d, k, big).unwrap())
}

fn cplx() -> impl Gen<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn avector() -> impl Gen<Value = AVector> {
    (cplx(), cplx())
        .prop_filter("both components nonzero", |(a, b)| {
            a.norm() > 1e-3 && b.norm() > 1e-3
        })
        .prop_map(|(a, b)| AVector::new(a, b))
}

fn scalar() -> impl Gen<Value = Complex64> {
    cplx().prop_filter("nonzero", |c| c.norm() > 1e-2)
}

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

/// `Σ_Y w(Y)` over every record of a fixed schedule.
fn record_sum(
    a: AVector,
    steps: &[(f64, f64)],
    maps: &dyn Fn(f64, f64, Outcome) -> Mat2,
) -> Vec<AVector> {
    let mut level = vec![a];
    for &(theta, tau) in steps {
        level = level
            .iter()
            .flat_map(|a| Outcome::BOTH.map(|y| maps(theta, tau, y).apply(a)))
            .collect();
    }
    level
}

fn schedule_steps(max: usize) -> impl Gen<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.1..3.1f64, 0.005..0.3f64), 1..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcome_maps_sum_to_free_evolution(p in params(), theta in -3.1..3.1f64, tau in 0.001..2.0f64) {
        let s = MeasurementSetting::new(theta, tau).unwrap();
        let sum = bayes_map(&s, Outcome::Null, &p) + bayes_map(&s, Outcome::Click, &p);
        prop_assert!(close(&sum, &char_matrix(p.kappa, tau, &p).unwrap(), 1e-12));
    }

    #[test]
    fn record_probabilities_sum_to_one(p in params(), steps in schedule_steps(10)) {
        let maps = |theta: f64, tau: f64, y| StepPropagators::with_kappa(&0.0, &tau, &p).map(&theta, y);
        let leaves = record_sum(stationary_vector(&p), &steps, &maps);
        let total: Complex64 = leaves.iter().map(|a| a.total()).sum();
        prop_assert!((total - 1.0).norm() < 1e-9, "total {}", total);
        prop_assert!(leaves.iter().all(|a| a.total().re >= -1e-15));
    }

    #[test]
    fn deleting_a_measurement_never_helps(p in params(), steps in schedule_steps(6), pick in 0usize..6) {
        let pick = pick % steps.len();
        let a0 = stationary_vector(&p);
        let maps = |theta: f64, tau: f64, y| StepPropagators::new(&tau, &p).map(&theta, y);
        let full: f64 = record_sum(a0.clone(), &steps, &maps).iter().map(|a| a.total().norm()).sum();
        // the deleted step still lets time pass, with no outcome split
        let deleted = |theta: f64, tau: f64, y| {
            if theta.is_nan() {
                let m = char_matrix(p.kappa, tau, &p).unwrap();
                if y == Outcome::Null { m } else { m.scale(&Complex64::new(0.0, 0.0)) }
            } else {
                maps(theta, tau, y)
            }
        };
        let mut fewer = steps.clone();
        fewer[pick].0 = f64::NAN;
        let partial: f64 = record_sum(a0, &fewer, &deleted).iter().map(|a| a.total().norm()).sum();
        prop_assert!(full >= partial - 1e-12, "{} < {}", full, partial);
    }

    #[test]
    fn char_matrix_semigroup(p in params(), k in -30.0..30.0f64, t1 in 0.0..3.0f64, t2 in 0.0..3.0f64) {
        let whole = char_matrix(k, t1 + t2, &p).unwrap();
        let parts = &char_matrix(k, t2, &p).unwrap() * &char_matrix(k, t1, &p).unwrap();
        prop_assert!(close(&whole, &parts, 1e-10));
        prop_assert!(whole.m.iter().flatten().all(|z| z.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn zero_coupling_is_column_stochastic(p in params(), tau in 0.0..20.0f64) {
        let m = char_matrix(0.0, tau, &p).unwrap();
        for c in 0..2 {
            prop_assert!((m.get(0, c) + m.get(1, c) - 1.0).norm() < 1e-10);
            prop_assert!(m.get(0, c).im.abs() < 1e-12 && m.get(1, c).im.abs() < 1e-12);
        }
    }

    #[test]
    fn no_control_coherence_never_increases(p in params(), t in 0.0..20.0f64, dt in 0.0..2.0f64) {
        prop_assert!(nc_coherence(t + dt, &p).unwrap() <= nc_coherence(t, &p).unwrap() + 1e-14);
    }

    #[test]
    fn stats_are_scale_invariant(p in params(), a in avector(), c in scalar()) {
        let s1 = stats(&a, &p).unwrap();
        let s2 = stats(&a.scale(&c), &p).unwrap();
        prop_assert!((s1.zeta - s2.zeta).abs() < 1e-12);
        prop_assert!((s1.alpha.unwrap() - s2.alpha.unwrap()).abs() < 1e-9 * s1.alpha.unwrap().abs().max(1.0));
        prop_assert!((-1.0..=1.0).contains(&s1.zeta));
    }

    #[test]
    fn moaaar_decisions_are_scale_invariant(p in params(), a in avector(), c in scalar(), theta in 0.1..3.1f64) {
        for strategy in [Strategy::Moaaar { theta }, Strategy::MoaaarGeneral { theta, tau: 0.05 }] {
            prop_assert_eq!(next_setting(&strategy, &a, &p).unwrap(), next_setting(&strategy, &a.scale(&c), &p).unwrap());
        }
    }

    #[test]
    fn fixed_point_ignores_matrix_scale(p in params(), theta in 0.3..3.0f64, c in scalar()) {
        let f = bayes_map(&MeasurementSetting::new(theta, theta / p.big_k).unwrap(), Outcome::Null, &p);
        let (e1, l1) = fixed_point(&f).unwrap();
        let (e2, l2) = fixed_point(&f.scale(&c)).unwrap();
        prop_assert!((e1.clone() - e2.clone()).norm1() < 1e-9, "{:?} vs {:?}", e1, e2);
        prop_assert!((l1 * c - l2).norm() < 1e-9 * l2.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn greedy_is_scale_invariant(a in avector(), c in scalar()) {
        let p = NoiseParams::default();
        let g = Strategy::Greedy { search: GreedySearch::default() };
        prop_assert_eq!(next_setting(&g, &a, &p).unwrap(), next_setting(&g, &a.scale(&c), &p).unwrap());
        let (theta, tau) = (0.7, 0.04);
        let j1 = greedy_objective(&a, theta, tau, &p) * c.norm();
        let j2 = greedy_objective(&a.scale(&c), theta, tau, &p);
        prop_assert!((j1 - j2).abs() < 1e-12 * j1.max(1.0));
    }

    #[test]
    fn control_never_loses_to_no_control(p in params(), theta in 0.3..3.0f64, horizon in 0.05..0.6f64) {
        let nc = nc_coherence(horizon, &p).unwrap();
        for strategy in [
            Strategy::Moaaar { theta },
            Strategy::NonAdaptivePeriodic { theta },
            Strategy::MoaaarGeneral { theta, tau: horizon / 5.0 },
        ] {
            let s = Schedule::new(horizon, strategy, p).unwrap();
            let opts = TreeOptions { max_branches: 1 << 16, ..Default::default() };
            let Ok(r) = run_exact_tree(&s, &opts, &[horizon]) else { continue };
            prop_assert!(r.points[0].coherence >= nc - 1e-12, "{} {} < {}", strategy.name(), r.points[0].coherence, nc);
        }
    }

    #[test]
    fn monte_carlo_ignores_worker_count(seed in any::<u64>(), n in 1usize..600) {
        let s = Schedule::new(0.5, Strategy::default(), NoiseParams::default()).unwrap();
        let grid = [0.1, 0.25, 0.5];
        let base = run_monte_carlo(&s, &McOptions::new(n, seed).with_workers(1), &grid).unwrap();
        for workers in [2, 3, 8] {
            let other = run_monte_carlo(&s, &McOptions::new(n, seed).with_workers(workers), &grid).unwrap();
            for (x, y) in base.iter().zip(&other) {
                prop_assert_eq!(x.coherence.to_bits(), y.coherence.to_bits());
                prop_assert_eq!(x.std_error.to_bits(), y.std_error.to_bits());
            }
        }
    }
}

#[test]
fn greedy_objective_is_the_triangle_sum() {
    let p = NoiseParams::default();
    let a = stationary_vector(&p);
    let s = MeasurementSetting::new(1.2, 0.07).unwrap();
    let j: f64 = Outcome::BOTH
        .iter()
        .map(|&y| bayes_map(&s, y, &p).apply(&a).total().norm())
        .sum();
    assert!((greedy_objective(&a, 1.2, 0.07, &p) - j).abs() < 1e-14);
}
