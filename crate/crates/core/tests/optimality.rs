mod common;

use common::rng;
use metrodose::closed_form::{
    curative_fixed_n, curative_optimal, feasible_n_range_curative, palliative_fixed_n, palliative_n_bounds,
    palliative_optimal, phi1, phi2, PalliativeCase,
};
use metrodose::nlp::project_simplex_box;
use metrodose::objective::{log_f1, log_f1_hat};
use metrodose::presets;
use metrodose::scheduler::{capacity, expand_pattern, Pattern};
use metrodose::tables::Setup;
use metrodose::{DoseBounds, PalliativeTarget};
use rand::Rng;

const K2T: f64 = 90.0;

fn reference_t_r_tilde() -> f64 {
    PalliativeTarget::new(&presets::glioma_tumor(), &presets::tmz_drug(), 210.0, presets::L_STAR_REL)
        .unwrap()
        .t_r_tilde
}

fn table_patterns() -> [(f64, &'static str); 4] {
    [(150.0, "7/14d"), (100.0, "21/28d"), (75.0, "21/28d"), (50.0, "28/28d")]
}

#[test]
fn equal_doses_dominate_random_splits() {
    let mut rng = rng(21);
    for n in [2usize, 5, 10, 40] {
        for _ in 0..500 {
            let total = n as f64 * rng.gen_range(60.0..190.0);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..300.0)).collect();
            let d = project_simplex_box(&v, total, 50.0, 200.0).unwrap();
            let bound = n as f64 * (total / (n as f64 * K2T)).ln_1p();
            let value = log_f1_hat(K2T, &d);
            assert!(value <= bound + 1e-12, "n = {n}: {value} > {bound}");
            let spread = d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - d.iter().copied().fold(f64::INFINITY, f64::min);
            if spread > 1e-6 {
                assert!(value < bound, "unequal doses reached the bound");
            } else {
                assert!((value - bound).abs() <= 1e-12 * bound.max(1.0));
            }
        }
    }
}

#[test]
fn phi_functions_are_strictly_monotone_on_log_grids() {
    let grid: Vec<f64> = (0..=700).map(|k| 10f64.powf(-3.0 + k as f64 * 0.01)).collect();
    for w in grid.windows(2) {
        assert!(phi1(w[1]).unwrap() > phi1(w[0]).unwrap(), "phi1 at {}", w[0]);
        // e^{1/x} overflows below x ≈ 1/709.
        if w[0] >= 1e-2 {
            assert!(phi2(w[1]).unwrap() < phi2(w[0]).unwrap(), "phi2 at {}", w[0]);
        }
    }
}

#[test]
fn equal_split_objective_grows_and_target_total_shrinks_with_n() {
    let (total, target) = (5750.0, reference_t_r_tilde());
    let curative = |n: usize| n as f64 * (total / (n as f64 * K2T)).ln_1p();
    let palliative = |n: usize| n as f64 * K2T * (target / n as f64).exp_m1();
    for n in 1..10_000 {
        assert!(curative(n + 1) > curative(n), "curative at {n}");
        assert!(palliative(n + 1) < palliative(n), "palliative at {n}");
    }
}

#[test]
fn curative_selection_beats_every_enumerated_n() {
    for (d_min, label) in table_patterns().into_iter().chain([(100.0, "5/28d")]) {
        let bounds = presets::curative_bounds(d_min);
        let cap = capacity(&label.parse::<Pattern>().unwrap(), 210.0, 0.0);
        for cap in [None, Some(cap)] {
            let best = curative_optimal(&bounds, K2T, cap).unwrap();
            let range = feasible_n_range_curative(&bounds).unwrap().capped(cap);
            for n in range.iter() {
                let plan = curative_fixed_n(&bounds, n, K2T).unwrap();
                assert!(best.objective_log_f1_hat >= plan.objective_log_f1_hat, "d_min {d_min}, n {n}");
            }
            assert!(range.contains(best.n));
        }
    }
}

#[test]
fn palliative_selection_beats_every_enumerated_candidate() {
    let target = reference_t_r_tilde();
    for d_min in [150.0, 100.0, 75.0, 50.0] {
        let bounds = presets::palliative_bounds(d_min);
        let best = palliative_optimal(target, K2T, &bounds, None).unwrap();
        let nb = palliative_n_bounds(target, K2T, &bounds).unwrap();
        let mut cheapest = nb.n_max as f64 * d_min;
        for n in nb.n_min..nb.n_max {
            let plan = palliative_fixed_n(target, K2T, n, &bounds).unwrap();
            assert!(plan.dose >= d_min && plan.dose <= presets::D_MAX, "n {n}: dose {}", plan.dose);
            cheapest = cheapest.min(plan.total);
        }
        assert!(best.total <= cheapest * (1.0 + 1e-12), "d_min {d_min}: {} vs {cheapest}", best.total);
        assert!(matches!(best.case, PalliativeCase::A | PalliativeCase::B));
    }
}

#[test]
fn smaller_minimum_dose_never_hurts() {
    let target = reference_t_r_tilde();
    let grid: Vec<f64> = (0..=34).map(|k| 20.0 + 5.0 * k as f64).collect();
    let mut last_objective = f64::INFINITY;
    let mut last_total = 0.0;
    for &d_min in &grid {
        let cur = curative_optimal(&presets::curative_bounds(d_min), K2T, None).unwrap();
        assert!(cur.objective_log_f1_hat <= last_objective + 1e-12, "curative at d_min {d_min}");
        last_objective = cur.objective_log_f1_hat;
        let pal = palliative_optimal(target, K2T, &presets::palliative_bounds(d_min), None).unwrap();
        assert!(pal.total >= last_total - 1e-9, "palliative at d_min {d_min}");
        last_total = pal.total;
    }
}

#[test]
fn approximation_is_tight_on_reference_schedules() {
    let pk = presets::tmz_drug();
    let target = reference_t_r_tilde();
    let mut schedules: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let five = "5/28d".parse::<Pattern>().unwrap();
    for n in 29..=40 {
        schedules.push((expand_pattern(&five, n, 0.0), vec![5750.0 / n as f64; n]));
    }
    schedules.push((expand_pattern(&five, 30, 0.0), presets::usual_treatment_doses()));
    for n in 33..=40 {
        let dose = palliative_fixed_n(target, K2T, n, &presets::palliative_bounds(100.0)).unwrap().dose;
        schedules.push((expand_pattern(&five, n, 0.0), vec![dose; n]));
    }
    for (d_min, label) in table_patterns() {
        let setup = Setup::reference(d_min, label, true);
        let cur = curative_optimal(&setup.bounds, K2T, Some(setup.capacity())).unwrap();
        schedules.push((setup.times(cur.n), vec![cur.dose; cur.n]));
        let bounds = presets::palliative_bounds(d_min);
        let pal = palliative_optimal(target, K2T, &bounds, Some(setup.capacity())).unwrap();
        schedules.push((setup.times(pal.n), vec![pal.dose; pal.n]));
    }
    for (times, doses) in schedules {
        let exact = log_f1(&pk, &times, 210.0, &doses).unwrap();
        let approx = log_f1_hat(K2T, &doses);
        let rel = (exact - approx).abs() / exact.abs();
        assert!(rel < 1e-3, "N = {}: relative gap {rel}", doses.len());
    }
}

#[test]
fn target_level_reproduces_the_table_counts() {
    let t = reference_t_r_tilde();
    assert!((t - 38.17443).abs() < 1e-4, "{t}");
    let nb = palliative_n_bounds(t, K2T, &presets::palliative_bounds(100.0)).unwrap();
    assert_eq!((nb.n_min, nb.n_max), (33, 52));
}

#[test]
fn feasible_range_is_exact_at_integer_quotients() {
    let bounds = DoseBounds::new(50.0, 200.0, Some(5750.0)).unwrap();
    let range = feasible_n_range_curative(&bounds).unwrap();
    assert_eq!((range.lo, range.hi), (29, 115));
}
