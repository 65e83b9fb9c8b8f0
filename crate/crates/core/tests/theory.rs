use proptest::prelude::*;

use lgd_core::data::{FlipMap, NoiseKind};
use lgd_core::theory::{self, BoundsQuery, Condition, Pattern, Subset};

#[test]
fn shift_count_examples() {
    assert_eq!(theory::expected_true_after_shift(9000.0, 10), 1000.0);
    assert_eq!(theory::expected_true_after_shift(0.0, 7), 0.0);
}

#[test]
fn eta_bounds() {
    assert!((theory::symmetric_eta_bound(10) - 0.9).abs() < 1e-15);
    assert!((theory::symmetric_eta_bound(2) - 0.5).abs() < 1e-15);
    assert!(theory::symmetric_eta_feasible(0.8, 10));
    assert!(!theory::symmetric_eta_feasible(0.9, 10));
    assert!(theory::asymmetric_feasible(0.46, 0.1));
    assert!(!theory::asymmetric_feasible(0.5, 0.1));
    assert!(!theory::asymmetric_feasible(0.3, 0.5));
}

#[test]
fn beta_bound_examples() {
    let b = theory::symmetric_beta_bound(0.6, 10).unwrap();
    assert!((b - 0.4 / (0.8 - 0.6 / 9.0)).abs() < 1e-12);
    assert!((theory::symmetric_beta_bound(1e-15, 7).unwrap() - 0.5).abs() < 1e-12);
    let d = theory::symmetric_beta_bound_delta(0.4, 10, 9.0).unwrap();
    assert!((d - 0.6 / (6.0 - 0.4 / 9.0)).abs() < 1e-12);
    assert!((theory::asymmetric_beta_bound_delta(9.0).unwrap() - 0.1).abs() < 1e-15);
    assert!((theory::asymmetric_beta_bound_delta(99.0).unwrap() - 0.01).abs() < 1e-15);
}

#[test]
fn feasibility_reports() {
    let q = |eta, beta| BoundsQuery { k: 10, eta, beta, delta: 9.0 };
    let ok = theory::check_config(&q(0.4, 0.1), NoiseKind::Symmetric);
    assert!(ok.feasible, "{}", ok.table());

    let asym = theory::check_config(&q(0.6, 0.1), NoiseKind::Asymmetric);
    assert!(!asym.feasible);
    assert!(asym.violated_conditions.contains(&Condition::AsymmetricEta));

    let high = theory::check_config(&q(0.95, 0.1), NoiseKind::Symmetric);
    assert_eq!(high.violated_conditions, vec![Condition::SymmetricEta]);

    // raw bound above 1 at eta=0.8 with a loose delta is kept and clamped
    let loose = theory::check_config(&BoundsQuery { k: 10, eta: 0.8, beta: 0.1, delta: 1.0 }, NoiseKind::Symmetric);
    assert!(loose.raw_beta_bound_delta.is_some());
    assert!(loose.beta_bound_basic.unwrap() <= 1.0);
}

#[test]
fn symmetric_census_example() {
    let c = theory::pattern_census_symmetric(1000.0, 0.6, 0.1, 10).unwrap();
    assert!((c.after(Subset::Selected, Pattern::Chaos) - 53.333_333).abs() < 1e-3);
    assert!((c.after(Subset::Selected, Pattern::RegularShifted) - 40.0).abs() < 1e-9);
    assert!((c.after(Subset::Selected, Pattern::Clean) - 6.666_667).abs() < 1e-3);
    let empty = theory::pattern_census_symmetric(1000.0, 0.6, 0.0, 10).unwrap();
    assert_eq!(empty.after(Subset::Selected, Pattern::Chaos), 0.0);
    assert!((empty.after(Subset::Leftover, Pattern::Clean) - 400.0).abs() < 1e-9);
}

#[test]
fn asymmetric_census_example() {
    let map = FlipMap::cyclic(10, 2).unwrap();
    let c = theory::pattern_census_asymmetric(1000.0, 0.3, 0.1, &map).unwrap();
    let cells = [
        (Subset::Selected, Pattern::ShiftedPolluted, 30.0),
        (Subset::Selected, Pattern::ShiftedClean, 70.0),
        (Subset::Leftover, Pattern::Polluted, 270.0),
        (Subset::Leftover, Pattern::Clean, 630.0),
    ];
    for (s, p, v) in cells {
        assert!((c.after(s, p) - v).abs() < 1e-9, "{s:?} {p:?}");
    }
    let colliding = FlipMap::cyclic(10, 1).unwrap();
    assert!(theory::pattern_census_asymmetric(1000.0, 0.3, 0.1, &colliding).is_err());
}

proptest! {
    #[test]
    fn delta_bound_decreases(k in 2usize..30, frac in 0.0f64..0.99, d1 in 1.0f64..50.0, step in 0.01f64..10.0) {
        let eta = frac * (k - 1) as f64 / k as f64;
        let a = theory::symmetric_beta_bound_delta(eta, k, d1).unwrap();
        let b = theory::symmetric_beta_bound_delta(eta, k, d1 + step).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn delta_one_is_the_basic_bound(k in 2usize..30, frac in 0.0f64..0.99) {
        let eta = frac * (k - 1) as f64 / k as f64;
        prop_assert_eq!(
            theory::symmetric_beta_bound_delta(eta, k, 1.0).unwrap(),
            theory::symmetric_beta_bound(eta, k).unwrap()
        );
    }

    #[test]
    fn census_cells_sum_to_n(k in 2usize..30, eta in 0.0f64..0.99, beta in 0.0f64..0.99, n in 1.0f64..1e7) {
        let c = theory::pattern_census_symmetric(n, eta, beta, k).unwrap();
        prop_assert!((c.after_total() - n).abs() <= 1e-9 * n);
        prop_assert!((c.before_total() - n).abs() <= 1e-9 * n);
        // the identity written out term by term
        let km1 = (k - 1) as f64;
        let s = eta * beta * (k as f64 - 2.0) / km1 + (1.0 - eta) * beta + eta * beta / km1
            + eta * (1.0 - beta) + (1.0 - eta) * (1.0 - beta);
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_leftover_clean_dominates(eta in 0.0f64..0.4999, beta in 0.0f64..0.4999, k in 4usize..20) {
        let map = FlipMap::cyclic(k, 2).unwrap();
        let c = theory::pattern_census_asymmetric(1.0, eta, beta, &map).unwrap();
        let top = c.after(Subset::Leftover, Pattern::Clean);
        prop_assert!(top > c.after(Subset::Leftover, Pattern::Polluted));
        prop_assert!(top > c.after(Subset::Selected, Pattern::ShiftedClean));
        prop_assert!(top > c.after(Subset::Selected, Pattern::ShiftedPolluted));
    }

    #[test]
    fn refusal_matches_report(k in 2usize..15, eta in 0.0f64..0.99, beta in 0.001f64..0.6) {
        let q = BoundsQuery { k, eta, beta, delta: 9.0 };
        let r = theory::check_config(&q, NoiseKind::Symmetric);
        prop_assert_eq!(r.feasible, r.violated_conditions.is_empty());
    }
}
