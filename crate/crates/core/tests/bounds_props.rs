use std::f64::consts::PI;

use proptest::prelude::*;
use spacing_core::potential::{Potential, PotentialSpec};
use spacing_core::prufer::f_at;
use spacing_core::{
    bound_report, criterion_holds, fd_oracle_eigenvalues, h_of, verify_theorem, OracleConfig, VerifyOptions,
};

fn pot(spec: PotentialSpec) -> Potential {
    Potential::new(spec).unwrap()
}

fn corpus() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::zero(),
        PotentialSpec::exponential(4.0, 1.0),
        PotentialSpec::power(1.0, 0.5),
        PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0),
        PotentialSpec::step_power(1.0, 0.5),
        PotentialSpec::exponential(-3.0, 0.7),
        PotentialSpec::random_decaying(1.5, 0.5, 42),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn criterion_forces_a_full_turn_of_phase(
        idx in 0usize..7, alpha in 0.5f64..5.0, gap in 0.05f64..3.0, x in 2.0f64..80.0,
    ) {
        let p = pot(corpus()[idx].clone());
        let beta = alpha + gap;
        let c = criterion_holds(&p, alpha, beta, x).unwrap();
        if c.holds {
            let diff = f_at(&p, beta, x).unwrap() - f_at(&p, alpha, x).unwrap();
            prop_assert!(diff >= PI - 1e-7, "margin {} but phase gain {diff}", c.margin);
        }
    }

    #[test]
    fn windows_of_width_h_satisfy_the_criterion(
        idx in 0usize..7, a in 0.2f64..4.0, offset in 0.0f64..10.0, x in 0.5f64..500.0,
    ) {
        let p = pot(corpus()[idx].clone());
        let h = h_of(&p, a, x).unwrap();
        let alpha = a + offset;
        let c = criterion_holds(&p, alpha, alpha + h, x).unwrap();
        prop_assert!(c.margin >= -1e-12 * (h * x).max(1.0), "margin {}", c.margin);
    }

    #[test]
    fn x_times_h_stays_bounded_for_integrable_potentials(a in 0.3f64..3.0, x in 1.0f64..1e5) {
        // ∫|V| = 4 for the exponential, so X h(X) <= π + 8/a
        let p = pot(PotentialSpec::exponential(4.0, 1.0));
        let xh = x * h_of(&p, a, x).unwrap();
        prop_assert!(xh >= PI && xh <= PI + 8.0 / a + 1e-12);
    }
}

#[test]
fn window_counts_match_oracle_counts() {
    for spec in [
        PotentialSpec::exponential(4.0, 1.0),
        PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0),
        PotentialSpec::step_power(1.0, 0.5),
    ] {
        let p = pot(spec);
        let x = 10.0;
        let frag = verify_theorem(&p, 1.0, x, 4.0, 0.5).unwrap();
        let e_hi = 5.0f64.powi(2);
        let oracle = fd_oracle_eigenvalues(&p, x, 0.25, e_hi, &OracleConfig::for_window(x, e_hi)).unwrap();
        for w in &frag.windows {
            let expected = oracle.count_in(w.alpha, w.beta);
            assert_eq!(w.eigen_count as usize, expected, "window [{}, {}]", w.alpha, w.beta);
        }
        assert!(frag.violations.is_empty());
    }
}

#[test]
fn free_windows_hold_exactly_one_or_two() {
    let zero = pot(PotentialSpec::zero());
    let frag = verify_theorem(&zero, 0.5, 37.0, 6.0, 0.1).unwrap();
    assert!(frag.windows.iter().all(|w| (1..=2).contains(&w.eigen_count)));
    assert_eq!(frag.min_count, Some(1));
    assert!((frag.h - PI / 37.0).abs() < 1e-15);
}

#[test]
fn step_sequence_at_four_hundred() {
    let p = pot(PotentialSpec::step_power(1.0, 0.5));
    let report = bound_report(&p, 1.0, &[400.0], 6.0, &VerifyOptions::default()).unwrap();
    let mass: f64 = (1..=400).map(|n| (n as f64).powf(-0.5)).sum();
    let h = PI / 400.0 + 2.0 * mass / 400.0;
    assert!((report.h_values[0] - h).abs() < 1e-13);
    assert!((report.h_values[0] - 0.2007).abs() < 1e-4);
    assert!(report.passed());
    assert!(report.windows_checked > 80);
    assert_eq!(report.energy_window, "[alpha^2, beta^2]");
}

#[test]
fn report_serialises_with_its_potential() {
    let p = pot(PotentialSpec::exponential(4.0, 1.0));
    let report = bound_report(&p, 1.0, &[10.0, 20.0], 3.0, &VerifyOptions::default()).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let back: spacing_core::BoundReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.potential, *p.spec());
}
