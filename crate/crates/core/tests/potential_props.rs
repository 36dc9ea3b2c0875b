use proptest::prelude::*;
use spacing_core::potential::{Bump, Potential, PotentialSpec};

fn corpus() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::zero(),
        PotentialSpec::exponential(4.0, 1.0),
        PotentialSpec::exponential(-1.5, 0.3).with_support_start(1.25),
        PotentialSpec::power(1.0, 0.5),
        PotentialSpec::power(-2.0, 1.0),
        PotentialSpec::power(1.0, 1.7),
        PotentialSpec::wigner_von_neumann(1.0, 1.0, 1.0),
        PotentialSpec::wigner_von_neumann(2.0, 2.0, 0.75),
        PotentialSpec::step_power(1.0, 0.5),
        PotentialSpec::step_values(vec![1.0, -2.0, 0.5, 0.0, 3.0]),
        PotentialSpec::bumps(vec![
            Bump {
                start: 0.5,
                width: 1.0,
                height: 2.0,
            },
            Bump {
                start: 3.0,
                width: 0.25,
                height: -4.0,
            },
        ]),
        PotentialSpec::random_decaying(1.0, 0.5, 11),
    ]
}

/// Composite Simpson, split at the zeros of sin(ωx), 10^5 panels overall.
fn simpson_wvn(c: f64, omega: f64, gamma: f64, x: f64) -> f64 {
    let f = |t: f64| (c * (omega * t).sin() / (1.0 + t).powf(gamma)).abs();
    let period = std::f64::consts::PI / omega;
    let mut edges = vec![0.0];
    let mut m = 1.0;
    while m * period < x {
        edges.push(m * period);
        m += 1.0;
    }
    edges.push(x);
    let total_panels = 100_000usize;
    edges
        .windows(2)
        .map(|w| {
            let n = (((w[1] - w[0]) / x * total_panels as f64).ceil() as usize).max(2) & !1usize;
            let n = n.max(2);
            let h = (w[1] - w[0]) / n as f64;
            let mut s = f(w[0]) + f(w[1]);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(w[0] + i as f64 * h);
            }
            s * h / 3.0
        })
        .sum()
}

#[test]
fn wigner_von_neumann_mass_matches_composite_rule() {
    let p = Potential::new(PotentialSpec::wigner_von_neumann(1.0, 1.0, 1.0)).unwrap();
    let reference = simpson_wvn(1.0, 1.0, 1.0, 20.0);
    let got = p.cumulative_abs(20.0).unwrap();
    assert!(((got - reference) / reference).abs() < 1e-10, "{got} vs {reference}");
}

#[test]
fn cache_agrees_with_fresh_quadrature() {
    for spec in corpus() {
        let p = Potential::new(spec.clone()).unwrap();
        for x in [0.7, 3.0, 17.5, 64.0] {
            let cached = p.cumulative_abs(x).unwrap();
            let fresh = p.cumulative_abs_quadrature(x).unwrap();
            let scale = fresh.abs().max(1e-300);
            assert!(
                (cached - fresh).abs() <= 1e-10 * scale || (cached - fresh).abs() < 1e-14,
                "{}: x={x}: {cached} vs {fresh}",
                spec.family.tag()
            );
        }
    }
}

#[test]
fn cumulative_mass_is_locally_finite_and_starts_at_zero() {
    for spec in corpus() {
        let p = Potential::new(spec).unwrap();
        assert_eq!(p.cumulative_abs(0.0).unwrap(), 0.0);
        assert!(p.cumulative_abs(1e3).unwrap().is_finite());
        assert!(p.cumulative_abs(-1.0).is_err());
    }
}

#[test]
fn step_sequence_partial_sum_at_400() {
    let p = Potential::new(PotentialSpec::step_power(1.0, 0.5)).unwrap();
    let direct: f64 = (1..=400).map(|n| (n as f64).powf(-0.5)).sum();
    assert!((p.cumulative_abs(400.0).unwrap() - direct).abs() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cumulative_mass_is_monotone(idx in 0usize..12, x1 in 0.0f64..80.0, dx in 0.0f64..40.0) {
        let p = Potential::new(corpus()[idx].clone()).unwrap();
        let a = p.cumulative_abs(x1).unwrap();
        let b = p.cumulative_abs(x1 + dx).unwrap();
        prop_assert!(a <= b + 1e-13 * b.abs(), "I({x1}) = {a} > I({}) = {b}", x1 + dx);
    }

    #[test]
    fn cell_masses_are_increments(idx in 0usize..12, n in 0usize..200) {
        let p = Potential::new(corpus()[idx].clone()).unwrap();
        let v = p.cell_mass(n).unwrap();
        let diff = p.cumulative_abs((n + 1) as f64).unwrap() - p.cumulative_abs(n as f64).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((v - diff).abs() <= 1e-9 * v.abs().max(1e-300) || (v - diff).abs() < 1e-13,
            "v_{n} = {v}, increment {diff}");
    }

    #[test]
    fn closed_forms_match_forced_quadrature(
        c in -5.0f64..5.0, lambda in 0.05f64..3.0, gamma in 0.1f64..2.5,
        s in 0.0f64..3.0, x in 0.1f64..60.0,
    ) {
        for spec in [
            PotentialSpec::exponential(c, lambda).with_support_start(s),
            PotentialSpec::power(c, gamma).with_support_start(s),
        ] {
            let p = Potential::new(spec).unwrap();
            let closed = p.cumulative_abs(x).unwrap();
            let quad = p.cumulative_abs_quadrature(x).unwrap();
            prop_assert!((closed - quad).abs() <= 1e-9 * closed.abs() || (closed - quad).abs() < 1e-13,
                "{closed} vs {quad}");
        }
    }

    #[test]
    fn spec_documents_round_trip(idx in 0usize..12, s in 0.0f64..10.0) {
        let spec = corpus()[idx].clone().with_support_start(s);
        let text = serde_json::to_string(&spec).unwrap();
        let back: PotentialSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}
