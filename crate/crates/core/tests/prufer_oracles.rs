//! Prüfer phase against reference integrators that share no code with it.

use std::f64::consts::PI;

use proptest::prelude::*;
use spacing_core::potential::{Potential, PotentialSpec};
use spacing_core::prufer::{f_at, integrate_phase, phase_difference_bound, PhaseOptions};
use spacing_core::Tolerance;

/// Classical RK4 on the phase equation with a fixed step.
fn rk4_theta(v: impl Fn(f64) -> f64, k: f64, x_end: f64, h: f64) -> f64 {
    let rhs = |x: f64, th: f64| v(x) / (2.0 * k) * ((2.0 * (k * x + th)).cos() - 1.0);
    let n = (x_end / h).round() as usize;
    let h = x_end / n as f64;
    let mut th = 0.0;
    for i in 0..n {
        let x = i as f64 * h;
        let k1 = rhs(x, th);
        let k2 = rhs(x + 0.5 * h, th + 0.5 * h * k1);
        let k3 = rhs(x + 0.5 * h, th + 0.5 * h * k2);
        let k4 = rhs(x + h, th + h * k3);
        th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    th
}

/// Classical RK4 on `u'' = (V - k²) u`, `u(0) = 0`, `u'(0) = 1`.
fn rk4_u(v: impl Fn(f64) -> f64, k: f64, x_end: f64, h: f64) -> f64 {
    let rhs = |x: f64, y: [f64; 2]| [y[1], (v(x) - k * k) * y[0]];
    let n = (x_end / h).round() as usize;
    let h = x_end / n as f64;
    let mut y = [0.0, 1.0];
    for i in 0..n {
        let x = i as f64 * h;
        let add = |y: [f64; 2], s: f64, d: [f64; 2]| [y[0] + s * d[0], y[1] + s * d[1]];
        let k1 = rhs(x, y);
        let k2 = rhs(x + 0.5 * h, add(y, 0.5 * h, k1));
        let k3 = rhs(x + 0.5 * h, add(y, 0.5 * h, k2));
        let k4 = rhs(x + h, add(y, h, k3));
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y[0]
}

type Profile = Box<dyn Fn(f64) -> f64>;

fn exp_pot() -> Potential {
    Potential::new(PotentialSpec::exponential(4.0, 1.0)).unwrap()
}

#[test]
fn exponential_theta_matches_fixed_step_reference() {
    let p = exp_pot();
    let t = integrate_phase(&p, 2.0, 30.0, &PhaseOptions::default()).unwrap();
    let reference = rk4_theta(|x| 4.0 * (-x).exp(), 2.0, 30.0, 1e-5);
    assert!((t.theta_end - reference).abs() < 1e-8, "{} vs {reference}", t.theta_end);
    assert_eq!(t.f_end, 2.0 * 30.0 + t.theta_end);
}

#[test]
fn exponential_f_matches_fixed_step_reference() {
    let p = exp_pot();
    let f = f_at(&p, 1.0, 20.0).unwrap();
    let reference = 20.0 + rk4_theta(|x| 4.0 * (-x).exp(), 1.0, 20.0, 1e-5);
    assert!((f - reference).abs() < 1e-8, "{f} vs {reference}");
}

#[test]
fn amplitude_reconstructs_the_solution() {
    let cases: Vec<(PotentialSpec, Profile)> = vec![
        (
            PotentialSpec::exponential(4.0, 1.0),
            Box::new(|x: f64| 4.0 * (-x).exp()),
        ),
        (
            PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0),
            Box::new(|x: f64| 2.0 * (2.0 * x).sin() / (1.0 + x)),
        ),
    ];
    for (spec, v) in cases {
        let p = Potential::new(spec).unwrap();
        for k in [0.7, 1.9, 3.3] {
            let t = integrate_phase(&p, k, 12.0, &PhaseOptions::default()).unwrap();
            let u_ref = rk4_u(&v, k, 12.0, 2e-4);
            let scale = t.log_amplitude_end.exp();
            assert!(
                (t.u_end() - u_ref).abs() < 1e-8 * scale.max(1.0),
                "k={k}: {} vs {u_ref}",
                t.u_end()
            );
        }
    }
}

#[test]
fn phase_hits_pi_multiples_exactly_where_u_vanishes() {
    let p = exp_pot();
    let set = spacing_core::eigenvalues_in_window(&p, 12.0, 0.8, 2.5).unwrap();
    assert!(!set.is_empty());
    for &k in &set.eigen_momenta {
        let u = rk4_u(|x| 4.0 * (-x).exp(), k, 12.0, 1e-4);
        let t = integrate_phase(&p, k, 12.0, &PhaseOptions::default()).unwrap();
        let r = t.log_amplitude_end.exp();
        assert!(u.abs() < 1e-8 * r, "u(X) = {u} at eigen-momentum {k}");
        // and away from eigenvalues u(X) does not vanish
        let off = k + 0.5 * PI / 12.0 / 2.0;
        let u_off = rk4_u(|x| 4.0 * (-x).exp(), off, 12.0, 1e-4);
        assert!(u_off.abs() > 1e-3 * r);
    }
}

#[test]
fn halving_tolerance_moves_theta_less_than_error_estimate() {
    let specs = [
        PotentialSpec::exponential(4.0, 1.0),
        PotentialSpec::power(1.0, 0.5),
        PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0),
        PotentialSpec::step_power(1.0, 0.5),
    ];
    for spec in specs {
        let p = Potential::new(spec).unwrap();
        for (k, x) in [(1.0, 50.0), (3.7, 100.0)] {
            let tol = Tolerance::default();
            let coarse = integrate_phase(&p, k, x, &PhaseOptions::with_tol(tol)).unwrap();
            let fine = integrate_phase(
                &p,
                k,
                x,
                &PhaseOptions::with_tol(Tolerance::new(tol.rel / 2.0, tol.abs)),
            )
            .unwrap();
            let moved = (coarse.theta_end - fine.theta_end).abs();
            assert!(
                moved < coarse.err_estimate,
                "moved {moved:e}, estimate {:e}",
                coarse.err_estimate
            );
        }
    }
}

#[test]
fn f_is_continuous_in_k() {
    let p = Potential::new(PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0)).unwrap();
    for k in [0.9, 1.0, 2.4] {
        let a = f_at(&p, k, 40.0).unwrap();
        let b = f_at(&p, k + 1e-7, 40.0).unwrap();
        // slope is close to X = 40
        assert!((b - a) / 1e-7 > 20.0 && (b - a) / 1e-7 < 60.0);
    }
}

#[test]
fn free_case_is_exact_on_a_grid() {
    let zero = Potential::new(PotentialSpec::zero()).unwrap();
    for k in [0.01, 0.5, 1.0, 7.25, 100.0] {
        for x in [0.1, 1.0, 33.0, 1000.0] {
            assert_eq!(f_at(&zero, k, x).unwrap(), k * x);
        }
    }
}

fn family(idx: usize) -> PotentialSpec {
    [
        PotentialSpec::zero(),
        PotentialSpec::exponential(4.0, 1.0),
        PotentialSpec::power(1.0, 0.5),
        PotentialSpec::wigner_von_neumann(2.0, 2.0, 1.0),
        PotentialSpec::step_power(1.0, 0.5),
        PotentialSpec::exponential(-3.0, 0.5),
        PotentialSpec::random_decaying(2.0, 0.5, 3),
    ][idx]
        .clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phase_difference_respects_the_lower_bound(
        idx in 0usize..7, alpha in 0.3f64..4.0, gap in 0.01f64..3.0, x in 1.0f64..60.0,
    ) {
        let p = Potential::new(family(idx)).unwrap();
        let beta = alpha + gap;
        let diff = f_at(&p, beta, x).unwrap() - f_at(&p, alpha, x).unwrap();
        let bound = phase_difference_bound(&p, alpha, beta, x).unwrap();
        prop_assert!(diff >= bound - 1e-6, "diff {diff} < bound {bound}");
    }

    #[test]
    fn theta_sign_follows_the_potential(idx in 1usize..3, k in 0.3f64..5.0, x in 1.0f64..30.0) {
        // both families are nonnegative, so θ never increases
        let p = Potential::new(family(idx)).unwrap();
        let opts = PhaseOptions { checkpoint_spacing: Some(0.5), ..PhaseOptions::default() };
        let t = integrate_phase(&p, k, x, &opts).unwrap();
        prop_assert!(t.checkpoints.windows(2).all(|w| w[1].theta <= w[0].theta + 1e-12));
        prop_assert_eq!(t.checkpoints[0].theta, 0.0);
    }
}
