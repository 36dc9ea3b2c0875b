//! Modified Prüfer phase for the Dirichlet solution at momentum `k`.
//!
//! The solution of `-u'' + V u = k^2 u` with `u(0) = 0`, `u'(0) = 1` is
//! written `u = R sin(kx + θ)`, `u' = kR cos(kx + θ)`, which gives
//!
//! ```text
//! θ'     = V/(2k) * (cos(2kx + 2θ) - 1),   θ(0) = 0
//! (ln R)' = V/(2k) *  sin(2kx + 2θ),       R(0) = 1/k
//! ```
//!
//! The total phase `f_k(x) = kx + θ_k(x)` crosses multiples of π exactly at
//! the zeros of `u`, always upwards, so `⌊f_k(X)/π⌋` counts the zeros of `u`
//! in `(0, X]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerance};
use crate::potential::Potential;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseOptions {
    pub tol: Tolerance,
    /// Record `(x, θ, ln R)` every `spacing` units when set.
    pub checkpoint_spacing: Option<f64>,
}

impl PhaseOptions {
    pub fn with_tol(tol: Tolerance) -> Self {
        Self {
            tol,
            checkpoint_spacing: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub x: f64,
    pub theta: f64,
    pub log_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruferTrajectory {
    pub k: f64,
    pub x_end: f64,
    pub theta_end: f64,
    /// `k * x_end + theta_end`
    pub f_end: f64,
    pub log_amplitude_end: f64,
    /// Sum of the integrator's local error estimates.
    pub err_estimate: f64,
    pub steps: usize,
    pub checkpoints: Vec<Checkpoint>,
}

impl PruferTrajectory {
    /// `u(X) = R sin(f)` reconstructed from the Prüfer variables.
    pub fn u_end(&self) -> f64 {
        self.log_amplitude_end.exp() * self.f_end.sin()
    }
}

fn check_k_x(k: f64, x_end: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::arg("k", format!("momentum must be finite and > 0, got {k}")));
    }
    if !(x_end > 0.0) || !x_end.is_finite() {
        return Err(Error::arg(
            "X",
            format!("interval length must be finite and > 0, got {x_end}"),
        ));
    }
    Ok(())
}

#[inline]
fn rhs(v: f64, k: f64, x: f64, theta: f64) -> [f64; 2] {
    let (s, c) = (2.0 * (k * x + theta)).sin_cos();
    let scale = v / (2.0 * k);
    [scale * (c - 1.0), scale * s]
}

pub fn integrate_phase(pot: &Potential, k: f64, x_end: f64, opts: &PhaseOptions) -> Result<PruferTrajectory> {
    check_k_x(k, x_end)?;
    opts.tol.validate()?;

    let mut stops = pot.breakpoints_in(0.0, x_end);
    if let Some(spacing) = opts.checkpoint_spacing {
        if !(spacing > 0.0) {
            return Err(Error::arg("checkpoint_spacing", format!("must be > 0, got {spacing}")));
        }
        let mut j = 1.0;
        while j * spacing < x_end {
            stops.push(j * spacing);
            j += 1.0;
        }
        stops.sort_by(f64::total_cmp);
        stops.dedup();
    }
    stops.push(x_end);

    let mut y = [0.0, -k.ln()];
    let mut checkpoints = Vec::new();
    let record = opts.checkpoint_spacing.is_some();
    if record {
        checkpoints.push(Checkpoint {
            x: 0.0,
            theta: y[0],
            log_amplitude: y[1],
        });
    }

    let mut solver = Dopri5::new(opts.tol, (0.1f64).min(0.1 / k));
    let mut a = 0.0;
    for &b in &stops {
        match pot.constant_on(a, b) {
            Some(0.0) => {}
            Some(v) => solver.advance(|x, y: &[f64; 2]| rhs(v, k, x, y[0]), a, &mut y, b)?,
            None => solver.advance(|x, y: &[f64; 2]| rhs(pot.value(x), k, x, y[0]), a, &mut y, b)?,
        }
        if record {
            checkpoints.push(Checkpoint {
                x: b,
                theta: y[0],
                log_amplitude: y[1],
            });
        }
        a = b;
    }

    Ok(PruferTrajectory {
        k,
        x_end,
        theta_end: y[0],
        f_end: k * x_end + y[0],
        log_amplitude_end: y[1],
        err_estimate: solver.err_sum,
        steps: solver.steps,
        checkpoints,
    })
}

/// `f_k(X) = kX + θ_k(X)` at the default tolerance.
pub fn f_at(pot: &Potential, k: f64, x_end: f64) -> Result<f64> {
    f_at_with(pot, k, x_end, Tolerance::default())
}

pub fn f_at_with(pot: &Potential, k: f64, x_end: f64, tol: Tolerance) -> Result<f64> {
    Ok(integrate_phase(pot, k, x_end, &PhaseOptions::with_tol(tol))?.f_end)
}

/// Lower bound `(β - α)X - (1/β + 1/α) I(X)` on `f_β(X) - f_α(X)`, from
/// `|cos - 1| <= 2` applied to both phase equations.
pub fn phase_difference_bound(pot: &Potential, alpha: f64, beta: f64, x_end: f64) -> Result<f64> {
    check_k_x(alpha, x_end)?;
    if !(beta > alpha) || !beta.is_finite() {
        return Err(Error::arg(
            "beta",
            format!("need finite beta > alpha = {alpha}, got {beta}"),
        ));
    }
    let mass = pot.cumulative_abs(x_end)?;
    Ok((beta - alpha) * x_end - (1.0 / beta + 1.0 / alpha) * mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pot(spec: PotentialSpec) -> Potential {
        Potential::new(spec).unwrap()
    }

    #[test]
    fn free_phase_is_exact() {
        let zero = pot(PotentialSpec::zero());
        let t = integrate_phase(&zero, 3.0, 10.0, &PhaseOptions::default()).unwrap();
        assert_eq!(t.theta_end, 0.0);
        assert_eq!(t.f_end, 30.0);
        assert_eq!(t.steps, 0);
        assert_eq!(f_at(&zero, 3.0, 10.0).unwrap(), 30.0);
        let m = 7.0;
        assert_relative_eq!(f_at(&zero, PI / 10.0 * m, 10.0).unwrap(), m * PI, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        let zero = pot(PotentialSpec::zero());
        let opts = PhaseOptions::default();
        assert!(integrate_phase(&zero, 0.0, 1.0, &opts).is_err());
        assert!(integrate_phase(&zero, 1.0, -1.0, &opts).is_err());
        let tight = PhaseOptions::with_tol(Tolerance::new(1e-15, 1e-12));
        assert!(matches!(
            integrate_phase(&zero, 1.0, 1.0, &tight),
            Err(Error::InvalidArgument { name: "tol.rel", .. })
        ));
        assert!(phase_difference_bound(&zero, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_potential_hits_shifted_free_spectrum() {
        for c in [2.0, 0.5, -0.5] {
            let p = pot(PotentialSpec::constant_on(c, PI));
            for n in 1..=3 {
                let k = (f64::from(n * n) + c).sqrt();
                let f = f_at(&p, k, PI).unwrap();
                let m = (f / PI).round();
                assert!((f - m * PI).abs() < 1e-8, "c={c} n={n}: f={f}");
                assert_eq!(m as i32, n);
            }
        }
    }

    #[test]
    fn phase_difference_bound_closed_forms() {
        let zero = pot(PotentialSpec::zero());
        assert_eq!(phase_difference_bound(&zero, 1.0, 2.0, 10.0).unwrap(), 10.0);
        let e = pot(PotentialSpec::exponential(4.0, 1.0));
        let expected = 10.0 - 1.5 * 4.0 * (1.0 - (-10f64).exp());
        assert_relative_eq!(
            phase_difference_bound(&e, 1.0, 2.0, 10.0).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert_relative_eq!(expected, 4.00027, epsilon = 1e-5);
        let p = pot(PotentialSpec::power(1.0, 0.5));
        assert_relative_eq!(
            phase_difference_bound(&p, 1.0, 1.5, 99.0).unwrap(),
            19.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn checkpoints_start_at_zero_and_track_sign_of_v() {
        let opts = PhaseOptions {
            checkpoint_spacing: Some(0.25),
            ..PhaseOptions::default()
        };
        let positive = pot(PotentialSpec::exponential(4.0, 1.0));
        let t = integrate_phase(&positive, 1.3, 12.0, &opts).unwrap();
        assert_eq!(t.checkpoints[0].theta, 0.0);
        assert_relative_eq!(t.checkpoints[0].log_amplitude, -(1.3f64).ln());
        assert_eq!(t.checkpoints.last().unwrap().x, 12.0);
        assert!(t.checkpoints.windows(2).all(|w| w[1].theta <= w[0].theta + 1e-14));

        let negative = pot(PotentialSpec::constant_on(-3.0, 5.0));
        let t = integrate_phase(&negative, 2.1, 8.0, &opts).unwrap();
        assert!(t.checkpoints.windows(2).all(|w| w[1].theta >= w[0].theta - 1e-14));
        // θ is frozen once the plateau ends
        let after: Vec<_> = t.checkpoints.iter().filter(|c| c.x >= 5.0).collect();
        assert!(after.windows(2).all(|w| w[0].theta == w[1].theta));
    }
}
