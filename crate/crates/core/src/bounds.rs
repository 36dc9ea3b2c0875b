//! Eigenvalue-spacing bound for `H_X`.
//!
//! For `a > 0` put `h(X) = π/X + 2 I(X) / (a X)` with `I(X) = ∫_0^X |V|`.
//! If `α < β` satisfy `(β - α) X >= π + (1/β + 1/α) I(X)` then
//! `f_β(X) - f_α(X) >= π`, so some `k ∈ [α, β]` has `f_k(X) ∈ πℤ` and `H_X`
//! has an eigenvalue in `[α², β²]`. Any `[α, β] ⊂ [a, ∞)` of width `h(X)`
//! satisfies that criterion.
//!
//! The energy window here is `[α², β²]`. A statement with `[α²/4, β²/4]`
//! does not follow from the same argument, so it is not what gets checked.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{counting_function, eigenvalues_in_window, EigenvalueSet};
use crate::error::{Error, Result};
use crate::ode::Tolerance;
use crate::potential::{Potential, PotentialSpec};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(name, format!("must be finite and > 0, got {v}")))
    }
}

/// `h(X) = π/X + (2/(aX)) ∫_0^X |V|`.
pub fn h_of(pot: &Potential, a: f64, x_end: f64) -> Result<f64> {
    positive("a", a)?;
    positive("X", x_end)?;
    Ok(PI / x_end + 2.0 / (a * x_end) * pot.cumulative_abs(x_end)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub holds: bool,
    /// `(β - α)X - π - (1/β + 1/α) I(X)`
    pub margin: f64,
}

pub fn criterion_holds(pot: &Potential, alpha: f64, beta: f64, x_end: f64) -> Result<Criterion> {
    positive("alpha", alpha)?;
    positive("X", x_end)?;
    if !(beta > alpha) || !beta.is_finite() {
        return Err(Error::arg(
            "beta",
            format!("need finite beta > alpha = {alpha}, got {beta}"),
        ));
    }
    let margin = (beta - alpha) * x_end - PI - (1.0 / beta + 1.0 / alpha) * pot.cumulative_abs(x_end)?;
    Ok(Criterion {
        holds: margin >= 0.0,
        margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Window starts advance by `stride_fraction * width`.
    pub stride_fraction: f64,
    /// Diagnostic multiplier on the window width; 1 checks the bound as stated.
    pub h_scale: f64,
    /// Eigenvalues within `tau` (in momentum) of a window still count for it.
    pub tau: f64,
    pub tol: Tolerance,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            stride_fraction: 0.25,
            h_scale: 1.0,
            tau: 1e-8,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub alpha: f64,
    pub beta: f64,
    /// Eigenvalues with momentum in `(α - τ, β + τ]`.
    pub eigen_count: u64,
    /// Criterion margin for `[α, β]`.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(rename = "X")]
    pub x_end: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Sliding-window scan at one interval length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFragment {
    #[serde(rename = "X")]
    pub x_end: f64,
    /// `h(X)` before `h_scale` is applied.
    pub h: f64,
    pub width: f64,
    pub windows: Vec<WindowCheck>,
    pub violations: Vec<Violation>,
    pub min_count: Option<u64>,
}

pub fn verify_theorem(pot: &Potential, a: f64, x_end: f64, k_hi: f64, stride_fraction: f64) -> Result<BoundFragment> {
    let opts = VerifyOptions {
        stride_fraction,
        ..VerifyOptions::default()
    };
    verify_theorem_with(pot, a, x_end, k_hi, &opts)
}

/// Slides windows `[α, α + h(X)]`, `α = a, a + s, ...` with `α + h(X) <= k_hi`,
/// and counts eigenvalues in each from the zero counting function
/// `N(k) = ⌊f_k(X)/π⌋` as `N(β + τ) - N(α - τ)`.
pub fn verify_theorem_with(
    pot: &Potential,
    a: f64,
    x_end: f64,
    k_hi: f64,
    opts: &VerifyOptions,
) -> Result<BoundFragment> {
    positive("a", a)?;
    positive("X", x_end)?;
    if !(k_hi > a) || !k_hi.is_finite() {
        return Err(Error::arg("k_hi", format!("need finite k_hi > a = {a}, got {k_hi}")));
    }
    if !(opts.stride_fraction > 0.0 && opts.stride_fraction <= 1.0) {
        return Err(Error::arg(
            "stride_fraction",
            format!("must lie in (0, 1], got {}", opts.stride_fraction),
        ));
    }
    positive("h_scale", opts.h_scale)?;
    if !(opts.tau >= 0.0) || opts.tau >= a {
        return Err(Error::arg("tau", format!("must lie in [0, a), got {}", opts.tau)));
    }
    opts.tol.validate()?;

    let h = h_of(pot, a, x_end)?;
    let width = h * opts.h_scale;
    let stride = width * opts.stride_fraction;
    let count = if k_hi - a >= width {
        ((k_hi - a - width) / stride * (1.0 + 1e-12)).floor() as usize + 1
    } else {
        0
    };
    let alphas: Vec<f64> = (0..count).map(|j| a + j as f64 * stride).collect();

    let mass = pot.cumulative_abs(x_end)?;
    let windows: Vec<WindowCheck> = alphas
        .par_iter()
        .map(|&alpha| {
            let beta = alpha + width;
            let lo = counting_function(pot, x_end, alpha - opts.tau, opts.tol)?;
            let hi = counting_function(pot, x_end, beta + opts.tau, opts.tol)?;
            if hi < lo {
                return Err(Error::NonMonotoneCount {
                    k_lo: alpha - opts.tau,
                    k_hi: beta + opts.tau,
                    left: lo,
                    right: hi,
                });
            }
            Ok(WindowCheck {
                alpha,
                beta,
                eigen_count: (hi - lo) as u64,
                margin: (beta - alpha) * x_end - PI - (1.0 / beta + 1.0 / alpha) * mass,
            })
        })
        .collect::<Result<_>>()?;

    let violations = windows
        .iter()
        .filter(|w| w.eigen_count == 0)
        .map(|w| Violation {
            x_end,
            alpha: w.alpha,
            beta: w.beta,
        })
        .collect();
    let min_count = windows.iter().map(|w| w.eigen_count).min();
    Ok(BoundFragment {
        x_end,
        h,
        width,
        windows,
        violations,
        min_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackStat {
    #[serde(rename = "X")]
    pub x_end: f64,
    pub min_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub potential: PotentialSpec,
    pub a: f64,
    pub k_hi: f64,
    #[serde(rename = "X_values")]
    pub x_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub h_scale: f64,
    pub stride_fraction: f64,
    pub tau: f64,
    /// Always `"[alpha^2, beta^2]"`.
    pub energy_window: String,
    /// Reserved; constant energy shifts are not applied.
    pub energy_shift: Option<f64>,
    pub windows_checked: usize,
    pub violations: Vec<Violation>,
    pub slack_stats: Vec<SlackStat>,
    pub fragments: Vec<BoundFragment>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn bound_report(pot: &Potential, a: f64, x_values: &[f64], k_hi: f64, opts: &VerifyOptions) -> Result<BoundReport> {
    if x_values.is_empty() {
        return Err(Error::arg("X", "need at least one interval length"));
    }
    let fragments = x_values
        .iter()
        .map(|&x| verify_theorem_with(pot, a, x, k_hi, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport {
        potential: pot.spec().clone(),
        a,
        k_hi,
        x_values: x_values.to_vec(),
        h_values: fragments.iter().map(|f| f.h).collect(),
        h_scale: opts.h_scale,
        stride_fraction: opts.stride_fraction,
        tau: opts.tau,
        energy_window: "[alpha^2, beta^2]".to_string(),
        energy_shift: None,
        windows_checked: fragments.iter().map(|f| f.windows.len()).sum(),
        violations: fragments.iter().flat_map(|f| f.violations.iter().copied()).collect(),
        slack_stats: fragments
            .iter()
            .map(|f| SlackStat {
                x_end: f.x_end,
                min_count: f.min_count,
            })
            .collect(),
        fragments,
    })
}

/// The open momentum window `(mπ/X + ε, (m+1)π/X - ε)` between two free eigenvalues.
pub fn sharpness_window(x_end: f64, m: u64, epsilon: f64) -> Result<(f64, f64)> {
    positive("X", x_end)?;
    if m == 0 {
        return Err(Error::arg("m", "must be a positive integer"));
    }
    if !(epsilon > 0.0) || epsilon >= PI / (2.0 * x_end) {
        return Err(Error::arg(
            "epsilon",
            format!("must lie in (0, π/(2X)) = (0, {}), got {epsilon}", PI / (2.0 * x_end)),
        ));
    }
    let spacing = PI / x_end;
    Ok((m as f64 * spacing + epsilon, (m + 1) as f64 * spacing - epsilon))
}

/// True when the free operator has no eigenvalue in the window of width
/// `π/X - 2ε` strictly between the `m`-th and `(m+1)`-th free momenta.
pub fn sharpness_probe(x_end: f64, m: u64, epsilon: f64) -> Result<bool> {
    let (lo, hi) = sharpness_window(x_end, m, epsilon)?;
    let zero = Potential::new(PotentialSpec::zero())?;
    let set = eigenvalues_in_window(&zero, x_end, lo, hi)?;
    Ok(set.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingRow {
    pub k: f64,
    pub dk: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "dE")]
    pub de: f64,
    pub h: f64,
    pub dk_over_h: f64,
}

/// Consecutive gaps of an eigenvalue set against `h`.
pub fn spacing_rows(set: &EigenvalueSet, h: f64) -> Vec<SpacingRow> {
    set.eigen_momenta
        .windows(2)
        .zip(set.eigen_energies.windows(2))
        .map(|(k, e)| SpacingRow {
            k: k[1],
            dk: k[1] - k[0],
            e: e[1],
            de: e[1] - e[0],
            h,
            dk_over_h: (k[1] - k[0]) / h,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pot(spec: PotentialSpec) -> Potential {
        Potential::new(spec).unwrap()
    }

    #[test]
    fn h_closed_forms() {
        let zero = pot(PotentialSpec::zero());
        assert_relative_eq!(h_of(&zero, 1.0, 10.0).unwrap(), PI / 10.0);
        let e = pot(PotentialSpec::exponential(4.0, 1.0));
        assert_relative_eq!(h_of(&e, 1.0, 10.0).unwrap(), 1.114_122_9, epsilon = 1e-7);
        let p = pot(PotentialSpec::power(1.0, 0.5));
        assert_relative_eq!(h_of(&p, 2.0, 99.0).unwrap(), 0.213_551_5, epsilon = 1e-7);
        assert!(h_of(&zero, 0.0, 1.0).is_err());
    }

    #[test]
    fn criterion_examples() {
        let zero = pot(PotentialSpec::zero());
        let c = criterion_holds(&zero, 1.0, 2.0, PI).unwrap();
        assert_eq!(c.margin, 0.0);
        assert!(c.holds);
        let c = criterion_holds(&zero, 1.0, 1.0 + PI / 20.0, 10.0).unwrap();
        assert!(!c.holds);
        assert_relative_eq!(c.margin, -PI / 2.0, epsilon = 1e-14);
        let e = pot(PotentialSpec::exponential(4.0, 1.0));
        let c = criterion_holds(&e, 1.0, 2.0, 10.0).unwrap();
        assert!(c.holds);
        assert_relative_eq!(
            c.margin,
            10.0 - PI - 1.5 * 4.0 * (1.0 - (-10f64).exp()),
            epsilon = 1e-12
        );
        assert_relative_eq!(c.margin, 0.8586, epsilon = 1e-4);
    }

    #[test]
    fn free_windows_all_hit() {
        let zero = pot(PotentialSpec::zero());
        let frag = verify_theorem(&zero, 1.0, 20.0, 5.0, 0.25).unwrap();
        assert!(frag.violations.is_empty());
        assert!(frag.windows.len() > 90);
        assert_eq!(frag.min_count, Some(1));
    }

    #[test]
    fn halved_width_is_falsified() {
        let zero = pot(PotentialSpec::zero());
        let opts = VerifyOptions {
            h_scale: 0.5,
            ..VerifyOptions::default()
        };
        let frag = verify_theorem_with(&zero, 1.0, 20.0, 5.0, &opts).unwrap();
        assert!(!frag.violations.is_empty());
    }

    #[test]
    fn verify_rejects_bad_arguments() {
        let zero = pot(PotentialSpec::zero());
        assert!(verify_theorem(&zero, 1.0, 10.0, 0.5, 0.25).is_err());
        assert!(verify_theorem(&zero, 1.0, 10.0, 5.0, 0.0).is_err());
        assert!(verify_theorem(&zero, 1.0, 10.0, 5.0, 1.5).is_err());
        assert!(bound_report(&zero, 1.0, &[], 5.0, &VerifyOptions::default()).is_err());
    }

    #[test]
    fn window_narrower_than_range_gives_no_windows() {
        let e = pot(PotentialSpec::exponential(4.0, 1.0));
        let frag = verify_theorem(&e, 1.0, 1.0, 2.0, 0.25).unwrap();
        assert!(frag.h > 1.0);
        assert!(frag.windows.is_empty());
        assert_eq!(frag.min_count, None);
    }

    #[test]
    fn sharpness_examples() {
        assert!(sharpness_probe(PI, 1, 0.01).unwrap());
        assert!(sharpness_probe(10.0, 3, 0.05).unwrap());
        assert!(sharpness_probe(100.0, 50, 0.001).unwrap());
        assert!(sharpness_probe(PI, 1, 0.6).is_err());
        assert!(sharpness_probe(PI, 0, 0.1).is_err());
        let (lo, hi) = sharpness_window(PI, 1, 0.01).unwrap();
        assert_relative_eq!(lo, 1.01, epsilon = 1e-15);
        assert_relative_eq!(hi, 1.99, epsilon = 1e-15);
    }

    #[test]
    fn free_spacing_rows() {
        let zero = pot(PotentialSpec::zero());
        let set = eigenvalues_in_window(&zero, 10.0, 1.0, 4.0).unwrap();
        let h = h_of(&zero, 1.0, 10.0).unwrap();
        let rows = spacing_rows(&set, h);
        assert_eq!(rows.len(), set.len() - 1);
        for r in rows {
            assert_relative_eq!(r.dk, PI / 10.0, epsilon = 1e-10);
            assert_relative_eq!(r.dk_over_h, 1.0, epsilon = 1e-9);
        }
    }
}
