//! Amalgamated norms of `V` and the growth of `I(x) = ∫_0^x |V|`.
//!
//! With cell masses `v_n = ∫_n^{n+1} |V|`:
//!
//! * `‖V‖_{ℓ^p(L¹)} = (Σ v_n^p)^{1/p}`; finiteness forces `I(x) = o(x^{1-1/p})`.
//! * `‖V‖_{ℓ^p_w(L¹)} = sup_s s · #{n : v_n > s}^{1/p} = δ`; then
//!   `Σ_{n<N} v_n <= δ p/(p-1) N^{1-1/p}`.
//!
//! Everything here works on the first `N` cells and says so in its output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Family, Potential, PotentialSpec, SequenceRule};

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("p", format!("must be finite and > 1, got {p}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmalgamNorm {
    /// `(Σ_{n<cells} v_n^p)^{1/p}`
    pub value: f64,
    pub cells: usize,
    /// Upper bound on the omitted `Σ_{n>=cells} v_n^p`, when the family admits one.
    pub tail_bound: Option<f64>,
}

impl AmalgamNorm {
    /// Upper bound on the untruncated norm.
    pub fn upper_bound(&self, p: f64) -> Option<f64> {
        self.tail_bound.map(|t| (self.value.powf(p) + t).powf(1.0 / p))
    }
}

pub fn amalgam_norm(pot: &Potential, p: f64, cells: usize) -> Result<AmalgamNorm> {
    check_p(p)?;
    let masses = pot.unit_cell_masses(cells)?;
    let sum: f64 = masses.iter().map(|v| v.powf(p)).sum();
    Ok(AmalgamNorm {
        value: sum.powf(1.0 / p),
        cells,
        tail_bound: tail_bound(pot, p, cells)?,
    })
}

/// `Σ_{n>=N} (n+1)^{-q} <= ∫_N^∞ t^{-q} dt`, valid for `N >= 1`, `q > 1`.
fn power_tail(q: f64, cells: usize) -> Option<f64> {
    (q > 1.0 && cells >= 1).then(|| (cells as f64).powf(1.0 - q) / (q - 1.0))
}

fn tail_bound(pot: &Potential, p: f64, cells: usize) -> Result<Option<f64>> {
    let spec: &PotentialSpec = pot.spec();
    Ok(match &spec.family {
        Family::Zero => Some(0.0),
        Family::Exponential { c, lambda } => {
            let first = c.abs() * (1.0 - (-lambda).exp()) / lambda;
            let r = (-lambda * p).exp();
            Some(first.powf(p) * r.powf(cells as f64) / (1.0 - r))
        }
        Family::Power { c, gamma } | Family::WignerVonNeumann { c, gamma, .. } => {
            power_tail(gamma * p, cells).map(|t| c.abs().powf(p) * t)
        }
        Family::RandomDecaying { c, eta, .. } => power_tail(eta * p, cells).map(|t| c.abs().powf(p) * t),
        Family::StepSequence { rule } => match rule {
            SequenceRule::Power { c, exponent } => power_tail(exponent * p, cells).map(|t| c.abs().powf(p) * t),
            SequenceRule::Values(v) => Some(v.iter().skip(cells).map(|x| x.abs().powf(p)).sum()),
        },
        Family::BumpTrain { bumps } => {
            let last = bumps
                .iter()
                .map(|b| (b.start + b.width).ceil() as usize)
                .max()
                .unwrap_or(0);
            let mut sum = 0.0;
            for n in cells..last {
                sum += pot.cell_mass(n)?.powf(p);
            }
            Some(sum)
        }
    })
}

/// Exact weak norm of a finite sequence: with the masses sorted descending,
/// the supremum over `s` is `max_j v_(j) j^{1/p}` (attained as `s ↑ v_(j)`).
pub fn weak_norm_of_masses(masses: &[f64], p: f64) -> f64 {
    let mut sorted: Vec<f64> = masses.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .iter()
        .enumerate()
        .map(|(j, v)| v * ((j + 1) as f64).powf(1.0 / p))
        .fold(0.0, f64::max)
}

pub fn weak_amalgam_norm(pot: &Potential, p: f64, cells: usize) -> Result<f64> {
    check_p(p)?;
    Ok(weak_norm_of_masses(&pot.unit_cell_masses(cells)?, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    /// `I(x) / x^{1-1/p}`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTrace {
    pub p: f64,
    pub points: Vec<TracePoint>,
    /// `δ p/(p-1)` for the weak check.
    pub cap: Option<f64>,
    /// Weak norm `δ` over the cells the trace covers.
    pub delta: Option<f64>,
}

impl RatioTrace {
    pub fn max_ratio(&self) -> f64 {
        self.points.iter().map(|p| p.ratio).fold(0.0, f64::max)
    }

    /// Every trace value is at most `cap + slack`.
    pub fn within_cap(&self, slack: f64) -> bool {
        match self.cap {
            Some(cap) => self.points.iter().all(|p| p.ratio <= cap + slack),
            None => true,
        }
    }

    /// `first / last` for the decay check.
    pub fn decay_factor(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(f), Some(l)) => f.ratio / l.ratio,
            _ => f64::NAN,
        }
    }
}

/// `2^lo, 2^(lo+1), ..., 2^hi`.
pub fn dyadic_grid(lo_exp: u32, hi_exp: u32) -> Vec<f64> {
    (lo_exp..=hi_exp).map(|j| 2f64.powi(j as i32)).collect()
}

fn ratio_points(pot: &Potential, p: f64, grid: &[f64]) -> Result<Vec<TracePoint>> {
    let e = 1.0 - 1.0 / p;
    grid.iter()
        .map(|&x| {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::arg(
                    "x_grid",
                    format!("grid points must be finite and > 0, got {x}"),
                ));
            }
            Ok(TracePoint {
                x,
                ratio: pot.cumulative_abs(x)? / x.powf(e),
            })
        })
        .collect()
}

/// Trace of `I(x)/x^{1-1/p}`, which tends to zero when `V ∈ ℓ^p(L¹)`.
pub fn growth_check_strong(pot: &Potential, p: f64, grid: &[f64]) -> Result<RatioTrace> {
    check_p(p)?;
    Ok(RatioTrace {
        p,
        points: ratio_points(pot, p, grid)?,
        cap: None,
        delta: None,
    })
}

/// Trace of `I(x)/x^{1-1/p}` with the cap `δ p/(p-1)`, `δ` the weak norm of
/// the first `⌈max x⌉` masses. The cap is guaranteed at integer `x`.
pub fn growth_check_weak(pot: &Potential, p: f64, grid: &[f64]) -> Result<RatioTrace> {
    check_p(p)?;
    let points = ratio_points(pot, p, grid)?;
    let cells = grid.iter().fold(1.0f64, |m, &x| m.max(x)).ceil() as usize;
    let delta = weak_amalgam_norm(pot, p, cells)?;
    Ok(RatioTrace {
        p,
        points,
        cap: Some(delta * p / (p - 1.0)),
        delta: Some(delta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCell {
    pub n: usize,
    /// `v_n^p`
    pub lhs: f64,
    /// `∫_n^{n+1} |V|^p`
    pub rhs: f64,
}

impl HolderCell {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol * self.rhs.max(1.0)
    }
}

pub fn holder_cells(pot: &Potential, p: f64, cells: usize) -> Result<Vec<HolderCell>> {
    check_p(p)?;
    (0..cells)
        .map(|n| {
            let lo = n as f64;
            Ok(HolderCell {
                n,
                lhs: pot.cell_mass(n)?.powf(p),
                rhs: pot.abs_pow_integral(lo, lo + 1.0, p)?,
            })
        })
        .collect()
}

/// `v_n^p <= ∫_n^{n+1} |V|^p` on the first `cells` cells, to 1e-10.
pub fn holder_embedding_check(pot: &Potential, p: f64, cells: usize) -> Result<bool> {
    Ok(holder_cells(pot, p, cells)?.iter().all(|c| c.holds(1e-10)))
}

/// Least-squares slope of `ln I(x)` against `ln x` over `x = 2^4, ..., 2^20`.
/// `None` when `I` is not positive throughout that range.
pub fn growth_exponent(pot: &Potential) -> Result<Option<f64>> {
    growth_exponent_over(pot, &dyadic_grid(4, 20))
}

pub fn growth_exponent_over(pot: &Potential, grid: &[f64]) -> Result<Option<f64>> {
    let mut pts = Vec::with_capacity(grid.len());
    for &x in grid {
        let i = pot.cumulative_abs(x)?;
        if !(i > 1e-12) {
            return Ok(None);
        }
        pts.push((x.ln(), i.ln()));
    }
    if pts.len() < 2 {
        return Ok(None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(Some(sxy / sxx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub potential: PotentialSpec,
    pub p: f64,
    pub cells: usize,
    pub lp_l1: f64,
    pub lp_l1_tail_bound: Option<f64>,
    pub lp_w_l1: f64,
    pub growth_exponent: Option<f64>,
    pub growth_ratio_trace: Vec<TracePoint>,
    /// `δ p/(p-1)` with `δ` over the trace's cells.
    pub weak_cap: f64,
    pub weak_cap_holds: bool,
}

pub fn norm_report(pot: &Potential, p: f64, cells: usize, grid: &[f64], fit_exponent: bool) -> Result<NormReport> {
    let strong = amalgam_norm(pot, p, cells)?;
    let weak = weak_amalgam_norm(pot, p, cells)?;
    let trace = growth_check_weak(pot, p, grid)?;
    Ok(NormReport {
        potential: pot.spec().clone(),
        p,
        cells,
        lp_l1: strong.value,
        lp_l1_tail_bound: strong.tail_bound,
        lp_w_l1: weak,
        growth_exponent: if fit_exponent { growth_exponent(pot)? } else { None },
        weak_cap_holds: trace.within_cap(1e-9),
        weak_cap: trace.cap.expect("weak trace carries a cap"),
        growth_ratio_trace: trace.points,
    })
}
