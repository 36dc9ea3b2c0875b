//! Dirichlet eigenvalues of `H_X = -d²/dx² + V` on `[0, X]`.
//!
//! Two independent routes:
//!
//! * Prüfer shooting: `k² ∈ σ(H_X)` iff `f_k(X) ∈ πℤ`. The momentum window is
//!   scanned on a grid, crossings of multiples of π are bracketed, then
//!   refined by a safeguarded secant iteration.
//! * Finite differences: the three-point Laplacian with Dirichlet ends gives
//!   a symmetric tridiagonal matrix; its eigenvalues are located by Sturm
//!   bisection on several meshes and Richardson-extrapolated in `h²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Tolerance;
use crate::potential::Potential;
use crate::prufer::f_at_with;
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PruferShooting,
    FdOracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PruferShooting => "prufer_shooting",
            Method::FdOracle => "fd_oracle",
        }
    }
}

/// Eigenvalues from one finite-difference mesh, before extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshLevel {
    pub h: f64,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSet {
    #[serde(rename = "X")]
    pub x_end: f64,
    pub k_window: [f64; 2],
    /// Sorted, strictly increasing. For oracle results with negative
    /// energies the momentum is reported as `-sqrt(|E|)`.
    pub eigen_momenta: Vec<f64>,
    pub eigen_energies: Vec<f64>,
    /// `|f_k(X) - mπ|` for shooting; Richardson error estimate for the oracle.
    pub residuals: Vec<f64>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mesh_levels: Vec<MeshLevel>,
}

impl EigenvalueSet {
    fn empty(x_end: f64, k_window: [f64; 2], method: Method) -> Self {
        Self {
            x_end,
            k_window,
            eigen_momenta: Vec::new(),
            eigen_energies: Vec::new(),
            residuals: Vec::new(),
            method,
            warnings: Vec::new(),
            mesh_levels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.eigen_momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigen_momenta.is_empty()
    }

    /// Number of eigenvalues with momentum in `[lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        let start = self.eigen_momenta.partition_point(|&k| k < lo);
        let end = self.eigen_momenta.partition_point(|&k| k <= hi);
        end.saturating_sub(start)
    }

    /// Energies inside `[e_lo, e_hi]`.
    pub fn energies_in(&self, e_lo: f64, e_hi: f64) -> Vec<f64> {
        self.eigen_energies
            .iter()
            .copied()
            .filter(|&e| e >= e_lo && e <= e_hi)
            .collect()
    }
}

fn signed_momentum(e: f64) -> f64 {
    e.signum() * e.abs().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub tol: Tolerance,
    /// Refinement stops once `|f_k(X) - mπ|` drops below this (radians).
    pub root_tol: f64,
    /// Grid samples per free spacing π/X, before phase-budget inflation.
    pub samples_per_spacing: f64,
    pub max_halvings: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            root_tol: 1e-10,
            samples_per_spacing: 4.0,
            max_halvings: 6,
        }
    }
}

fn check_window(x_end: f64, k_lo: f64, k_hi: f64) -> Result<()> {
    if !(x_end > 0.0) || !x_end.is_finite() {
        return Err(Error::arg("X", format!("must be finite and > 0, got {x_end}")));
    }
    if !(k_lo > 0.0) || !k_lo.is_finite() {
        return Err(Error::arg("k_lo", format!("must be finite and > 0, got {k_lo}")));
    }
    if !(k_hi >= k_lo) || !k_hi.is_finite() {
        return Err(Error::arg(
            "k_hi",
            format!("must be finite and >= k_lo = {k_lo}, got {k_hi}"),
        ));
    }
    Ok(())
}

/// Scan pitch in `k`: `π/(s X)` shrunk by the phase budget `1 + I(X)/(k_lo X)`.
pub fn scan_pitch(pot: &Potential, x_end: f64, k_lo: f64, samples_per_spacing: f64) -> Result<f64> {
    let mass = pot.cumulative_abs(x_end)?;
    Ok(PI / (samples_per_spacing * x_end) / (1.0 + mass / (k_lo * x_end)))
}

pub fn eigenvalues_in_window(pot: &Potential, x_end: f64, k_lo: f64, k_hi: f64) -> Result<EigenvalueSet> {
    eigenvalues_in_window_with(pot, x_end, k_lo, k_hi, &SearchOptions::default())
}

pub fn eigenvalues_in_window_with(
    pot: &Potential,
    x_end: f64,
    k_lo: f64,
    k_hi: f64,
    opts: &SearchOptions,
) -> Result<EigenvalueSet> {
    check_window(x_end, k_lo, k_hi)?;
    opts.tol.validate()?;
    if !(opts.samples_per_spacing >= 4.0) {
        return Err(Error::arg(
            "samples_per_spacing",
            format!(
                "need at least 4 samples per free spacing, got {}",
                opts.samples_per_spacing
            ),
        ));
    }
    let mut out = EigenvalueSet::empty(x_end, [k_lo, k_hi], Method::PruferShooting);
    if k_hi - k_lo < 2.0 * opts.root_tol {
        out.warnings.push(format!(
            "degenerate window [{k_lo}, {k_hi}] narrower than twice the root tolerance; returning no eigenvalues"
        ));
        return Ok(out);
    }

    let pitch = scan_pitch(pot, x_end, k_lo, opts.samples_per_spacing)?;
    let n = ((k_hi - k_lo) / pitch).ceil().max(1.0) as usize;
    let step = (k_hi - k_lo) / n as f64;
    let grid: Vec<f64> = (0..=n)
        .map(|j| if j == n { k_hi } else { k_lo + j as f64 * step })
        .collect();
    let f = |k: f64| f_at_with(pot, k, x_end, opts.tol);
    let values: Vec<f64> = grid.par_iter().map(|&k| f(k)).collect::<Result<_>>()?;

    let mut brackets = Vec::new();
    // An eigenvalue sitting exactly on the left edge is invisible to the
    // floor-count comparison below.
    let edge_m = (values[0] / PI).round();
    if values[0] >= edge_m * PI && values[0] - edge_m * PI < opts.root_tol {
        out.eigen_momenta.push(k_lo);
        out.residuals.push((values[0] - edge_m * PI).abs());
    }
    for j in 0..n {
        split_bracket(
            &f,
            (grid[j], values[j]),
            (grid[j + 1], values[j + 1]),
            0,
            opts,
            &mut brackets,
        )?;
    }

    let roots: Vec<(f64, f64)> = brackets
        .par_iter()
        .map(|&(lo, hi, m)| refine_root(&f, lo, hi, m, opts.root_tol))
        .collect::<Result<_>>()?;
    for (k, r) in roots {
        if out.eigen_momenta.last().is_none_or(|&last| k > last) {
            out.eigen_momenta.push(k);
            out.residuals.push(r);
        }
    }
    out.eigen_energies = out.eigen_momenta.iter().map(|k| k * k).collect();
    Ok(out)
}

type Sample = (f64, f64);

/// Collects `(left, right, m)` brackets each holding exactly one crossing
/// of `mπ`, halving the pitch where a grid cell holds more than one.
fn split_bracket<F>(
    f: &F,
    left: Sample,
    right: Sample,
    depth: usize,
    opts: &SearchOptions,
    out: &mut Vec<(Sample, Sample, f64)>,
) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let cl = (left.1 / PI).floor();
    let cr = (right.1 / PI).floor();
    if cr < cl {
        return Err(Error::NonMonotoneCount {
            k_lo: left.0,
            k_hi: right.0,
            left: cl as i64,
            right: cr as i64,
        });
    }
    if cr == cl {
        return Ok(());
    }
    if cr - cl == 1.0 && right.1 - left.1 <= PI {
        out.push((left, right, cr));
        return Ok(());
    }
    if depth >= opts.max_halvings {
        return Err(Error::MissedCrossing {
            k_lo: left.0,
            k_hi: right.0,
            halvings: depth,
        });
    }
    let mid_k = 0.5 * (left.0 + right.0);
    let mid = (mid_k, f(mid_k)?);
    split_bracket(f, left, mid, depth + 1, opts, out)?;
    split_bracket(f, mid, right, depth + 1, opts, out)
}

/// Illinois-modified regula falsi on `g(k) = f(k) - mπ` with `g(lo) < 0 <= g(hi)`,
/// falling back to bisection when the secant stalls.
fn refine_root<F>(f: &F, lo: Sample, hi: Sample, m: f64, root_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let target = m * PI;
    let (mut a, mut ga) = (lo.0, lo.1 - target);
    let (mut b, mut gb) = (hi.0, hi.1 - target);
    if gb.abs() < root_tol {
        return Ok((b, gb.abs()));
    }
    let mut side = 0i8;
    let mut best = if ga.abs() < gb.abs() {
        (a, ga.abs())
    } else {
        (b, gb.abs())
    };
    for iter in 0..200 {
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        let mut k = (a * gb - b * ga) / (gb - ga);
        // Every fourth iteration, or when the secant leaves the bracket interior, bisect.
        if iter % 4 == 3 || !(k > a && k < b) {
            k = 0.5 * (a + b);
        }
        let gk = f(k)? - target;
        if gk.abs() < best.1 {
            best = (k, gk.abs());
        }
        if gk.abs() < root_tol {
            return Ok((k, gk.abs()));
        }
        if gk < 0.0 {
            a = k;
            ga = gk;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = k;
            gb = gk;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best)
}

/// `⌊f_k(X)/π⌋`: the number of zeros of the Dirichlet solution in `(0, X]`,
/// which is the number of eigenvalues of `H_X` at or below `k²`.
pub fn counting_function(pot: &Potential, x_end: f64, k: f64, tol: Tolerance) -> Result<i64> {
    let f = f_at_with(pot, k, x_end, tol)?;
    Ok((f / PI).floor() as i64)
}

/// Candidate count of eigenvalues with energy at or below `k²`. Refuses to
/// answer when `f_k(X)` is within 1e-9 of a multiple of π.
pub fn crossing_count(pot: &Potential, x_end: f64, k: f64) -> Result<u64> {
    check_window(x_end, k, k)?;
    let f = f_at_with(pot, k, x_end, Tolerance::default())?;
    let nearest = (f / PI).round();
    let distance = (f - nearest * PI).abs();
    if distance < 1e-9 {
        return Err(Error::AmbiguousCount { k, f, distance });
    }
    Ok((f / PI).floor().max(0.0) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Grid spacings, strictly decreasing.
    pub mesh_sizes: Vec<f64>,
    /// Richardson-extrapolate across meshes in powers of `h²`.
    pub extrapolate: bool,
}

impl OracleConfig {
    /// Three halving meshes whose finest spacing is at most
    /// `min(1/(10 sqrt(E_hi)), X/400)`.
    pub fn for_window(x_end: f64, e_hi: f64) -> Self {
        let mut h = (x_end / 400.0).min(if e_hi > 0.0 { 0.1 / e_hi.sqrt() } else { f64::INFINITY });
        h *= 4.0;
        Self {
            mesh_sizes: vec![h, h / 2.0, h / 4.0],
            extrapolate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_sizes.is_empty() {
            return Err(Error::arg("mesh_sizes", "need at least one mesh"));
        }
        if self.mesh_sizes.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::arg("mesh_sizes", "mesh sizes must be finite and positive"));
        }
        if self.mesh_sizes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::arg("mesh_sizes", "mesh sizes must be strictly decreasing"));
        }
        Ok(())
    }

    fn finest(&self) -> f64 {
        *self.mesh_sizes.last().expect("validated nonempty")
    }
}

/// Tridiagonal discretisation of `-u'' + V u` on interior nodes `x_i = i h`.
fn fd_matrix(pot: &Potential, x_end: f64, h_target: f64) -> Result<(SymTridiagonal, f64)> {
    let n = (x_end / h_target).round().max(2.0) as usize;
    let h = x_end / n as f64;
    let inv_h2 = 1.0 / (h * h);
    let piecewise = !pot.breakpoints_in(0.0, x_end).is_empty()
        || matches!(
            pot.spec().family,
            crate::potential::Family::StepSequence { .. } | crate::potential::Family::RandomDecaying { .. }
        );
    let diag = (1..n)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * h;
            let v = if piecewise {
                // Dual-cell average, so jumps between nodes are seen at O(h²).
                pot.signed_integral(x - 0.5 * h, x + 0.5 * h)? / h
            } else {
                pot.value(x)
            };
            Ok(2.0 * inv_h2 + v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((SymTridiagonal::new(diag, &vec![-inv_h2; n - 2]), h))
}

/// Eigenvalues of `H_X` with energy in `[e_lo, e_hi]` from the finite-difference oracle.
pub fn fd_oracle_eigenvalues(
    pot: &Potential,
    x_end: f64,
    e_lo: f64,
    e_hi: f64,
    cfg: &OracleConfig,
) -> Result<EigenvalueSet> {
    if !(x_end > 0.0) || !x_end.is_finite() {
        return Err(Error::arg("X", format!("must be finite and > 0, got {x_end}")));
    }
    if !(e_lo < e_hi) || !e_lo.is_finite() || !e_hi.is_finite() {
        return Err(Error::arg(
            "E_hi",
            format!("need finite E_lo < E_hi, got [{e_lo}, {e_hi}]"),
        ));
    }
    cfg.validate()?;
    if e_hi > 0.0 && cfg.finest() > 0.1 / e_hi.sqrt() * (1.0 + 1e-12) {
        return Err(Error::arg(
            "mesh_sizes",
            format!(
                "finest spacing {} does not resolve E_hi = {e_hi}; need <= {}",
                cfg.finest(),
                0.1 / e_hi.sqrt()
            ),
        ));
    }

    let matrices = cfg
        .mesh_sizes
        .iter()
        .map(|&h| fd_matrix(pot, x_end, h))
        .collect::<Result<Vec<_>>>()?;
    let (finest, _) = matrices.last().expect("nonempty");
    // One spare index on each side so extrapolation can move values across the edges.
    let first = finest.count_below(e_lo).saturating_sub(1);
    let last = (finest.count_below(e_hi) + 1).min(finest.len());
    let indices: Vec<usize> = (first..last)
        .filter(|&i| matrices.iter().all(|(m, _)| i < m.len()))
        .collect();

    let per_mesh: Vec<Vec<f64>> = matrices
        .iter()
        .map(|(m, _)| indices.par_iter().map(|&i| m.eigenvalue(i, 1e-15)).collect())
        .collect();
    let hs: Vec<f64> = matrices.iter().map(|&(_, h)| h).collect();

    let mut out = EigenvalueSet::empty(x_end, [signed_momentum(e_lo), signed_momentum(e_hi)], Method::FdOracle);
    let mut kept = vec![false; indices.len()];
    for (j, _) in indices.iter().enumerate() {
        let column: Vec<f64> = per_mesh.iter().map(|level| level[j]).collect();
        let (value, err) = if cfg.extrapolate && column.len() > 1 {
            richardson(&hs, &column)
        } else {
            let v = *column.last().unwrap();
            let err = if column.len() > 1 {
                (v - column[column.len() - 2]).abs()
            } else {
                0.0
            };
            (v, err)
        };
        let margin = err.max(1e-12 * value.abs().max(1.0));
        if (value - e_lo).abs() <= margin || (value - e_hi).abs() <= margin {
            out.warnings.push(format!(
                "eigenvalue {value} lies within {margin:e} of the window boundary; membership is ambiguous"
            ));
        }
        if value >= e_lo && value <= e_hi {
            kept[j] = true;
            out.eigen_energies.push(value);
            out.residuals.push(err);
        }
    }
    out.eigen_momenta = out.eigen_energies.iter().map(|&e| signed_momentum(e)).collect();
    out.mesh_levels = hs
        .iter()
        .zip(&per_mesh)
        .map(|(&h, level)| MeshLevel {
            h,
            energies: level.iter().zip(&kept).filter_map(|(&e, &k)| k.then_some(e)).collect(),
        })
        .collect();
    Ok(out)
}

/// Neville extrapolation to `h = 0` of a polynomial in `h²`; returns the top entry
/// and the difference to the best lower-order estimate.
pub fn richardson(hs: &[f64], values: &[f64]) -> (f64, f64) {
    assert_eq!(hs.len(), values.len());
    let mut table = values.to_vec();
    let mut prev_best = *values.last().unwrap();
    for level in 1..values.len() {
        prev_best = *table.last().unwrap();
        let mut next = Vec::with_capacity(table.len() - 1);
        for i in 0..table.len() - 1 {
            let r = (hs[i] / hs[i + level]).powi(2);
            next.push((r * table[i + 1] - table[i]) / (r - 1.0));
        }
        table = next;
    }
    let best = table[0];
    (best, (best - prev_best).abs())
}
