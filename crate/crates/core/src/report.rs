//! CSV renderings of the result types.
//!
//! Every table has a fixed header row and prints floats with 17 significant
//! digits, so identical inputs give byte-identical files.

use std::fmt::Write;

use crate::bounds::{BoundReport, SpacingRow};
use crate::eigensolver::EigenvalueSet;
use crate::norms::RatioTrace;

/// Round-trippable float: 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn eigenvalue_csv(set: &EigenvalueSet) -> String {
    let mut out = String::from("k,E,residual,method\n");
    for ((k, e), r) in set.eigen_momenta.iter().zip(&set.eigen_energies).zip(&set.residuals) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(*k),
            fmt_f64(*e),
            fmt_f64(*r),
            set.method.as_str()
        );
    }
    out
}

/// Shooting eigenvalues beside the oracle eigenvalue of the same index.
/// Rows are paired by order; unmatched rows leave the oracle columns empty.
pub fn comparison_csv(prufer: &EigenvalueSet, oracle: &EigenvalueSet) -> String {
    let mut out = String::from("k,E,residual,method,oracle_E,rel_diff\n");
    for (i, ((k, e), r)) in prufer
        .eigen_momenta
        .iter()
        .zip(&prufer.eigen_energies)
        .zip(&prufer.residuals)
        .enumerate()
    {
        let (oe, rel) = match oracle.eigen_energies.get(i) {
            Some(&oe) => (fmt_f64(oe), fmt_f64((e - oe).abs() / e.abs())),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(*k),
            fmt_f64(*e),
            fmt_f64(*r),
            prufer.method.as_str(),
            oe,
            rel
        );
    }
    out
}

pub fn bound_csv(report: &BoundReport) -> String {
    let mut out = String::from("X,alpha,beta,h,eigen_count,margin\n");
    for frag in &report.fragments {
        for w in &frag.windows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(frag.x_end),
                fmt_f64(w.alpha),
                fmt_f64(w.beta),
                fmt_f64(frag.h),
                w.eigen_count,
                fmt_f64(w.margin)
            );
        }
    }
    out
}

pub fn spacing_csv(rows: &[SpacingRow]) -> String {
    let mut out = String::from("k,dk,E,dE,h,dk_over_h\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.k),
            fmt_f64(r.dk),
            fmt_f64(r.e),
            fmt_f64(r.de),
            fmt_f64(r.h),
            fmt_f64(r.dk_over_h)
        );
    }
    out
}

pub fn trace_csv(trace: &RatioTrace) -> String {
    let mut out = String::from("x,ratio,cap\n");
    let cap = trace.cap.map(fmt_f64).unwrap_or_default();
    for p in &trace.points {
        let _ = writeln!(out, "{},{},{}", fmt_f64(p.x), fmt_f64(p.ratio), cap);
    }
    out
}
