//! Dirichlet eigenvalues of decaying half-line Schrödinger operators
//! `-d²/dx² + V` restricted to `[0, X]`, computed from the Prüfer phase, with
//! empirical checks of the eigenvalue-spacing bound
//! `h(X) = π/X + (2/(aX)) ∫_0^X |V|` and of the growth estimates for
//! `∫_0^x |V|` under amalgamated `ℓ^p` decay.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod eigensolver;
pub mod error;
pub mod norms;
pub mod ode;
pub mod potential;
pub mod prufer;
pub mod quadrature;
pub mod report;
pub mod tridiag;

pub use bounds::{
    bound_report, criterion_holds, h_of, sharpness_probe, spacing_rows, verify_theorem, verify_theorem_with,
    BoundFragment, BoundReport, Criterion, VerifyOptions,
};
pub use eigensolver::{
    crossing_count, eigenvalues_in_window, eigenvalues_in_window_with, fd_oracle_eigenvalues, EigenvalueSet, Method,
    OracleConfig, SearchOptions,
};
pub use error::{Error, Result};
pub use norms::{
    amalgam_norm, growth_check_strong, growth_check_weak, holder_embedding_check, norm_report, weak_amalgam_norm,
    NormReport, RatioTrace,
};
pub use ode::Tolerance;
pub use potential::{build_potential, Bump, Family, Potential, PotentialSpec, SequenceRule};
pub use prufer::{f_at, integrate_phase, phase_difference_bound, PhaseOptions, PruferTrajectory};
