use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A potential parameter or document field failed validation.
    #[error("invalid potential spec: field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("potential evaluated outside its domain at x = {x}")]
    Domain { x: f64 },

    #[error(
        "quadrature on [{a}, {b}] did not converge: error estimate {estimate:e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepSizeUnderflow { x: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps before reaching x = {x_end} (stopped at x = {x})")]
    TooManySteps { x: f64, x_end: f64, max_steps: usize },

    #[error("f_k(X) = {f} is within {distance:e} of a multiple of pi at k = {k}; perturb k")]
    AmbiguousCount { k: f64, f: f64, distance: f64 },

    #[error("could not separate crossings in [{k_lo}, {k_hi}] after {halvings} pitch halvings")]
    MissedCrossing { k_lo: f64, k_hi: f64, halvings: usize },

    #[error("crossing count decreased from {left} at k = {k_lo} to {right} at k = {k_hi}")]
    NonMonotoneCount {
        k_lo: f64,
        k_hi: f64,
        left: i64,
        right: i64,
    },
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidSpec { .. } | Error::InvalidArgument { .. } | Error::Domain { .. }
        )
    }
}
