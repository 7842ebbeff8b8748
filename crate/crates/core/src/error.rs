use thiserror::Error;

/// Failure modes of the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Bessel evaluation did not converge for argument {re}{im:+}j")]
    Divergence { re: f64, im: f64 },

    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },

    #[error("matrix is not positive semidefinite (pivot {pivot:e} at row {row}, jitter up to {jitter:e})")]
    NotPsd { row: usize, pivot: f64, jitter: f64 },

    #[error("index {index} out of range {range}")]
    Index { index: usize, range: String },

    #[error("regularized Gram matrix is numerically singular")]
    Singular,

    #[error("degenerate correlation: alpha = {alpha} (need c0 * D > 0)")]
    Degenerate { alpha: f64 },

    #[error("symbol {index} has modulus {modulus}, expected 1")]
    Modulus { index: usize, modulus: f64 },

    #[error("channel estimate is zero; BPSK decision undefined")]
    ZeroChannel,

    #[error("cannot average an empty sequence")]
    Empty,

    #[error("pilot-percentage grid needs L_max >= {min}, got {l_max}")]
    Grid { l_max: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
