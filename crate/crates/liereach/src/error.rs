//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enumeration.
///
/// Numerical analysis code mostly returns values; errors are reserved for
/// genuine contract violations (mismatched dimensions, exhausted jets,
/// malformed input files) and for floating-point range failures that would
/// otherwise poison downstream results with NaN/Inf.
#[derive(Debug, Error)]
pub enum Error {
    /// Scalar or matrix evaluation left the representable range
    /// (e.g. e^{λt} overflowed for the requested t).
    #[error("evaluation out of range at t = {t}: {detail}")]
    Range { t: f64, detail: String },

    /// Two operands that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right} ({context})")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// Jets anchored at different times cannot be combined.
    #[error("jet anchor mismatch: {left} vs {right}")]
    AnchorMismatch { left: f64, right: f64 },

    /// A derivative was requested from an order-0 jet. Upstream this means
    /// "inconclusive at this jet depth", never a controllability verdict.
    #[error("jet exhausted: no derivative orders left (order 0)")]
    JetExhausted,

    /// Matrix-backend and structure-backend values were mixed.
    #[error("backend mismatch: {0}")]
    BackendMismatch(&'static str),

    /// An operation was invoked on a backend that does not support it.
    #[error("unsupported for this backend: {0}")]
    Unsupported(&'static str),

    /// A spec file failed validation; `path` is the offending key path.
    #[error("invalid spec at `{path}`: {detail}")]
    InvalidSpec { path: String, detail: String },

    /// An operator flagged skew-Hermitian is not (within tolerance).
    #[error("operator `{name}` is not skew-Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NotSkewHermitian { name: String, defect: f64, tol: f64 },

    /// The initial state is too far from unit norm to renormalize silently.
    #[error("initial state norm {norm} differs from 1 by more than {tol}")]
    NotUnitNorm { norm: f64, tol: f64 },

    /// Propagation produced a non-finite state.
    #[error("propagation diverged (non-finite state) at t = {t}")]
    NonFinite { t: f64 },

    /// A switching word's compensation made a drift interval negative.
    #[error(
        "infeasible switching word: compensated drift interval is {remaining:.6e} (control time {control_time:.6e} at n = {n} exceeds the final drift arc)"
    )]
    InfeasibleWord {
        remaining: f64,
        control_time: f64,
        n: u32,
    },

    /// Structure constants failed antisymmetry or the Jacobi identity.
    #[error("invalid structure constants: {0}")]
    InvalidAlgebra(String),

    /// Underlying I/O failure.
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Underlying JSON syntax failure.
    #[error("json error in `{path}`: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
