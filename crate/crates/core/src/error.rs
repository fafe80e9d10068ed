//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Failure modes of constructors and numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Zero particles: there is nothing to interfere.
    EmptyEnsemble,
    /// The requested state needs the m = 0 level, which only exists for even N.
    OddParticleCount { op: &'static str, n: u32 },
    /// Operator/state dimensions do not match.
    DimensionMismatch { expected: usize, got: usize },
    /// Dephasing magnitudes must be nonnegative.
    NegativeDelta(f64),
    /// A generator or density matrix failed the Hermiticity check.
    NonHermitian { max_asym: f64 },
    /// State vector is not normalized within tolerance.
    NotNormalized { norm_sq: f64 },
    /// Density matrix trace differs from one beyond tolerance.
    BadTrace { trace: f64 },
    /// A probability was negative beyond the allowed tolerance.
    InvalidProbability { index: usize, value: f64 },
    /// Finite-difference step must be positive.
    NonPositiveStep(f64),
    /// Fisher matrix could not be inverted; lists near-null directions.
    SingularMatrix { condition: f64, degenerate: String },
    /// Parameter not usable in this engine (e.g. dephasing magnitudes in the pure-state QFI).
    UnsupportedParameter(&'static str),
    /// A physical quantity that must be strictly positive was not.
    NonPositiveQuantity { name: &'static str, value: f64 },
    /// Catch-all for malformed inputs, with the offending field named.
    InvalidInput { field: &'static str, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyEnsemble => write!(f, "particle count must be at least 1"),
            Error::OddParticleCount { op, n } => {
                write!(f, "{op} requires an even particle count (the m = 0 level); got n = {n}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NegativeDelta(d) => write!(f, "dephasing magnitude must be >= 0, got {d}"),
            Error::NonHermitian { max_asym } => {
                write!(f, "matrix is not Hermitian (max |M - M^dag| = {max_asym:.3e})")
            }
            Error::NotNormalized { norm_sq } => {
                write!(f, "state not normalized: sum |c|^2 = {norm_sq:.15}")
            }
            Error::BadTrace { trace } => write!(f, "density matrix trace = {trace:.15}, expected 1"),
            Error::InvalidProbability { index, value } => {
                write!(f, "probability at outcome {index} is {value:.3e} < 0")
            }
            Error::NonPositiveStep(h) => write!(f, "finite-difference step must be > 0, got {h}"),
            Error::SingularMatrix { condition, degenerate } => {
                write!(
                    f,
                    "Fisher matrix is numerically singular (condition {condition:.3e}); \
                     degenerate directions: {degenerate}"
                )
            }
            Error::UnsupportedParameter(p) => {
                write!(f, "parameter {p} is not supported by this engine")
            }
            Error::NonPositiveQuantity { name, value } => {
                write!(f, "{name} must be strictly positive, got {value}")
            }
            Error::InvalidInput { field, reason } => write!(f, "invalid {field}: {reason}"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
