//! Exact simulation of N-particle two-mode collective-spin interferometry in
//! the Dicke basis, with multi-parameter quantum/classical Fisher analysis.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI live
//! in the companion `gravispin` crate.
//!
//! Layout:
//! * [`dicke`]: states, collective operators, rotations, named states
//! * [`channels`]: preparation, phase, and dephasing maps and the full pipeline
//! * [`fisher`]: QFI/CFI matrices, probability-derivative engines, CRB inversion
//! * [`distributions`]: measurement statistics, Husimi grids, figure panels
//! * [`feasibility`]: laboratory parameters to simulator parameters
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channels;
pub mod convention;
pub mod dicke;
pub mod distributions;
pub mod error;
pub mod feasibility;
pub mod fisher;
pub mod linalg;

pub use convention::JzConvention;
pub use error::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// `e^{i theta}` without going through the generic complex exponential.
#[inline]
pub(crate) fn phase(theta: f64) -> C64 {
    C64::new(libm::cos(theta), libm::sin(theta))
}

/// Offset used by the figure-reproduction configs for all small parameters.
pub const FIGURE_BASE_OFFSET: f64 = 1e-8;
