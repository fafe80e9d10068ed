//! IO layer for the collective-spin simulator: scenario files, deterministic
//! CSV/JSON products, figure reproduction, parameter sweeps, and the
//! feasibility calculator. All numerics live in `gravispin-core`; this crate
//! owns serialization, file layout, and parallel orchestration.

pub mod cache;
pub mod error;
pub mod mc;
pub mod output;
pub mod products;
pub mod reproduce;
pub mod scenario;
pub mod sweep;

pub const TOOL_NAME: &str = "gravispin";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{CliError, ExitCode};
