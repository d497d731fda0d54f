//! Files, reports, parallel drivers and the command line for `cfqmc-core`.
//!
//! - [`formats`]: point sets, interpolants, Genz instances and direction
//!   numbers as text.
//! - [`config`]: campaign configuration files.
//! - [`report`]: convergence CSV and SVG output.
//! - [`data`]: regression datasets for the GP workload.
//! - [`study`]: parallel campaign and GP-study drivers.
//! - [`cli`]: the `cfqmc` binary.

pub mod cli;
pub mod config;
pub mod data;
mod error;
pub mod formats;
pub mod report;
pub mod study;

pub use crate::error::{Error, Result};
