//! Control-functional accelerated quasi-Monte Carlo integration.
//!
//! The crate is `no_std` and needs only `alloc`. It provides
//!
//! - low-discrepancy point sets (Halton with reverse-radix scrambling, Sobol
//!   with a digital shift, rank-1 lattices) together with the random shift
//!   and baker's-transform randomizations, plus fill-distance/separation
//!   diagnostics for node sets ([`points`]);
//! - tensor-product Wendland kernels with closed-form single and double
//!   integrals over the unit cube ([`kernels`]);
//! - kernel interpolation of an integrand and the exact integral of the
//!   interpolant ([`interpolate`]);
//! - the plain QMC average, the control-functional (CF) estimator and its
//!   folded variant, the closed-form worst-case error and the budget split
//!   rule ([`estimators`]);
//! - the six Genz test families with exact integrals ([`genz`]);
//! - the convergence campaign harness ([`bench`]) and the Gaussian-process
//!   hyper-parameter marginalization workload ([`gp`]).
//!
//! File formats, reporting and the command-line front end live in the
//! companion `cfqmc` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
mod error;
pub mod estimators;
pub mod genz;
pub mod gp;
pub mod interpolate;
pub mod kernels;
pub mod linalg;
mod math;
pub mod points;
pub mod rng;

pub use crate::error::{Error, Result};
pub use crate::estimators::{EstimateReport, Integrand, Method};
pub use crate::genz::{GenzFamily, GenzInstance};
pub use crate::interpolate::Interpolant;
pub use crate::kernels::{KernelSpec, Smoothness};
pub use crate::points::{GeometryMetrics, Point, PointSet};
