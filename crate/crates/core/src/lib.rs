//! Pseudospectral simulation and verification toolkit for the 1-D periodic
//! fractional Keller-Segel system with logistic growth.
//!
//! ```text
//! u_t = -mu Λ^α u + chi ∂x(u Λ^{β-1} H v) + r u (1 - u)
//! v_t = -nu Λ^β v - lambda v + u
//! ```
//!
//! on `[-π, π)`. Spatial operators are Fourier multipliers ([`spectral`]),
//! time stepping is adaptive Dormand-Prince 5(4) ([`integrator`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod cli;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod model;
pub mod peaks;
pub mod spectral;

pub use error::{Error, Result};

/// Version string recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
