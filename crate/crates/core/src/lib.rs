//! Periodic flow-rate reconstruction from time-resolved vessel areas.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod area;
pub mod error;
pub mod fourier;
pub mod hemodynamics;
pub mod io;
pub mod ode;
pub mod optimizer;
pub mod parallel;
pub mod pipeline;
pub mod riccati;
pub mod scalar;
pub mod sensitivity;
pub mod synth;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
