//! Numerical engine for frequency-modulated optomechanical sideband cooling.
//!
//! Frequencies are in units of the bare mechanical frequency ω_m.

#![no_std]
// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod analytics;
pub mod bessel;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod steadystate;

pub use error::{Error, Mode, Result};
pub use model::{make_synchronous, FullPhysicalParams, MomentState, Modulation, SystemParams};
pub use num_complex::Complex64;
