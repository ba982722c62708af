//! Numerical laboratory for quantizing motion constrained to a planar curve by
//! a stiff confining potential, and for comparing the resulting effective
//! dynamics with direct quantizations on the curve.
//!
//! The crate is `no_std` (with `alloc`); IO, configuration and the command-line
//! driver live in the `confine` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classical;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod pool;
pub mod potentials;
pub mod qsolve;
pub mod reduction;
pub mod series;

pub use error::{Error, Result};
pub use pool::{Sequential, WorkPool};
