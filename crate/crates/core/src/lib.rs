//! Simulation and estimation toolkit for spin squeezing in Rydberg-dressed
//! atomic ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dressing;
pub mod error;
pub mod estimators;
pub mod ising;
pub mod loss;
pub mod optimize;
pub mod quadrature;
pub mod seeds;
pub mod sequence;
pub mod spin;
pub mod units;

pub use error::{Error, Result};
pub use spin::{squeezing_scan, CollectiveSpinState, MomentSet, SqueezingResult};
