//! Exact collective-spin dynamics in the symmetric (Dicke) manifold.
//!
//! States evolve by collective rotations and by diagonal phases such as
//! one-axis twisting; moments are computed from ladder-operator matrix
//! elements, never by sampling.

mod moments;
mod squeezing;
mod state;

pub use moments::{MomentSet, ALIGNMENT_TOL};
pub(crate) use moments::RawMoments;
pub use squeezing::{quadrature_extrema, squeezing_scan, wineland_extrema, SqueezingResult, TwistingModel};
pub use state::CollectiveSpinState;
