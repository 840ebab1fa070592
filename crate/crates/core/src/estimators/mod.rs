//! Fitting and calibration routines.

mod calibration;
mod common_mode;
mod error;
mod linear;
mod lm;
mod models;
mod report;

pub use calibration::{calibrate_atom_number, fit_neighbor_scaling, AtomNumberEstimate, AtomNumberOptions};
pub use common_mode::{common_mode_regression, CommonModeResult};
pub use error::EstimatorError;
pub use linear::{ramsey_contrast_fit, weighted_linear_fit, LinearFit, RamseyFit};
pub use lm::{finite_difference_gradient, nlls_fit, FitOptions, FitResult, Model, Observation};
pub use models::{ExpPlusOne, LightShiftModel, PulsePhaseModel};
pub use report::{write_fit_csv, write_key_values};
