use std::f64::consts::{FRAC_PI_2, PI};

use super::{CollectiveSpinState, MomentSet};
use crate::error::{invalid, Error, Result};
use crate::optimize::minimize_on_interval;

/// Wineland parameter as a function of readout quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingResult {
    pub alphas: Vec<f64>,
    pub xi2_of_alpha: Vec<f64>,
    pub xi2_min: f64,
    /// `xi^2(alpha_opt - pi/2)`
    pub xi2_max: f64,
    /// In `[0, pi)`.
    pub alpha_opt: f64,
    pub contrast: f64,
}

/// Closed-form extrema of the quadrature variance for moments whose mean
/// lies along +x: `(var_min, var_max, alpha_opt)`.
pub fn quadrature_extrema(aligned: &MomentSet) -> (f64, f64, f64) {
    let cov = &aligned.covariance;
    let (vz, vy, cyz) = (cov[(2, 2)], cov[(1, 1)], cov[(1, 2)]);
    let center = 0.5 * (vz + vy);
    let half_diff = 0.5 * (vz - vy);
    let radius = half_diff.hypot(cyz);
    // Var(alpha) = center + half_diff cos(2 alpha) + cyz sin(2 alpha)
    let alpha = 0.5 * (cyz.atan2(half_diff) + PI);
    (center - radius, center + radius, alpha.rem_euclid(PI))
}

/// `xi^2(alpha) = N Var(S_alpha) / |<S>|^2` on a uniform grid over `[0, pi)`
/// with the optimum quadrature found in closed form.
///
/// Moments whose mean is not along +x are first rotated into that frame.
pub fn squeezing_scan(moments: &MomentSet, grid_points: usize) -> Result<SqueezingResult> {
    if grid_points < 8 {
        return Err(invalid("grid_points", format!("{grid_points} < 8")));
    }
    if moments.spin_length() == 0.0 {
        return Err(Error::DegenerateState);
    }
    let aligned = moments.aligned_to_x()?;
    let n = aligned.n_atoms as f64;
    let norm = n / aligned.spin_length().powi(2);
    let alphas: Vec<f64> = (0..grid_points).map(|i| PI * i as f64 / grid_points as f64).collect();
    let xi2_of_alpha = alphas
        .iter()
        .map(|&a| aligned.quadrature_variance(a).map(|v| v * norm))
        .collect::<Result<Vec<_>>>()?;
    let (var_min, var_max, alpha_opt) = quadrature_extrema(&aligned);
    Ok(SqueezingResult {
        alphas,
        xi2_of_alpha,
        xi2_min: var_min * norm,
        xi2_max: var_max * norm,
        alpha_opt,
        contrast: aligned.contrast(),
    })
}

/// `(xi2_min, xi2_max)` without the grid.
pub fn wineland_extrema(moments: &MomentSet) -> Result<(f64, f64)> {
    if moments.spin_length() == 0.0 {
        return Err(Error::DegenerateState);
    }
    let aligned = moments.aligned_to_x()?;
    let norm = aligned.n_atoms as f64 / aligned.spin_length().powi(2);
    let (lo, hi, _) = quadrature_extrema(&aligned);
    Ok((lo * norm, hi * norm))
}

/// One-axis twisting of an `n_atoms` coherent state along x, followed by
/// contrast dephasing and additive technical noise `technical_fraction * N/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistingModel {
    pub n_atoms: usize,
    pub contrast: f64,
    pub technical_fraction: f64,
}

impl TwistingModel {
    pub fn ideal(n_atoms: usize) -> Self {
        Self { n_atoms, contrast: 1.0, technical_fraction: 0.0 }
    }

    pub fn moments(&self, twist: f64) -> Result<MomentSet> {
        let state = CollectiveSpinState::coherent(self.n_atoms, FRAC_PI_2, 0.0)?.oat_evolve(twist, 0.0);
        let extra = self.technical_fraction * self.n_atoms as f64 / 4.0;
        Ok(state.moments().dephased(self.contrast)?.with_transverse_noise(extra))
    }

    /// `(xi2_min, xi2_max)` at twisting strength `twist`.
    pub fn xi2(&self, twist: f64) -> Result<(f64, f64)> {
        wineland_extrema(&self.moments(twist)?)
    }

    /// Twisting strength minimizing `xi2_min`, searched over
    /// `[0, 3 N^{1/3} + 3]` and refined by golden section.
    pub fn optimum(&self) -> Result<(f64, f64)> {
        let upper = 3.0 * (self.n_atoms as f64).cbrt() + 3.0;
        let mut failure = None;
        let (q, xi2) = minimize_on_interval(
            |q| match self.xi2(q) {
                Ok((lo, _)) => lo,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            0.0,
            upper,
            96,
            1e-10,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok((q, xi2)),
        }
    }
}
