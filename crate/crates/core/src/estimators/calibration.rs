use rand::Rng;
use rayon::prelude::*;

use super::{weighted_linear_fit, EstimatorError, LinearFit};
use crate::seeds::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomNumberOptions {
    /// Declared detection-noise variance in `S_z` units, subtracted before
    /// scaling. Zero leaves the estimate uncorrected.
    pub detection_variance: f64,
    pub resamples: usize,
    /// Two-sided confidence level of the percentile interval.
    pub confidence: f64,
    pub seed: u64,
}

impl Default for AtomNumberOptions {
    fn default() -> Self {
        Self { detection_variance: 0.0, resamples: 1000, confidence: 0.95, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomNumberEstimate {
    pub n_est: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / n as f64;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Projection-noise atom number `N = 4 (Var(S_z) - detection variance)` from
/// coherent-state shots, with a percentile bootstrap interval.
pub fn calibrate_atom_number(s_z: &[f64], options: AtomNumberOptions) -> Result<AtomNumberEstimate, EstimatorError> {
    let n = s_z.len();
    if n < 2 {
        return Err(EstimatorError::TooFewPoints { needed: 2, got: n });
    }
    if s_z.iter().any(|v| !v.is_finite()) || !(options.detection_variance >= 0.0) {
        return Err(EstimatorError::InvalidData);
    }
    if options.resamples < 1000 || !(options.confidence > 0.0 && options.confidence < 1.0) {
        return Err(EstimatorError::InvalidData);
    }
    let estimate = |var: f64| 4.0 * (var - options.detection_variance);
    let variance = sample_variance(s_z.iter().copied(), n);
    let n_est = estimate(variance);
    if !(n_est > 0.0) {
        return Err(EstimatorError::ZeroVariance);
    }
    let mut boot: Vec<f64> = (0..options.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = derived_rng(options.seed, "bootstrap", b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimate(sample_variance(idx.iter().map(|&i| s_z[i]), n))
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - options.confidence);
    let pick = |q: f64| {
        let pos = q * (boot.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let j = (i + 1).min(boot.len() - 1);
        boot[i] * (1.0 - frac) + boot[j] * frac
    };
    Ok(AtomNumberEstimate { n_est, ci_low: pick(tail), ci_high: pick(1.0 - tail), resamples: options.resamples })
}

/// Straight-line fit of up-neighbour estimates against `cos^2(theta/2)`; the
/// slope is the total neighbour count.
pub fn fit_neighbor_scaling(thetas: &[f64], n_up: &[f64], sigma: Option<&[f64]>) -> Result<LinearFit, EstimatorError> {
    let abscissa: Vec<f64> = thetas.iter().map(|t| (t / 2.0).cos().powi(2)).collect();
    weighted_linear_fit(&abscissa, n_up, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn endpoints_fix_slope() {
        let f = fit_neighbor_scaling(&[0.0, PI], &[13.0, 0.0], None).unwrap();
        assert!((f.slope - 13.0).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
    }

    #[test]
    fn constant_shots_have_no_variance() {
        assert!(matches!(
            calibrate_atom_number(&[1.0; 50], AtomNumberOptions::default()),
            Err(EstimatorError::ZeroVariance)
        ));
    }

    #[test]
    fn bootstrap_is_seeded() {
        let data: Vec<f64> = (0..200).map(|i| ((i * 37) % 17) as f64 - 8.0).collect();
        let a = calibrate_atom_number(&data, AtomNumberOptions::default()).unwrap();
        let b = calibrate_atom_number(&data, AtomNumberOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low < a.n_est && a.n_est < a.ci_high);
    }
}
