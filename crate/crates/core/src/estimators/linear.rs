use nalgebra::{Matrix3, Vector3};

use super::EstimatorError;

/// Weighted straight-line fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    pub covariance: f64,
    pub chi2: f64,
    pub n_points: usize,
}

/// Closed-form weighted least squares. Without `sigma` all weights are one
/// and the parameter errors are scaled by the residual scatter.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LinearFit, EstimatorError> {
    let n = x.len();
    if y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(EstimatorError::InvalidData);
    }
    if n < 2 {
        return Err(EstimatorError::TooFewPoints { needed: 2, got: n });
    }
    let weights: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / (v * v)).collect(),
        None => vec![1.0; n],
    };
    if x.iter().chain(y).chain(&weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w <= 0.0) {
        return Err(EstimatorError::InvalidData);
    }
    let sw: f64 = weights.iter().sum();
    let mx = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() / sw;
    let my = weights.iter().zip(y).map(|(w, v)| w * v).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        sxx += weights[i] * dx * dx;
        sxy += weights[i] * dx * (y[i] - my);
    }
    if sxx <= 1e-300 || sxx <= 1e-24 * weights.iter().zip(x).map(|(w, v)| w * v * v).sum::<f64>() {
        return Err(EstimatorError::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = (0..n).map(|i| weights[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let scale = if sigma.is_none() && n > 2 { chi2 / (n - 2) as f64 } else if sigma.is_none() { 0.0 } else { 1.0 };
    let var_slope = scale / sxx;
    let var_intercept = scale * (1.0 / sw + mx * mx / sxx);
    Ok(LinearFit {
        slope,
        intercept,
        slope_err: var_slope.sqrt(),
        intercept_err: var_intercept.sqrt(),
        covariance: -mx * var_slope,
        chi2,
        n_points: n,
    })
}

/// Sinusoidal fringe `A cos(phi - phi0) + offset` fitted as a linear model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyFit {
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub phase_offset: f64,
    pub offset: f64,
    /// `2 A / N`
    pub contrast: f64,
    pub contrast_err: f64,
    /// Amplitude exceeds three standard errors.
    pub significant: bool,
}

/// Fits `S_z(phi)` samples; `sigma` is the per-point uncertainty (unit
/// weights and residual-scaled errors when absent).
pub fn ramsey_contrast_fit(
    phases: &[f64],
    values: &[f64],
    sigma: Option<&[f64]>,
    n_atoms: f64,
) -> Result<RamseyFit, EstimatorError> {
    let n = phases.len();
    if values.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(EstimatorError::InvalidData);
    }
    if n < 5 {
        return Err(EstimatorError::Underdetermined(format!("{n} phase points, need at least 5")));
    }
    let span = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - phases.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < std::f64::consts::PI {
        return Err(EstimatorError::Underdetermined(format!("phases span {span:.3} rad, need at least pi")));
    }
    if !(n_atoms > 0.0) {
        return Err(EstimatorError::InvalidData);
    }
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for i in 0..n {
        let w = sigma.map_or(1.0, |s| 1.0 / (s[i] * s[i]));
        let row = Vector3::new(phases[i].cos(), phases[i].sin(), 1.0);
        normal += w * row * row.transpose();
        rhs += w * values[i] * row;
    }
    let inverse = normal.try_inverse().ok_or(EstimatorError::Singular)?;
    let coef = inverse * rhs;
    let chi2: f64 = (0..n)
        .map(|i| {
            let w = sigma.map_or(1.0, |s| 1.0 / (s[i] * s[i]));
            let model = coef[0] * phases[i].cos() + coef[1] * phases[i].sin() + coef[2];
            w * (values[i] - model).powi(2)
        })
        .sum();
    let cov = if sigma.is_none() { inverse * (chi2 / (n - 3) as f64) } else { inverse };
    let (a, b) = (coef[0], coef[1]);
    let amplitude = a.hypot(b);
    let amplitude_err = if amplitude > 0.0 {
        ((a * a * cov[(0, 0)] + b * b * cov[(1, 1)] + 2.0 * a * b * cov[(0, 1)]) / (amplitude * amplitude))
            .max(0.0)
            .sqrt()
    } else {
        (0.5 * (cov[(0, 0)] + cov[(1, 1)])).max(0.0).sqrt()
    };
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(n_atoms);
    let significant = amplitude > 3.0 * amplitude_err && amplitude > 1e-12 * scale;
    Ok(RamseyFit {
        amplitude,
        amplitude_err,
        phase_offset: b.atan2(a),
        offset: coef[2],
        contrast: 2.0 * amplitude / n_atoms,
        contrast_err: 2.0 * amplitude_err / n_atoms,
        significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_line() {
        let f = weighted_linear_fit(&[0.0, 1.0], &[0.5, 13.5], None).unwrap();
        assert!((f.slope - 13.0).abs() < 1e-14 && (f.intercept - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_abscissa() {
        assert!(matches!(weighted_linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], None), Err(EstimatorError::DegenerateAbscissa)));
    }

    #[test]
    fn weighted_errors_match_closed_form() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.1, 4.9, 7.0];
        let s = [0.1; 4];
        let f = weighted_linear_fit(&x, &y, Some(&s)).unwrap();
        // sxx = sum w (x - 1.5)^2 = 100 * 5
        assert!((f.slope_err - (1.0f64 / 500.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn noiseless_fringe_recovered() {
        let phases: Vec<f64> = (0..20).map(|i| i as f64 * 2.0 * std::f64::consts::PI / 20.0).collect();
        let values: Vec<f64> = phases.iter().map(|p| 0.95 * 100.0 * (p - 0.4).cos() + 3.0).collect();
        let f = ramsey_contrast_fit(&phases, &values, None, 200.0).unwrap();
        assert!((f.contrast - 0.95).abs() < 1e-12);
        assert!((f.phase_offset - 0.4).abs() < 1e-12);
        assert!((f.offset - 3.0).abs() < 1e-12);
    }

    #[test]
    fn flat_fringe_is_not_significant() {
        let phases: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let values = vec![2.0; 12];
        let f = ramsey_contrast_fit(&phases, &values, None, 100.0).unwrap();
        assert!(f.contrast.abs() < 1e-12);
        assert!(!f.significant);
    }

    #[test]
    fn short_fringe_rejected() {
        assert!(ramsey_contrast_fit(&[0.0, 1.0, 2.0, 3.0], &[0.0; 4], None, 1.0).is_err());
        assert!(ramsey_contrast_fit(&[0.0, 0.5, 1.0, 1.5, 2.0], &[0.0; 5], None, 1.0).is_err());
    }
}
