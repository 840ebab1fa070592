use super::EstimatorError;

#[derive(Debug, Clone, PartialEq)]
pub struct CommonModeResult {
    /// Per trap, the series with the fitted common component removed.
    pub corrected: Vec<Vec<f64>>,
    /// Regression coefficient of each trap on its regressor.
    pub coefficients: Vec<f64>,
    /// `1 - Var(corrected)/Var(raw)` per trap.
    pub removed_fraction: Vec<f64>,
    /// Some trap was reduced to (numerically) zero variance, i.e. the traps
    /// were perfectly correlated.
    pub degenerate: bool,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Regresses each trap's shot series on the mean of all other traps and
/// subtracts the predicted common component.
///
/// `series[t][s]` is shot `s` of trap `t`. All traps need the same number of
/// shots (at least 30) and there must be at least two traps.
pub fn common_mode_regression(series: &[Vec<f64>]) -> Result<CommonModeResult, EstimatorError> {
    let traps = series.len();
    if traps < 2 {
        return Err(EstimatorError::TooFewPoints { needed: 2, got: traps });
    }
    let shots = series[0].len();
    if shots < 30 {
        return Err(EstimatorError::TooFewPoints { needed: 30, got: shots });
    }
    if series.iter().any(|s| s.len() != shots || s.iter().any(|v| !v.is_finite())) {
        return Err(EstimatorError::InvalidData);
    }
    let totals: Vec<f64> = (0..shots).map(|s| series.iter().map(|t| t[s]).sum()).collect();
    let mut corrected = Vec::with_capacity(traps);
    let mut coefficients = Vec::with_capacity(traps);
    let mut removed_fraction = Vec::with_capacity(traps);
    let mut degenerate = false;
    for (t, y) in series.iter().enumerate() {
        let regressor: Vec<f64> = (0..shots).map(|s| (totals[s] - y[s]) / (traps - 1) as f64).collect();
        let (mx, my) = (mean(&regressor), mean(y));
        let sxx: f64 = regressor.iter().map(|x| (x - mx).powi(2)).sum();
        let scale: f64 = regressor.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if sxx <= 1e-24 * scale {
            return Err(EstimatorError::RankDeficient { trap: t });
        }
        let sxy: f64 = regressor.iter().zip(y).map(|(x, v)| (x - mx) * (v - my)).sum();
        let beta = sxy / sxx;
        let out: Vec<f64> = y.iter().zip(&regressor).map(|(v, x)| v - beta * (x - mx)).collect();
        let raw = variance(y);
        let after = variance(&out);
        if raw > 0.0 && after <= 1e-12 * raw {
            degenerate = true;
        }
        removed_fraction.push(if raw > 0.0 { 1.0 - after / raw } else { 0.0 });
        coefficients.push(beta);
        corrected.push(out);
    }
    Ok(CommonModeResult { corrected, coefficients, removed_fraction, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_traps_are_flagged() {
        let base: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64).collect();
        let r = common_mode_regression(&[base.clone(), base.clone(), base]).unwrap();
        assert!(r.degenerate);
        assert!(r.corrected.iter().flatten().all(|v| (v - r.corrected[0][0]).abs() < 1e-9));
    }

    #[test]
    fn constant_regressor_is_rank_deficient() {
        let a: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let b = vec![1.0; 40];
        assert!(matches!(common_mode_regression(&[a, b]), Err(EstimatorError::RankDeficient { trap: 0 })));
    }

    #[test]
    fn needs_two_traps_and_thirty_shots() {
        assert!(common_mode_regression(&[vec![0.0; 40]]).is_err());
        assert!(common_mode_regression(&[vec![0.0; 10], vec![1.0; 10]]).is_err());
    }
}
